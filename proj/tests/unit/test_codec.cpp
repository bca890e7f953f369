#include <doctest.h>

#include <sstream>

#include "../support/oracles.hpp"
#include "veb/codec.hpp"
#include "veb/error.hpp"

using namespace veb;

namespace {

EncodedTree prob(std::vector<double> v, TreeShape shape) {
  return {shape, EncodingKind::kProb, std::move(v)};
}

}  // namespace

TEST_CASE("dimensions") {
  CHECK((TreeShape{3, 2, 2}.dim()) == 12);
  CHECK((TreeShape{3, 2, 3}.dim()) == 28);
  CHECK((TreeShape{5, 4, 3}.dim()) == 126);
}

TEST_CASE("alphabet rows are the identity basis") {
  const ActionAlphabet a(3);
  CHECK(a.row(kEmpty) == std::vector<double>{1, 0, 0, 0});
  CHECK(a.row(2) == std::vector<double>{0, 0, 0, 1});
  CHECK(a.action_at(0) == kEmpty);
}

TEST_CASE("encode examples") {
  const ActionAlphabet a(3);
  CHECK(zzoh_encode(PolicyTree(2, 2, {0, 1, 2}), a).values ==
        std::vector<double>{0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  CHECK(zzoh_encode(PolicyTree(2, 2, {0, kEmpty, 2}), a).values ==
        std::vector<double>{0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1});
}

TEST_CASE("decode examples") {
  const ActionAlphabet a(3);
  const TreeShape s{3, 2, 2};
  EncodedTree x{s, EncodingKind::kBinary, {0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}};
  CHECK(zzoh_decode(x, a) == PolicyTree(2, 2, {0, 1, 2}));
  EncodedTree empty{s, EncodingKind::kBinary, {1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0}};
  CHECK(zzoh_decode(empty, a) == PolicyTree(2, 2));
  EncodedTree bad{s, EncodingKind::kBinary, {1, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0}};
  CHECK_THROWS_AS(zzoh_decode(bad, a), CodecError);
  EncodedTree none{s, EncodingKind::kBinary, std::vector<double>(12, 0.0)};
  CHECK_THROWS_AS(zzoh_decode(none, a), CodecError);
}

TEST_CASE("encoder agrees with a path-walking encoder") {
  RandomSource rng(12);
  for (auto [A, b, T] : {std::array{3, 2, 3}, std::array{5, 4, 3}, std::array{2, 3, 4}}) {
    const ActionAlphabet a(A);
    for (int i = 0; i < 200; ++i) {
      const PolicyTree t = oracle::random_tree(T, b, A, rng, 0.2);
      const EncodedTree x = zzoh_encode(t, a);
      CHECK(x.values == oracle::zzoh_by_paths(t, A));
      CHECK(zzoh_decode(x, a) == t);
      CHECK(zzoh_encode(zzoh_decode(x, a), a).values == x.values);
    }
  }
}

TEST_CASE("projection examples") {
  const ActionAlphabet a(3);
  const TreeShape s{3, 2, 1};
  auto p = onehot_project(prob({0.1, 0.7, 0.1, 0.1}, s), a);
  CHECK(p.binary.values == std::vector<double>{0, 1, 0, 0});
  CHECK(p.node_probs[0] == doctest::Approx(0.7));
  p = onehot_project(prob({0.25, 0.25, 0.25, 0.25}, s), a);
  CHECK(p.binary.values == std::vector<double>{1, 0, 0, 0});
  CHECK(p.node_probs[0] == doctest::Approx(0.25));
  p = onehot_project(prob({0.2, 0.2, 0.4, 0.2}, s), a);
  CHECK(p.binary.values == std::vector<double>{0, 0, 1, 0});
  CHECK(p.node_probs[0] == doctest::Approx(0.4));
  CHECK_THROWS_AS(onehot_project(prob({0, 0, 0, 0}, s), a), CodecError);
}

TEST_CASE("projection with EMPTY forbidden") {
  const ActionAlphabet a(3);
  const auto p = onehot_project(prob({0.9, 0.05, 0.03, 0.02}, TreeShape{3, 2, 1}), a,
                                EmptySlot::kForbid);
  CHECK(p.binary.values == std::vector<double>{0, 1, 0, 0});
  CHECK(p.node_probs[0] == doctest::Approx(0.05 / 0.1));
}

TEST_CASE("projecting a binary vector is the identity") {
  RandomSource rng(5);
  const ActionAlphabet a(3);
  for (int i = 0; i < 100; ++i) {
    EncodedTree x = zzoh_encode(oracle::random_tree(3, 2, 3, rng, 0.3), a);
    x.kind = EncodingKind::kProb;
    const auto p = onehot_project(x, a);
    CHECK(is_valid_binary(p.binary));
    CHECK(p.binary.values == x.values);
  }
}

TEST_CASE("matrix file round trip") {
  RandomSource rng(7);
  const ActionAlphabet a(5);
  std::vector<EncodedTree> rows;
  for (int i = 0; i < 5; ++i) rows.push_back(zzoh_encode(oracle::random_tree(3, 4, 5, rng), a));
  std::stringstream ss;
  write_encoded(ss, rows);
  const auto back = read_encoded(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].values == rows[i].values);
    CHECK(back[i].shape == rows[i].shape);
  }
}
