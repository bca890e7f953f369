#pragma once

// Reference implementations used only by tests. Each one is written
// directly from the mathematical definition and shares no code path with the
// library routine it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "veb/codec.hpp"
#include "veb/domain.hpp"
#include "veb/evaluator.hpp"
#include "veb/policy_tree.hpp"
#include "veb/random.hpp"
#include "veb/vae.hpp"

namespace oracle {

using veb::Action;
using veb::DomainSpec;
using veb::PolicyTree;

inline std::size_t ipow(std::size_t b, int e) {
  std::size_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

// Level-order position of the node reached from the root by `obs`.
inline std::size_t slot_of_path(const std::vector<int>& obs, int b) {
  const int c = static_cast<int>(obs.size()) + 1;
  std::size_t first = 0;
  for (int d = 1; d < c; ++d) first += ipow(static_cast<std::size_t>(b), d - 1);
  std::size_t offset = 0;
  for (int o : obs) offset = offset * static_cast<std::size_t>(b) + static_cast<std::size_t>(o);
  return first + offset;
}

// ZZOH encoding built by walking observation paths instead of node indices.
inline std::vector<double> zzoh_by_paths(const PolicyTree& tree, int num_actions) {
  const int b = tree.branching();
  const std::size_t block = static_cast<std::size_t>(num_actions) + 1;
  std::vector<double> out(tree.size() * block, 0.0);
  std::function<void(std::vector<int>&)> visit = [&](std::vector<int>& obs) {
    const std::size_t n = slot_of_path(obs, b);
    const Action a = tree.at(n);
    out[n * block + (a == veb::kEmpty ? 0 : static_cast<std::size_t>(a) + 1)] = 1.0;
    if (static_cast<int>(obs.size()) + 1 == tree.depth()) return;
    for (int o = 0; o < b; ++o) {
      obs.push_back(o);
      visit(obs);
      obs.pop_back();
    }
  };
  std::vector<int> root;
  visit(root);
  return out;
}

// Negative binary cross-entropy, -sum [x log p + (1 - x) log(1 - p)], clamped.
inline double plain_bce(const std::vector<double>& x, const std::vector<double>& p,
                        double clip) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double q = std::min(std::max(p[k], clip), 1.0 - clip);
    s += x[k] * std::log(q) + (1.0 - x[k]) * std::log(1.0 - q);
  }
  return -s;
}

inline PolicyTree random_tree(int depth, int b, int num_actions, veb::RandomSource& rng,
                              double empty_rate = 0.0) {
  PolicyTree t(depth, b);
  for (std::size_t n = 0; n < t.size(); ++n) {
    t.set(n, static_cast<Action>(rng.index(static_cast<std::size_t>(num_actions))));
  }
  if (empty_rate > 0.0) {
    // Empty whole subtrees so the tree stays well formed.
    for (std::size_t n = 1; n < t.size(); ++n) {
      const std::size_t parent = (n - 1) / static_cast<std::size_t>(b);
      if (t.at(parent) == veb::kEmpty || rng.uniform() < empty_rate) t.set(n, veb::kEmpty);
    }
  }
  return t;
}

// Expected return of a fixed i plan against a weighted set of j trees,
// summed over every (s_0, k, s_1, o_i, o_j, ...) trajectory.
inline double plan_value(const DomainSpec& spec, const PolicyTree& plan,
                         const std::vector<PolicyTree>& trees,
                         const std::vector<double>& weights, int depth) {
  const int b_i = spec.num_obs_i();
  const int b_j = spec.num_obs_j();
  std::function<double(int, int, std::size_t, std::size_t, const PolicyTree&)> go =
      [&](int t, int s, std::size_t in, std::size_t jn, const PolicyTree& jt) {
        const Action ai = plan.at(in);
        const Action aj = jt.at(jn);
        double v = spec.R(s, ai, aj);
        if (t == depth) return v;
        for (int s2 = 0; s2 < spec.num_states(); ++s2) {
          const double pt = spec.T(s, ai, aj, s2);
          if (pt == 0.0) continue;
          for (int oi = 0; oi < spec.num_obs_i(); ++oi) {
            const double pi = spec.Oi(s2, ai, aj, oi);
            if (pi == 0.0) continue;
            for (int oj = 0; oj < spec.num_obs_j(); ++oj) {
              const double pj = spec.Oj(s2, aj, oj);
              if (pj == 0.0) continue;
              v += pt * pi * pj *
                   go(t + 1, s2, in * static_cast<std::size_t>(b_i) + 1 + static_cast<std::size_t>(oi),
                      jn * static_cast<std::size_t>(b_j) + 1 + static_cast<std::size_t>(oj), jt);
            }
          }
        }
        return v;
      };
  double total = 0.0;
  for (std::size_t k = 0; k < trees.size(); ++k) {
    for (int s = 0; s < spec.num_states(); ++s) {
      const double p0 = spec.initial_belief[static_cast<std::size_t>(s)];
      if (p0 > 0.0) total += weights[k] * p0 * go(1, s, 0, 0, trees[k]);
    }
  }
  return total;
}

// Optimal value by enumerating i's action-observation histories and, at each
// one, the explicit list of joint trajectories consistent with it (no
// normalisation, no merging of equal belief points).
inline double enumerated_optimum(const DomainSpec& spec,
                                 const std::vector<PolicyTree>& trees,
                                 const std::vector<double>& weights, int depth) {
  struct Traj {
    int s;
    std::size_t k;
    std::size_t jn;
    double p;
  };
  std::function<double(const std::vector<Traj>&, int)> best =
      [&](const std::vector<Traj>& paths, int t) {
        double top = -std::numeric_limits<double>::infinity();
        for (Action ai = 0; ai < spec.num_actions_i(); ++ai) {
          double v = 0.0;
          for (const Traj& x : paths) v += x.p * spec.R(x.s, ai, trees[x.k].at(x.jn));
          if (t < depth) {
            for (int oi = 0; oi < spec.num_obs_i(); ++oi) {
              std::vector<Traj> next;
              for (const Traj& x : paths) {
                const Action aj = trees[x.k].at(x.jn);
                for (int s2 = 0; s2 < spec.num_states(); ++s2) {
                  for (int oj = 0; oj < spec.num_obs_j(); ++oj) {
                    const double p = x.p * spec.T(x.s, ai, aj, s2) *
                                     spec.Oi(s2, ai, aj, oi) * spec.Oj(s2, aj, oj);
                    if (p > 0.0) {
                      next.push_back({s2, x.k, trees[x.k].child(x.jn, oj), p});
                    }
                  }
                }
              }
              if (!next.empty()) v += best(next, t + 1);
            }
          }
          top = std::max(top, v);
        }
        return top;
      };
  std::vector<Traj> start;
  for (std::size_t k = 0; k < trees.size(); ++k) {
    for (int s = 0; s < spec.num_states(); ++s) {
      const double p = weights[k] * spec.initial_belief[static_cast<std::size_t>(s)];
      if (p > 0.0) start.push_back({s, k, 0, p});
    }
  }
  return best(start, 1);
}

// Central finite-difference gradient of the full per-datum objective.
inline std::vector<double> numeric_gradient(veb::VaeNetwork net, const Eigen::VectorXd& x,
                                            std::span<const Eigen::VectorXd> eps,
                                            std::span<const double> w, double clip,
                                            double h) {
  std::vector<double> flat = net.params().flatten();
  std::vector<double> grad(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double keep = flat[i];
    flat[i] = keep + h;
    net.params().assign(flat);
    const double up = veb::objective(net, x, eps, w, clip).total();
    flat[i] = keep - h;
    net.params().assign(flat);
    const double down = veb::objective(net, x, eps, w, clip).total();
    flat[i] = keep;
    grad[i] = (up - down) / (2.0 * h);
  }
  net.params().assign(flat);
  return grad;
}

}  // namespace oracle
