#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "veb/codec.hpp"
#include "veb/policy_tree.hpp"
#include "veb/random.hpp"

namespace veb {

// Height T - c + 1 of the node with 1-based level-order index n (c is the
// node's depth). Throws ConfigError when n is outside [1, node count].
int node_height(std::size_t n, int depth, int branching);

// Weight log(1 + h(node_of(k))) of the 1-based vector entry k, where
// node_of(k) = floor((k - 1) / (|A_j| + 1)) + 1 so each one-hot block shares
// the weight of its node.
double tree_weight(std::size_t k, const TreeShape& shape);

enum class LossKind {
  kTree,  // height-weighted Bernoulli log-likelihood
  kBce,   // all weights 1
};

std::vector<double> loss_weights(const TreeShape& shape, LossKind kind);

// sum_k w_k (x_k log p_k + (1 - x_k) log(1 - p_k)) with p = clamp(x_tilde,
// clip, 1 - clip). Always <= 0.
double tree_loss(std::span<const double> x, std::span<const double> x_tilde,
                 std::span<const double> weights, double clip = 1e-6);

// KL(N(mu, sigma^2) || N(0, I)) = 1/2 sum (mu^2 + sigma^2 - 1 - log sigma^2).
double kl_loss(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma);

// Encoder: x -> tanh hidden -> (mu, log sigma^2), both linear heads.
// Decoder: z -> tanh hidden -> logistic output.
struct VaeParameters {
  Eigen::MatrixXd enc_w;
  Eigen::VectorXd enc_b;
  Eigen::MatrixXd mu_w;
  Eigen::VectorXd mu_b;
  Eigen::MatrixXd logvar_w;
  Eigen::VectorXd logvar_b;
  Eigen::MatrixXd dec_w;
  Eigen::VectorXd dec_b;
  Eigen::MatrixXd out_w;
  Eigen::VectorXd out_b;

  static VaeParameters zeros(std::size_t input_dim, std::size_t hidden_dim,
                             std::size_t latent_dim);

  std::size_t size() const;
  void set_zero();
  // this += scale * other
  void add_scaled(const VaeParameters& other, double scale);
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  bool all_finite() const;
};

struct ForwardPass {
  Eigen::VectorXd hidden;
  Eigen::VectorXd mu;
  Eigen::VectorXd logvar;
  Eigen::VectorXd sigma;
  Eigen::VectorXd eps;
  Eigen::VectorXd z;
  Eigen::VectorXd dec_hidden;
  Eigen::VectorXd output;
};

class VaeNetwork {
 public:
  // All parameters zero.
  VaeNetwork(std::size_t input_dim, std::size_t hidden_dim,
             std::size_t latent_dim);
  // Weights uniform in [-s, s], s = sqrt(6 / (fan_in + fan_out)); zero biases.
  static VaeNetwork glorot(std::size_t input_dim, std::size_t hidden_dim,
                           std::size_t latent_dim, RandomSource& rng);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t latent_dim() const { return latent_dim_; }

  VaeParameters& params() { return params_; }
  const VaeParameters& params() const { return params_; }

  void encode(const Eigen::VectorXd& x, ForwardPass& pass) const;
  void decode(ForwardPass& pass) const;
  // z = mu + sigma * eps, then decode.
  ForwardPass forward(const Eigen::VectorXd& x, const Eigen::VectorXd& eps) const;

 private:
  std::size_t input_dim_;
  std::size_t hidden_dim_;
  std::size_t latent_dim_;
  VaeParameters params_;
};

struct ObjectiveTerms {
  double recon = 0.0;  // -(1 / (2 n_s)) sum_l tree_loss
  double kl = 0.0;
  double total() const { return recon + kl; }
};

// Per-datum objective with one reconstruction per noise vector in `eps`.
// When `grad` is non-null the analytic gradient is added into it.
ObjectiveTerms objective(const VaeNetwork& net, const Eigen::VectorXd& x,
                         std::span<const Eigen::VectorXd> eps,
                         std::span<const double> weights, double clip,
                         VaeParameters* grad = nullptr);

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t batch_size = 8;
  std::size_t samples = 2;  // reparameterized draws per datum
  std::size_t max_epochs = 2000;
  double convergence_tol = 1e-5;
  // Epochs per window in the convergence test.
  std::size_t convergence_window = 10;
  double clip = 1e-6;
  std::size_t hidden_dim = 64;
  std::size_t latent_dim = 8;
  LossKind loss = LossKind::kTree;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double recon = 0.0;  // per-datum means
  double kl = 0.0;
  double total = 0.0;
};

struct TrainResult {
  VaeNetwork net;
  std::vector<EpochLog> log;
  std::size_t epochs = 0;
  double final_loss = 0.0;
};

// Mini-batch SGD on sum_x [recon(x) + kl(x)]. Each epoch visits the data in
// a fresh random order in batches of batch_size. Training stops after
// max_epochs or when the mean loss of consecutive windows changes by less
// than convergence_tol. Throws DivergenceError on a non-finite loss.
TrainResult train(std::span<const EncodedTree> data, const TrainConfig& cfg);

void write_train_log(std::ostream& out, std::span<const EpochLog> log);

// Draws M trees: pick a source vector uniformly, pass it through the network
// with fresh noise, project to one-hot and decode. Each tree carries the
// projection confidences as node probabilities.
std::vector<PolicyTree> generate(const VaeNetwork& net,
                                 std::span<const EncodedTree> source,
                                 std::size_t count, RandomSource& rng,
                                 EmptySlot empty = EmptySlot::kPermit);

struct NetworkMeta {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double final_loss = 0.0;
};

// Text header (dims, seed, epochs, final loss) followed by the flattened
// parameters as raw doubles. Each line of `comment` becomes a '#' line.
void save_network(std::ostream& out, const VaeNetwork& net,
                  const NetworkMeta& meta, std::string_view comment = {});
VaeNetwork load_network(std::istream& in, NetworkMeta* meta = nullptr);

}  // namespace veb
