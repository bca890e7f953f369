#include "veb/vae.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "veb/error.hpp"

namespace veb {

int node_height(std::size_t n, int depth, int branching) {
  const std::size_t count = tree_node_count(branching, depth);
  if (n < 1 || n > count) {
    throw ConfigError("node index " + std::to_string(n) + " outside [1, " +
                      std::to_string(count) + "]");
  }
  return depth - node_depth(n - 1, branching) + 1;
}

double tree_weight(std::size_t k, const TreeShape& shape) {
  if (k < 1 || k > shape.dim()) {
    throw ConfigError("vector index " + std::to_string(k) + " outside [1, " +
                      std::to_string(shape.dim()) + "]");
  }
  const std::size_t node = (k - 1) / shape.block() + 1;
  return std::log(1.0 + node_height(node, shape.depth, shape.branching));
}

std::vector<double> loss_weights(const TreeShape& shape, LossKind kind) {
  std::vector<double> w(shape.dim(), 1.0);
  if (kind == LossKind::kTree) {
    for (std::size_t k = 1; k <= w.size(); ++k) w[k - 1] = tree_weight(k, shape);
  }
  return w;
}

double tree_loss(std::span<const double> x, std::span<const double> x_tilde,
                 std::span<const double> weights, double clip) {
  if (x.size() != x_tilde.size() || x.size() != weights.size()) {
    throw ConfigError("tree_loss: length mismatch");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double p = std::clamp(x_tilde[k], clip, 1.0 - clip);
    total += weights[k] * (x[k] * std::log(p) + (1.0 - x[k]) * std::log1p(-p));
  }
  return total;
}

double kl_loss(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma) {
  double total = 0.0;
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    const double var = sigma[k] * sigma[k];
    total += mu[k] * mu[k] + var - 1.0 - std::log(var);
  }
  return 0.5 * total;
}

// ------------------------------------------------------------ parameters ---

namespace {

template <class Fn>
void for_each_tensor(VaeParameters& p, Fn&& fn) {
  fn(p.enc_w); fn(p.enc_b);
  fn(p.mu_w); fn(p.mu_b);
  fn(p.logvar_w); fn(p.logvar_b);
  fn(p.dec_w); fn(p.dec_b);
  fn(p.out_w); fn(p.out_b);
}

template <class Fn>
void for_each_tensor(const VaeParameters& p, Fn&& fn) {
  fn(p.enc_w); fn(p.enc_b);
  fn(p.mu_w); fn(p.mu_b);
  fn(p.logvar_w); fn(p.logvar_b);
  fn(p.dec_w); fn(p.dec_b);
  fn(p.out_w); fn(p.out_b);
}

template <class Fn>
void for_each_pair(VaeParameters& a, const VaeParameters& b, Fn&& fn) {
  fn(a.enc_w, b.enc_w); fn(a.enc_b, b.enc_b);
  fn(a.mu_w, b.mu_w); fn(a.mu_b, b.mu_b);
  fn(a.logvar_w, b.logvar_w); fn(a.logvar_b, b.logvar_b);
  fn(a.dec_w, b.dec_w); fn(a.dec_b, b.dec_b);
  fn(a.out_w, b.out_w); fn(a.out_b, b.out_b);
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& a) {
  return a.unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

}  // namespace

VaeParameters VaeParameters::zeros(std::size_t input_dim, std::size_t hidden_dim,
                                   std::size_t latent_dim) {
  const auto D = static_cast<Eigen::Index>(input_dim);
  const auto H = static_cast<Eigen::Index>(hidden_dim);
  const auto Z = static_cast<Eigen::Index>(latent_dim);
  VaeParameters p;
  p.enc_w = Eigen::MatrixXd::Zero(H, D);
  p.enc_b = Eigen::VectorXd::Zero(H);
  p.mu_w = Eigen::MatrixXd::Zero(Z, H);
  p.mu_b = Eigen::VectorXd::Zero(Z);
  p.logvar_w = Eigen::MatrixXd::Zero(Z, H);
  p.logvar_b = Eigen::VectorXd::Zero(Z);
  p.dec_w = Eigen::MatrixXd::Zero(H, Z);
  p.dec_b = Eigen::VectorXd::Zero(H);
  p.out_w = Eigen::MatrixXd::Zero(D, H);
  p.out_b = Eigen::VectorXd::Zero(D);
  return p;
}

std::size_t VaeParameters::size() const {
  std::size_t n = 0;
  for_each_tensor(*this, [&](const auto& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

void VaeParameters::set_zero() {
  for_each_tensor(*this, [](auto& t) { t.setZero(); });
}

void VaeParameters::add_scaled(const VaeParameters& other, double scale) {
  for_each_pair(*this, other, [scale](auto& a, const auto& b) { a += scale * b; });
}

std::vector<double> VaeParameters::flatten() const {
  std::vector<double> flat;
  flat.reserve(size());
  for_each_tensor(*this, [&](const auto& t) {
    flat.insert(flat.end(), t.data(), t.data() + t.size());
  });
  return flat;
}

void VaeParameters::assign(std::span<const double> flat) {
  if (flat.size() != size()) throw ConfigError("parameter vector has wrong size");
  std::size_t offset = 0;
  for_each_tensor(*this, [&](auto& t) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.data());
    offset += static_cast<std::size_t>(t.size());
  });
}

bool VaeParameters::all_finite() const {
  bool ok = true;
  for_each_tensor(*this, [&](const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

// --------------------------------------------------------------- network ---

VaeNetwork::VaeNetwork(std::size_t input_dim, std::size_t hidden_dim,
                       std::size_t latent_dim)
    : input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      latent_dim_(latent_dim),
      params_(VaeParameters::zeros(input_dim, hidden_dim, latent_dim)) {
  if (input_dim == 0 || hidden_dim == 0 || latent_dim == 0) {
    throw ConfigError("network dimensions must be positive");
  }
}

VaeNetwork VaeNetwork::glorot(std::size_t input_dim, std::size_t hidden_dim,
                              std::size_t latent_dim, RandomSource& rng) {
  VaeNetwork net(input_dim, hidden_dim, latent_dim);
  auto fill = [&](Eigen::MatrixXd& w) {
    const double s = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = (2.0 * rng.uniform() - 1.0) * s;
      }
    }
  };
  auto& p = net.params_;
  fill(p.enc_w);
  fill(p.mu_w);
  fill(p.logvar_w);
  fill(p.dec_w);
  fill(p.out_w);
  return net;
}

void VaeNetwork::encode(const Eigen::VectorXd& x, ForwardPass& pass) const {
  pass.hidden = (params_.enc_w * x + params_.enc_b).array().tanh().matrix();
  pass.mu = params_.mu_w * pass.hidden + params_.mu_b;
  pass.logvar = params_.logvar_w * pass.hidden + params_.logvar_b;
  pass.sigma = (0.5 * pass.logvar.array()).exp().matrix();
}

void VaeNetwork::decode(ForwardPass& pass) const {
  pass.dec_hidden = (params_.dec_w * pass.z + params_.dec_b).array().tanh().matrix();
  pass.output = sigmoid(params_.out_w * pass.dec_hidden + params_.out_b);
}

ForwardPass VaeNetwork::forward(const Eigen::VectorXd& x,
                                const Eigen::VectorXd& eps) const {
  if (static_cast<std::size_t>(x.size()) != input_dim_ ||
      static_cast<std::size_t>(eps.size()) != latent_dim_) {
    throw ConfigError("forward: input or noise has the wrong dimension");
  }
  ForwardPass pass;
  encode(x, pass);
  pass.eps = eps;
  pass.z = pass.mu + pass.sigma.cwiseProduct(eps);
  decode(pass);
  return pass;
}

// ------------------------------------------------------------- objective ---

ObjectiveTerms objective(const VaeNetwork& net, const Eigen::VectorXd& x,
                         std::span<const Eigen::VectorXd> eps,
                         std::span<const double> weights, double clip,
                         VaeParameters* grad) {
  if (eps.empty()) throw ConfigError("objective: need at least one noise draw");
  const auto& p = net.params();
  ForwardPass pass;
  net.encode(x, pass);

  ObjectiveTerms terms;
  const double scale = 1.0 / (2.0 * static_cast<double>(eps.size()));
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));

  Eigen::VectorXd d_mu = Eigen::VectorXd::Zero(pass.mu.size());
  Eigen::VectorXd d_logvar = Eigen::VectorXd::Zero(pass.mu.size());
  Eigen::VectorXd d_out(x.size());

  for (const auto& e : eps) {
    pass.eps = e;
    pass.z = pass.mu + pass.sigma.cwiseProduct(e);
    net.decode(pass);
    const std::span<const double> ys(pass.output.data(),
                                     static_cast<std::size_t>(pass.output.size()));
    terms.recon -= scale * tree_loss(xs, ys, weights, clip);
    if (!grad) continue;

    // Outside the clamp window the loss is flat in the output.
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double y = pass.output[k];
      const bool active = y > clip && y < 1.0 - clip;
      d_out[k] = active ? scale * weights[static_cast<std::size_t>(k)] * (y - x[k]) : 0.0;
    }
    grad->out_w.noalias() += d_out * pass.dec_hidden.transpose();
    grad->out_b += d_out;
    const Eigen::VectorXd d_dec =
        (p.out_w.transpose() * d_out).cwiseProduct(
            (1.0 - pass.dec_hidden.array().square()).matrix());
    grad->dec_w.noalias() += d_dec * pass.z.transpose();
    grad->dec_b += d_dec;
    const Eigen::VectorXd d_z = p.dec_w.transpose() * d_dec;
    d_mu += d_z;
    d_logvar += (0.5 * d_z.array() * e.array() * pass.sigma.array()).matrix();
  }

  terms.kl = kl_loss(pass.mu, pass.sigma);
  if (grad) {
    d_mu += pass.mu;
    d_logvar += (0.5 * (pass.logvar.array().exp() - 1.0)).matrix();
    grad->mu_w.noalias() += d_mu * pass.hidden.transpose();
    grad->mu_b += d_mu;
    grad->logvar_w.noalias() += d_logvar * pass.hidden.transpose();
    grad->logvar_b += d_logvar;
    const Eigen::VectorXd d_hidden =
        (p.mu_w.transpose() * d_mu + p.logvar_w.transpose() * d_logvar)
            .cwiseProduct((1.0 - pass.hidden.array().square()).matrix());
    grad->enc_w.noalias() += d_hidden * x.transpose();
    grad->enc_b += d_hidden;
  }
  return terms;
}

// -------------------------------------------------------------- training ---

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (samples < 1) throw ConfigError("samples must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(clip > 0.0 && clip < 0.5)) throw ConfigError("clip must lie in (0, 0.5)");
  if (hidden_dim < 1 || latent_dim < 1) {
    throw ConfigError("hidden_dim and latent_dim must be >= 1");
  }
  if (convergence_window < 1) throw ConfigError("convergence_window must be >= 1");
}

namespace {

Eigen::VectorXd as_vector(const EncodedTree& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.values.data(),
                                           static_cast<Eigen::Index>(x.values.size()));
}

Eigen::VectorXd draw_noise(std::size_t dim, RandomSource& rng) {
  Eigen::VectorXd e(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = rng.normal();
  return e;
}

}  // namespace

TrainResult train(std::span<const EncodedTree> data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw EmptyInputError("train: empty dataset");
  const TreeShape shape = data.front().shape;
  for (const auto& x : data) {
    if (!(x.shape == shape) || x.values.size() != shape.dim()) {
      throw ConfigError("train: all vectors must share one shape");
    }
  }

  RandomSource init_rng(derive_seed(cfg.seed, "vae-init"));
  RandomSource rng(derive_seed(cfg.seed, "vae-train"));
  TrainResult result{VaeNetwork::glorot(shape.dim(), cfg.hidden_dim,
                                        cfg.latent_dim, init_rng),
                     {}, 0, 0.0};
  VaeNetwork& net = result.net;
  const std::vector<double> weights = loss_weights(shape, cfg.loss);
  std::vector<Eigen::VectorXd> inputs;
  inputs.reserve(data.size());
  for (const auto& x : data) inputs.push_back(as_vector(x));

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  VaeParameters grad =
      VaeParameters::zeros(shape.dim(), cfg.hidden_dim, cfg.latent_dim);
  std::vector<Eigen::VectorXd> eps(cfg.samples);
  const std::size_t window = cfg.convergence_window;
  double previous_window = 0.0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    EpochLog entry{epoch, 0.0, 0.0, 0.0};
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      grad.set_zero();
      for (std::size_t b = start; b < stop; ++b) {
        for (auto& e : eps) e = draw_noise(cfg.latent_dim, rng);
        const ObjectiveTerms terms =
            objective(net, inputs[order[b]], eps, weights, cfg.clip, &grad);
        entry.recon += terms.recon;
        entry.kl += terms.kl;
      }
      net.params().add_scaled(grad, -cfg.learning_rate);
    }
    const double n = static_cast<double>(data.size());
    entry.recon /= n;
    entry.kl /= n;
    entry.total = entry.recon + entry.kl;
    if (!std::isfinite(entry.total) || !net.params().all_finite()) {
      std::ostringstream msg;
      msg << "training diverged at epoch " << epoch
          << " (learning_rate=" << cfg.learning_rate << ")";
      throw DivergenceError(msg.str());
    }
    result.log.push_back(entry);
    result.epochs = epoch;
    result.final_loss = entry.total;

    if (epoch % window == 0) {
      double current = 0.0;
      for (std::size_t i = result.log.size() - window; i < result.log.size(); ++i) {
        current += result.log[i].total;
      }
      current /= static_cast<double>(window);
      if (epoch > window && std::abs(previous_window - current) < cfg.convergence_tol) {
        break;
      }
      previous_window = current;
    }
  }
  return result;
}

void write_train_log(std::ostream& out, std::span<const EpochLog> log) {
  out << "epoch,recon_loss,kl_loss,total\n";
  char buf[128];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g\n", e.epoch, e.recon,
                  e.kl, e.total);
    out << buf;
  }
}

// ------------------------------------------------------------ generation ---

std::vector<PolicyTree> generate(const VaeNetwork& net,
                                 std::span<const EncodedTree> source,
                                 std::size_t count, RandomSource& rng,
                                 EmptySlot empty) {
  if (count < 1) throw ConfigError("generate: M must be >= 1");
  if (source.empty()) throw EmptyInputError("generate: empty source set");
  const TreeShape shape = source.front().shape;
  if (shape.dim() != net.input_dim()) {
    throw ConfigError("generate: network input does not match the source shape");
  }
  const ActionAlphabet alphabet(shape.num_actions);
  std::vector<PolicyTree> trees;
  trees.reserve(count);
  for (std::size_t m = 0; m < count; ++m) {
    const EncodedTree& x = source[rng.index(source.size())];
    const Eigen::VectorXd eps = draw_noise(net.latent_dim(), rng);
    const ForwardPass pass = net.forward(as_vector(x), eps);
    EncodedTree prob{shape, EncodingKind::kProb,
                     std::vector<double>(pass.output.data(),
                                         pass.output.data() + pass.output.size())};
    Projection projected = onehot_project(prob, alphabet, empty);
    PolicyTree tree = zzoh_decode(projected.binary, alphabet);
    tree.set_node_probs(std::move(projected.node_probs));
    trees.push_back(std::move(tree));
  }
  return trees;
}

// ----------------------------------------------------------- persistence ---

void save_network(std::ostream& out, const VaeNetwork& net,
                  const NetworkMeta& meta, std::string_view comment) {
  out << "VEBVAE 1\n";
  std::string_view rest = comment;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    out << "# " << rest.substr(0, nl) << '\n';
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
  }
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "input=%zu hidden=%zu latent=%zu seed=%llu epochs=%zu "
                "final_loss=%.17g\nDATA\n",
                net.input_dim(), net.hidden_dim(), net.latent_dim(),
                static_cast<unsigned long long>(meta.seed), meta.epochs,
                meta.final_loss);
  out << buf;
  const std::vector<double> flat = net.params().flatten();
  out.write(reinterpret_cast<const char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!out) throw IoError("failed to write network parameters");
}

VaeNetwork load_network(std::istream& in, NetworkMeta* meta) {
  std::string magic, dims, data;
  std::getline(in, magic);
  while (std::getline(in, dims) && !dims.empty() && dims[0] == '#') {
  }
  std::getline(in, data);
  if (magic != "VEBVAE 1" || data != "DATA") {
    throw IoError("not a network file");
  }
  std::size_t input = 0, hidden = 0, latent = 0, epochs = 0;
  unsigned long long seed = 0;
  double final_loss = 0.0;
  if (std::sscanf(dims.c_str(),
                  "input=%zu hidden=%zu latent=%zu seed=%llu epochs=%zu "
                  "final_loss=%lg",
                  &input, &hidden, &latent, &seed, &epochs, &final_loss) != 6) {
    throw IoError("bad network header: '" + dims + "'");
  }
  VaeNetwork net(input, hidden, latent);
  std::vector<double> flat(net.params().size());
  in.read(reinterpret_cast<char*>(flat.data()),
          static_cast<std::streamsize>(flat.size() * sizeof(double)));
  if (!in) throw IoError("network file is truncated");
  net.params().assign(flat);
  if (meta) *meta = {seed, epochs, final_loss};
  return net;
}

}  // namespace veb
