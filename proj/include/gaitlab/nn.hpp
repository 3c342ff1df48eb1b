#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gaitlab/common.hpp"
#include "gaitlab/types.hpp"

namespace gaitlab {

// Sequence classifier: FC encoder (optional) into stacked LSTM layers into a
// linear head with softmax, classifying every step of a window. Everything is
// column-major with features along rows; a batch of B windows of length T is
// flattened to B*T columns ordered time-major (column t*B + w).

struct NetworkConfig {
  int input_dim = 7;
  int hidden = 128;       // N
  int lstm_layers = 2;    // stacked layers
  bool use_encoder = true;
  double dropout_prob = 0.7;  // drop probability on the first FC layer
  bool bn_fc1 = true, bn_fc2 = true, bn_lstm = true;
  int output_dim = 2;

  int fc1_out() const { return 4 * hidden; }
  int fc2_out() const { return 2 * hidden; }
  int lstm_input() const { return use_encoder ? fc2_out() : input_dim; }
};

inline void validate(const NetworkConfig& c) {
  auto fail = [](const char* m) { throw std::invalid_argument(std::string("NetworkConfig: ") + m); };
  if (c.input_dim <= 0 || c.hidden <= 0 || c.output_dim <= 0) fail("dims must be positive");
  if (c.lstm_layers < 1) fail("need at least one LSTM layer");
  if (c.dropout_prob < 0 || c.dropout_prob >= 1) fail("dropout_prob must be in [0, 1)");
}

// "lstm1-256", "fc-lstm2-128", ... : optional encoder prefix, layer count,
// hidden width.
inline NetworkConfig arch_from_name(const std::string& name) {
  NetworkConfig c;
  std::string rest = name;
  if (rest.rfind("fc-", 0) == 0) {
    c.use_encoder = true;
    rest = rest.substr(3);
  } else {
    c.use_encoder = false;
  }
  if (rest.rfind("lstm", 0) != 0) throw std::invalid_argument("unknown architecture: " + name);
  rest = rest.substr(4);
  const auto dash = rest.find('-');
  if (dash == std::string::npos) throw std::invalid_argument("unknown architecture: " + name);
  c.lstm_layers = std::stoi(rest.substr(0, dash));
  c.hidden = std::stoi(rest.substr(dash + 1));
  validate(c);
  return c;
}

inline std::string arch_name(const NetworkConfig& c) {
  return (c.use_encoder ? "fc-lstm" : "lstm") + std::to_string(c.lstm_layers) + "-" +
         std::to_string(c.hidden);
}

struct BatchNorm {
  MatrixXd gamma, beta;  // trainable, (dim x 1)
  VectorXd running_mean, running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  void init(int dim) {
    gamma = MatrixXd::Ones(dim, 1);
    beta = MatrixXd::Zero(dim, 1);
    running_mean = VectorXd::Zero(dim);
    running_var = VectorXd::Ones(dim);
  }
};

struct NetworkParams {
  NetworkConfig config;
  MatrixXd w_fc1, b_fc1, w_fc2, b_fc2;  // biases are (dim x 1)
  BatchNorm bn1, bn2, bn_out;
  struct LstmLayer {
    // Gate rows stacked [input; forget; output; modulation], each N rows.
    MatrixXd w_x, w_h, b;
  };
  std::vector<LstmLayer> lstm;
  MatrixXd w_out, b_out;
};

// Visits every trainable tensor in a fixed order (running stats excluded).
template <typename Params, typename Fn>
void for_each_param(Params& p, Fn&& fn) {
  const NetworkConfig& c = p.config;
  if (c.use_encoder) {
    fn("w_fc1", p.w_fc1);
    fn("b_fc1", p.b_fc1);
    if (c.bn_fc1) {
      fn("bn1.gamma", p.bn1.gamma);
      fn("bn1.beta", p.bn1.beta);
    }
    fn("w_fc2", p.w_fc2);
    fn("b_fc2", p.b_fc2);
    if (c.bn_fc2) {
      fn("bn2.gamma", p.bn2.gamma);
      fn("bn2.beta", p.bn2.beta);
    }
  }
  for (std::size_t l = 0; l < p.lstm.size(); ++l) {
    const std::string tag = "lstm" + std::to_string(l);
    fn(tag + ".w_x", p.lstm[l].w_x);
    fn(tag + ".w_h", p.lstm[l].w_h);
    fn(tag + ".b", p.lstm[l].b);
  }
  if (c.bn_lstm) {
    fn("bn_out.gamma", p.bn_out.gamma);
    fn("bn_out.beta", p.bn_out.beta);
  }
  fn("w_out", p.w_out);
  fn("b_out", p.b_out);
}

inline long count_params(const NetworkParams& p) {
  long n = 0;
  for_each_param(p, [&](const std::string&, const MatrixXd& m) { n += m.size(); });
  return n;
}

namespace detail {

inline MatrixXd uniform_init(int rows, int cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

}  // namespace detail

inline NetworkParams init_network(const NetworkConfig& c, std::uint64_t seed) {
  validate(c);
  NetworkParams p;
  p.config = c;
  Rng rng(derive_seed(seed, "init"));
  if (c.use_encoder) {
    p.w_fc1 = detail::uniform_init(c.fc1_out(), c.input_dim, rng);
    p.b_fc1 = MatrixXd::Zero(c.fc1_out(), 1);
    p.w_fc2 = detail::uniform_init(c.fc2_out(), c.fc1_out(), rng);
    p.b_fc2 = MatrixXd::Zero(c.fc2_out(), 1);
    p.bn1.init(c.fc1_out());
    p.bn2.init(c.fc2_out());
  }
  p.lstm.resize(c.lstm_layers);
  int in_dim = c.lstm_input();
  for (int l = 0; l < c.lstm_layers; ++l) {
    auto& layer = p.lstm[l];
    layer.w_x = detail::uniform_init(4 * c.hidden, in_dim, rng);
    layer.w_h = detail::uniform_init(4 * c.hidden, c.hidden, rng);
    layer.b = MatrixXd::Zero(4 * c.hidden, 1);
    layer.b.block(c.hidden, 0, c.hidden, 1).setOnes();  // forget gate starts open
    in_dim = c.hidden;
  }
  p.bn_out.init(c.hidden);
  p.w_out = detail::uniform_init(c.output_dim, c.hidden, rng);
  p.b_out = MatrixXd::Zero(c.output_dim, 1);
  return p;
}

inline NetworkParams zeros_like(const NetworkParams& p) {
  NetworkParams g = p;
  for_each_param(g, [](const std::string&, MatrixXd& m) { m.setZero(); });
  g.bn1.running_mean.setZero();
  g.bn1.running_var.setZero();
  g.bn2.running_mean.setZero();
  g.bn2.running_var.setZero();
  g.bn_out.running_mean.setZero();
  g.bn_out.running_var.setZero();
  return g;
}

namespace detail {

inline void sigmoid_inplace(Eigen::Ref<MatrixXd> m) {
  m = (1.0 + (-m.array()).exp()).inverse().matrix();
}

struct BnCache {
  MatrixXd xhat;
  VectorXd inv_std;
};

// Per-feature statistics over all columns (batch x time flattened).
inline MatrixXd bn_forward_train(BatchNorm& bn, const MatrixXd& x, BnCache& cache) {
  const double n = static_cast<double>(x.cols());
  const VectorXd mean = x.rowwise().mean();
  const MatrixXd centered = x.colwise() - mean;
  const VectorXd var = centered.array().square().rowwise().mean().matrix();
  cache.inv_std = (var.array() + bn.eps).rsqrt().matrix();
  cache.xhat = (centered.array().colwise() * cache.inv_std.array()).matrix();

  bn.running_mean = (1.0 - bn.momentum) * bn.running_mean + bn.momentum * mean;
  const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
  bn.running_var = (1.0 - bn.momentum) * bn.running_var + (bn.momentum * unbias) * var;

  return ((cache.xhat.array().colwise() * bn.gamma.col(0).array()).colwise() +
          bn.beta.col(0).array())
      .matrix();
}

inline MatrixXd bn_forward_infer(const BatchNorm& bn, const MatrixXd& x) {
  const VectorXd inv_std = (bn.running_var.array() + bn.eps).rsqrt().matrix();
  const VectorXd scale = (bn.gamma.col(0).array() * inv_std.array()).matrix();
  const VectorXd shift =
      (bn.beta.col(0).array() - bn.running_mean.array() * scale.array()).matrix();
  return ((x.array().colwise() * scale.array()).colwise() + shift.array()).matrix();
}

// Gradient through train-mode batch statistics.
inline MatrixXd bn_backward(const BatchNorm& bn, const BnCache& cache, const MatrixXd& dy,
                            MatrixXd& dgamma, MatrixXd& dbeta) {
  dgamma = dy.cwiseProduct(cache.xhat).rowwise().sum();
  dbeta = dy.rowwise().sum();
  const VectorXd mean_dy = dy.rowwise().mean();
  const VectorXd mean_dy_xhat = dy.cwiseProduct(cache.xhat).rowwise().mean();
  MatrixXd dx = (dy.colwise() - mean_dy) -
                (cache.xhat.array().colwise() * mean_dy_xhat.array()).matrix();
  dx = (dx.array().colwise() * (bn.gamma.col(0).array() * cache.inv_std.array())).matrix();
  return dx;
}

struct LstmLayerCache {
  MatrixXd gates;  // 4N x BT, activated (i, f, o, g)
  MatrixXd c;      // N x BT
  MatrixXd tanhc;  // N x BT
  MatrixXd h;      // N x BT
};

inline MatrixXd softmax_columns(MatrixXd logits) {
  const Eigen::RowVectorXd colmax = logits.colwise().maxCoeff();
  logits.rowwise() -= colmax;
  MatrixXd e = logits.array().exp().matrix();
  const Eigen::RowVectorXd sums = e.colwise().sum();
  e.array().rowwise() /= sums.array();
  return e;
}

}  // namespace detail

// Single-step LSTM cell. Columns are batch entries; a single column gives the
// textbook per-frame update. c_t may alias c_prev (fully element-wise).
inline void lstm_step(const MatrixXd& x_t, const MatrixXd& h_prev, const MatrixXd& c_prev,
                      const NetworkParams::LstmLayer& layer, MatrixXd& h_t, MatrixXd& c_t) {
  const int n = static_cast<int>(h_prev.rows());
  MatrixXd z = layer.w_x * x_t + layer.w_h * h_prev;
  z.colwise() += layer.b.col(0);
  detail::sigmoid_inplace(z.topRows(3 * n));
  z.bottomRows(n) = z.bottomRows(n).array().tanh().matrix();
  c_t = (z.middleRows(n, n).array() * c_prev.array() +
         z.topRows(n).array() * z.bottomRows(n).array())
            .matrix();
  h_t = (z.middleRows(2 * n, n).array() * c_t.array().tanh()).matrix();
}

namespace detail {

// One batched LSTM scan over T steps. zx = w_x * input, precomputed for all
// steps in a single product; per-step activations land in the cache.
inline void lstm_scan(const NetworkParams::LstmLayer& layer, const MatrixXd& zx, int B, int T,
                      int N, LstmLayerCache& cache) {
  cache.gates.resize(4 * N, zx.cols());
  cache.c.resize(N, zx.cols());
  cache.tanhc.resize(N, zx.cols());
  cache.h.resize(N, zx.cols());
  MatrixXd h_prev = MatrixXd::Zero(N, B);
  MatrixXd c_prev = MatrixXd::Zero(N, B);
  for (int t = 0; t < T; ++t) {
    const Eigen::Index col0 = static_cast<Eigen::Index>(t) * B;
    MatrixXd z = zx.middleCols(col0, B);
    z.noalias() += layer.w_h * h_prev;
    z.colwise() += layer.b.col(0);
    sigmoid_inplace(z.topRows(3 * N));
    z.bottomRows(N) = z.bottomRows(N).array().tanh().matrix();
    MatrixXd c_t = (z.middleRows(N, N).array() * c_prev.array() +
                    z.topRows(N).array() * z.bottomRows(N).array())
                       .matrix();
    MatrixXd tanh_c = c_t.array().tanh().matrix();
    MatrixXd h_t = (z.middleRows(2 * N, N).array() * tanh_c.array()).matrix();
    cache.gates.middleCols(col0, B) = z;
    cache.c.middleCols(col0, B) = c_t;
    cache.tanhc.middleCols(col0, B) = tanh_c;
    cache.h.middleCols(col0, B) = h_t;
    h_prev = std::move(h_t);
    c_prev = std::move(c_t);
  }
}

}  // namespace detail

// Encoder alone at inference (running BN statistics, no dropout). Columns are
// independent observation vectors.
inline MatrixXd encoder_forward(const MatrixXd& p_t, const NetworkParams& p) {
  const NetworkConfig& c = p.config;
  if (!c.use_encoder) return p_t;
  if (p_t.rows() != c.input_dim) throw std::invalid_argument("encoder_forward: wrong input dim");
  MatrixXd z1 = p.w_fc1 * p_t;
  z1.colwise() += p.b_fc1.col(0);
  if (c.bn_fc1) z1 = detail::bn_forward_infer(p.bn1, z1);
  z1 = z1.cwiseMax(0.0);
  MatrixXd z2 = p.w_fc2 * z1;
  z2.colwise() += p.b_fc2.col(0);
  if (c.bn_fc2) z2 = detail::bn_forward_infer(p.bn2, z2);
  return z2.cwiseMax(0.0);
}

enum class RunMode { Train, Infer };

struct ForwardCache {
  int batch = 0, steps = 0;
  MatrixXd input;  // in x BT, time-major
  // encoder
  detail::BnCache bn1c, bn2c;
  MatrixXd dropped;  // FC1 activation after ReLU and dropout
  MatrixXd smask;    // scaled dropout mask (0 or 1/(1-p))
  MatrixXd encoded;  // FC2 activation (LSTM input)
  std::vector<detail::LstmLayerCache> layers;
  detail::BnCache bnoc;
  MatrixXd head_in;  // BN output feeding the linear head
  MatrixXd probs;    // output_dim x BT
};

// Train-mode forward: batch statistics for BN, dropout drawn from rng,
// running statistics updated, full cache captured for backward.
inline ForwardCache forward_train(const MatrixXd& x, int B, int T, NetworkParams& p, Rng& rng) {
  const NetworkConfig& c = p.config;
  if (x.rows() != c.input_dim) throw std::invalid_argument("forward: input dim mismatch");
  if (x.cols() != static_cast<Eigen::Index>(B) * T)
    throw std::invalid_argument("forward: column count is not B*T");

  ForwardCache cache;
  cache.batch = B;
  cache.steps = T;
  cache.input = x;

  const MatrixXd* lstm_in = &cache.input;
  if (c.use_encoder) {
    MatrixXd z1 = p.w_fc1 * x;
    z1.colwise() += p.b_fc1.col(0);
    MatrixXd y1 = c.bn_fc1 ? detail::bn_forward_train(p.bn1, z1, cache.bn1c) : std::move(z1);
    y1 = y1.cwiseMax(0.0);
    cache.smask.resize(y1.rows(), y1.cols());
    const double keep_scale = 1.0 / (1.0 - c.dropout_prob);
    for (Eigen::Index i = 0; i < cache.smask.size(); ++i)
      cache.smask.data()[i] = rng.uniform() < c.dropout_prob ? 0.0 : keep_scale;
    cache.dropped = y1.cwiseProduct(cache.smask);

    MatrixXd z2 = p.w_fc2 * cache.dropped;
    z2.colwise() += p.b_fc2.col(0);
    MatrixXd y2 = c.bn_fc2 ? detail::bn_forward_train(p.bn2, z2, cache.bn2c) : std::move(z2);
    cache.encoded = y2.cwiseMax(0.0);
    lstm_in = &cache.encoded;
  }

  cache.layers.resize(static_cast<std::size_t>(c.lstm_layers));
  for (int l = 0; l < c.lstm_layers; ++l) {
    const MatrixXd& in =
        (l == 0) ? *lstm_in : cache.layers[static_cast<std::size_t>(l) - 1].h;
    const MatrixXd zx = p.lstm[static_cast<std::size_t>(l)].w_x * in;
    detail::lstm_scan(p.lstm[static_cast<std::size_t>(l)], zx, B, T, c.hidden,
                      cache.layers[static_cast<std::size_t>(l)]);
  }

  const MatrixXd& h_top = cache.layers.back().h;
  cache.head_in = c.bn_lstm ? detail::bn_forward_train(p.bn_out, h_top, cache.bnoc) : h_top;
  MatrixXd logits = p.w_out * cache.head_in;
  logits.colwise() += p.b_out.col(0);
  cache.probs = detail::softmax_columns(std::move(logits));
  return cache;
}

// Inference forward: running statistics, no dropout, no cache kept.
inline MatrixXd forward_infer(const MatrixXd& x, int B, int T, const NetworkParams& p) {
  const NetworkConfig& c = p.config;
  if (x.rows() != c.input_dim) throw std::invalid_argument("forward: input dim mismatch");
  if (x.cols() != static_cast<Eigen::Index>(B) * T)
    throw std::invalid_argument("forward: column count is not B*T");

  MatrixXd cur = encoder_forward(x, p);
  detail::LstmLayerCache scratch;
  for (int l = 0; l < c.lstm_layers; ++l) {
    const MatrixXd zx = p.lstm[static_cast<std::size_t>(l)].w_x * cur;
    detail::lstm_scan(p.lstm[static_cast<std::size_t>(l)], zx, B, T, c.hidden, scratch);
    cur = std::move(scratch.h);
  }
  if (c.bn_lstm) cur = detail::bn_forward_infer(p.bn_out, cur);
  MatrixXd logits = p.w_out * cur;
  logits.colwise() += p.b_out.col(0);
  return detail::softmax_columns(std::move(logits));
}

// One labeled training window: features x T columns plus per-step labels.
struct WindowSample {
  MatrixXd inputs;          // input_dim x T
  std::vector<int> labels;  // T entries, 0 = Safe, 1 = FallRisk
  int subject_id = 0;
};

// Single-window forward. Train mode needs an rng for dropout and returns the
// full cache; infer mode fills only the probabilities.
inline ForwardCache forward_window(const WindowSample& s, NetworkParams& p, RunMode mode,
                                   Rng* rng = nullptr) {
  const int T = static_cast<int>(s.inputs.cols());
  if (mode == RunMode::Train) {
    if (!rng) throw std::invalid_argument("forward_window: train mode needs an rng");
    return forward_train(s.inputs, 1, T, p, *rng);
  }
  ForwardCache cache;
  cache.batch = 1;
  cache.steps = T;
  cache.probs = forward_infer(s.inputs, 1, T, p);
  return cache;
}

// Mean negative log-likelihood over all B*T steps, probabilities clamped at
// 1e-12 before the log.
inline double loss(const MatrixXd& probs, const std::vector<int>& labels) {
  if (probs.cols() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("loss: label count mismatch");
  double total = 0.0;
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    if (y < 0 || y >= probs.rows()) throw std::invalid_argument("loss: label out of range");
    total -= std::log(std::max(probs(y, j), 1e-12));
  }
  return total / static_cast<double>(probs.cols());
}

// Analytic gradients of `loss` w.r.t. every trainable tensor, by
// backpropagation through time. Requires a train-mode cache.
inline NetworkParams backward(const NetworkParams& p, const ForwardCache& cache,
                              const std::vector<int>& labels) {
  const NetworkConfig& c = p.config;
  if (cache.probs.size() == 0 || cache.head_in.size() == 0)
    throw std::invalid_argument("backward: needs a train-mode cache");
  if (cache.probs.cols() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("backward: label count mismatch");
  const int B = cache.batch, T = cache.steps, N = c.hidden;
  const double inv_n = 1.0 / static_cast<double>(cache.probs.cols());

  NetworkParams g = zeros_like(p);

  // Softmax plus cross-entropy collapse to (P - onehot) / count.
  MatrixXd dlogits = cache.probs * inv_n;
  for (Eigen::Index j = 0; j < dlogits.cols(); ++j)
    dlogits(labels[static_cast<std::size_t>(j)], j) -= inv_n;

  g.w_out.noalias() = dlogits * cache.head_in.transpose();
  g.b_out = dlogits.rowwise().sum();
  MatrixXd dh_all = p.w_out.transpose() * dlogits;
  if (c.bn_lstm)
    dh_all = detail::bn_backward(p.bn_out, cache.bnoc, dh_all, g.bn_out.gamma, g.bn_out.beta);

  for (int l = c.lstm_layers - 1; l >= 0; --l) {
    const auto& lc = cache.layers[static_cast<std::size_t>(l)];
    const MatrixXd& in = (l == 0)
                             ? (c.use_encoder ? cache.encoded : cache.input)
                             : cache.layers[static_cast<std::size_t>(l) - 1].h;
    const auto& layer = p.lstm[static_cast<std::size_t>(l)];
    MatrixXd dz_all(4 * N, static_cast<Eigen::Index>(B) * T);
    MatrixXd dh_carry = MatrixXd::Zero(N, B);
    MatrixXd dc_carry = MatrixXd::Zero(N, B);
    for (int t = T - 1; t >= 0; --t) {
      const Eigen::Index col0 = static_cast<Eigen::Index>(t) * B;
      const auto gi = lc.gates.block(0, col0, N, B).array();
      const auto gf = lc.gates.block(N, col0, N, B).array();
      const auto go = lc.gates.block(2 * N, col0, N, B).array();
      const auto gg = lc.gates.block(3 * N, col0, N, B).array();
      const auto tanhc = lc.tanhc.middleCols(col0, B).array();

      const MatrixXd dh = dh_all.middleCols(col0, B) + dh_carry;
      const MatrixXd dc = (dh.array() * go * (1.0 - tanhc.square())).matrix() + dc_carry;

      MatrixXd dz(4 * N, B);
      dz.topRows(N) = (dc.array() * gg * gi * (1.0 - gi)).matrix();
      if (t > 0) {
        const auto c_prev = lc.c.middleCols(col0 - B, B).array();
        dz.middleRows(N, N) = (dc.array() * c_prev * gf * (1.0 - gf)).matrix();
        dc_carry = (dc.array() * gf).matrix();
      } else {
        dz.middleRows(N, N).setZero();  // initial cell state is zero
        dc_carry.setZero();
      }
      dz.middleRows(2 * N, N) = (dh.array() * tanhc * go * (1.0 - go)).matrix();
      dz.bottomRows(N) = (dc.array() * gi * (1.0 - gg.square())).matrix();

      dh_carry.noalias() = layer.w_h.transpose() * dz;
      dz_all.middleCols(col0, B) = dz;
    }

    // Batched weight gradients; the recurrent term sees h shifted one step
    // right (zero initial state).
    auto& gl = g.lstm[static_cast<std::size_t>(l)];
    gl.w_x.noalias() = dz_all * in.transpose();
    MatrixXd h_prev(N, static_cast<Eigen::Index>(B) * T);
    h_prev.leftCols(B).setZero();
    if (T > 1)
      h_prev.rightCols(static_cast<Eigen::Index>(B) * (T - 1)) =
          lc.h.leftCols(static_cast<Eigen::Index>(B) * (T - 1));
    gl.w_h.noalias() = dz_all * h_prev.transpose();
    gl.b = dz_all.rowwise().sum();

    if (l > 0 || c.use_encoder) dh_all.noalias() = layer.w_x.transpose() * dz_all;
  }

  if (c.use_encoder) {
    MatrixXd dy2 = dh_all.cwiseProduct((cache.encoded.array() > 0.0).cast<double>().matrix());
    MatrixXd dz2 = c.bn_fc2 ? detail::bn_backward(p.bn2, cache.bn2c, dy2, g.bn2.gamma, g.bn2.beta)
                            : std::move(dy2);
    g.w_fc2.noalias() = dz2 * cache.dropped.transpose();
    g.b_fc2 = dz2.rowwise().sum();

    MatrixXd dd = p.w_fc2.transpose() * dz2;
    // Dropout backward, then the ReLU mask (dropped > 0 identifies live units).
    MatrixXd dy1 = dd.cwiseProduct(cache.smask);
    dy1 = dy1.cwiseProduct((cache.dropped.array() > 0.0).cast<double>().matrix());
    MatrixXd dz1 = c.bn_fc1 ? detail::bn_backward(p.bn1, cache.bn1c, dy1, g.bn1.gamma, g.bn1.beta)
                            : std::move(dy1);
    g.w_fc1.noalias() = dz1 * cache.input.transpose();
    g.b_fc1 = dz1.rowwise().sum();
  }
  return g;
}

struct AdamState {
  std::vector<MatrixXd> m, v;
  long step = 0;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 256;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::uint64_t rng_seed = 1;
};

inline void validate(const TrainConfig& c) {
  if (!(c.lr > 0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (c.batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (c.epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
}

// Adam with bias correction; weight decay enters as an additive lambda*w term
// on the gradient. The learning rate is whatever the caller passes (schedules
// live with the caller).
inline void adam_step(NetworkParams& p, const NetworkParams& grads, AdamState& state, double lr,
                      const TrainConfig& c) {
  std::vector<MatrixXd*> ws;
  std::vector<const MatrixXd*> gs;
  for_each_param(p, [&](const std::string&, MatrixXd& m) { ws.push_back(&m); });
  for_each_param(grads, [&](const std::string&, const MatrixXd& m) { gs.push_back(&m); });
  if (ws.size() != gs.size()) throw std::invalid_argument("adam_step: param/grad mismatch");
  if (state.m.empty()) {
    state.m.resize(ws.size());
    state.v.resize(ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i) {
      state.m[i] = MatrixXd::Zero(ws[i]->rows(), ws[i]->cols());
      state.v[i] = MatrixXd::Zero(ws[i]->rows(), ws[i]->cols());
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < ws.size(); ++i) {
    const MatrixXd g = *gs[i] + c.weight_decay * (*ws[i]);
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g.cwiseProduct(g);
    const MatrixXd mhat = state.m[i] / bc1;
    const MatrixXd vhat = state.v[i] / bc2;
    *ws[i] -= lr * (mhat.array() / (vhat.array().sqrt() + c.eps)).matrix();
  }
}

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
};

struct TrainResult {
  NetworkParams params;
  std::vector<EpochStats> history;
};

// Deterministic minibatch training. The learning rate drops by 10x for the
// second half of the epochs.
inline TrainResult train(const std::vector<WindowSample>& windows, const NetworkConfig& nc,
                         const TrainConfig& tc) {
  validate(nc);
  validate(tc);
  if (windows.empty()) throw std::invalid_argument("train: empty dataset");
  const int T = static_cast<int>(windows.front().inputs.cols());
  for (const auto& w : windows) {
    if (w.inputs.rows() != nc.input_dim || w.inputs.cols() != T ||
        w.labels.size() != static_cast<std::size_t>(T))
      throw std::invalid_argument("train: inconsistent window shapes");
  }

  TrainResult out;
  out.params = init_network(nc, derive_seed(tc.rng_seed, "params"));
  AdamState opt;
  Rng dropout_rng(derive_seed(tc.rng_seed, "dropout"));

  std::vector<std::size_t> order(windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    const double lr = (2 * epoch > tc.epochs) ? tc.lr * 0.1 : tc.lr;
    Rng shuffle_rng(derive_seed(tc.rng_seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    long batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(tc.batch_size)) {
      const int B = static_cast<int>(
          std::min<std::size_t>(static_cast<std::size_t>(tc.batch_size), order.size() - start));
      MatrixXd x(nc.input_dim, static_cast<Eigen::Index>(B) * T);
      std::vector<int> labels(static_cast<std::size_t>(B) * static_cast<std::size_t>(T));
      for (int w = 0; w < B; ++w) {
        const WindowSample& ws = windows[order[start + static_cast<std::size_t>(w)]];
        for (int t = 0; t < T; ++t) {
          x.col(static_cast<Eigen::Index>(t) * B + w) = ws.inputs.col(t);
          labels[static_cast<std::size_t>(t) * static_cast<std::size_t>(B) +
                 static_cast<std::size_t>(w)] = ws.labels[static_cast<std::size_t>(t)];
        }
      }
      ForwardCache cache = forward_train(x, B, T, out.params, dropout_rng);
      loss_sum += loss(cache.probs, labels);
      NetworkParams grads = backward(out.params, cache, labels);
      adam_step(out.params, grads, opt, lr, tc);
      ++batches;
    }
    out.history.push_back({epoch, lr, loss_sum / static_cast<double>(batches)});
  }
  return out;
}

// Per-step fall-risk probability for one window (inference mode).
inline VectorXd predict_proba(const NetworkParams& p, const MatrixXd& window) {
  if (window.rows() != p.config.input_dim)
    throw std::invalid_argument("predict_proba: wrong input dim");
  const MatrixXd probs = forward_infer(window, 1, static_cast<int>(window.cols()), p);
  return probs.row(1).transpose();
}

// Sliding-window fall-risk probability over a whole feature stream: for every
// frame index e >= T-1, the probability at the last step of the window ending
// at e; earlier frames get NaN. Windows with consecutive ends share contiguous
// column blocks, so the scan pushes chunks of windows through the recurrence
// in lockstep.
inline VectorXd predict_stream(const NetworkParams& p, const MatrixXd& features, int T,
                               int chunk = 512) {
  const NetworkConfig& c = p.config;
  if (features.rows() != c.input_dim)
    throw std::invalid_argument("predict_stream: wrong input dim");
  if (T < 1) throw std::invalid_argument("predict_stream: T must be >= 1");
  const Eigen::Index F = features.cols();
  VectorXd out = VectorXd::Constant(F, std::numeric_limits<double>::quiet_NaN());
  if (F < T) return out;

  const MatrixXd encoded = encoder_forward(features, p);

  const int N = c.hidden;
  for (Eigen::Index e0 = T - 1; e0 < F; e0 += chunk) {
    const int B = static_cast<int>(std::min<Eigen::Index>(chunk, F - e0));
    std::vector<MatrixXd> h(static_cast<std::size_t>(c.lstm_layers), MatrixXd::Zero(N, B));
    std::vector<MatrixXd> cc(static_cast<std::size_t>(c.lstm_layers), MatrixXd::Zero(N, B));
    MatrixXd h_next;
    for (int k = 0; k < T; ++k) {
      const MatrixXd x_t = encoded.middleCols(e0 - (T - 1) + k, B);
      const MatrixXd* cur = &x_t;
      for (std::size_t l = 0; l < h.size(); ++l) {
        lstm_step(*cur, h[l], cc[l], p.lstm[l], h_next, cc[l]);
        h[l] = std::move(h_next);
        cur = &h[l];
      }
    }
    MatrixXd top = h.back();
    if (c.bn_lstm) top = detail::bn_forward_infer(p.bn_out, top);
    MatrixXd logits = p.w_out * top;
    logits.colwise() += p.b_out.col(0);
    const MatrixXd probs = detail::softmax_columns(std::move(logits));
    out.segment(e0, B) = probs.row(1).transpose();
  }
  return out;
}

}  // namespace gaitlab
