#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "gaitlab/nn.hpp"

using gaitlab::MatrixXd;
using gaitlab::NetworkConfig;
using gaitlab::NetworkParams;
using gaitlab::Rng;
using gaitlab::VectorXd;
using gaitlab::WindowSample;

namespace {

MatrixXd random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.gaussian();
  return m;
}

std::vector<int> random_labels(std::size_t n, Rng& rng) {
  std::vector<int> labels(n);
  for (auto& l : labels) l = rng.uniform() < 0.5 ? 0 : 1;
  return labels;
}

double eval_loss(const NetworkParams& base, const MatrixXd& x, int B, int T,
                 const std::vector<int>& labels, std::uint64_t mask_seed) {
  NetworkParams p = base;  // running stats mutate on a throwaway copy
  Rng rng(mask_seed);
  const auto cache = gaitlab::forward_train(x, B, T, p, rng);
  return gaitlab::loss(cache.probs, labels);
}

struct GradCheck {
  double max_rel = 0.0;
  std::string worst;
  int failures = 0;
  long checked = 0;
};

// Central finite differences against the analytic gradients, every entry of
// every tensor. The dropout rng is re-seeded per evaluation so masks stay
// frozen across perturbations.
GradCheck grad_check(NetworkParams params, const MatrixXd& x, int B, int T,
                     const std::vector<int>& labels, std::uint64_t mask_seed) {
  const double eps = 1e-5;
  NetworkParams analytic = [&] {
    NetworkParams p = params;
    Rng rng(mask_seed);
    const auto cache = gaitlab::forward_train(x, B, T, p, rng);
    return gaitlab::backward(p, cache, labels);
  }();

  std::vector<std::string> names;
  std::vector<MatrixXd*> tensors;
  gaitlab::for_each_param(params, [&](const std::string& n, MatrixXd& m) {
    names.push_back(n);
    tensors.push_back(&m);
  });
  std::vector<const MatrixXd*> grads;
  gaitlab::for_each_param(analytic,
                          [&](const std::string&, const MatrixXd& m) { grads.push_back(&m); });
  REQUIRE(tensors.size() == grads.size());

  GradCheck out;
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    MatrixXd& w = *tensors[k];
    const MatrixXd& a = *grads[k];
    REQUIRE(w.rows() == a.rows());
    REQUIRE(w.cols() == a.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double saved = w.data()[i];
      w.data()[i] = saved + eps;
      const double lp = eval_loss(params, x, B, T, labels, mask_seed);
      w.data()[i] = saved - eps;
      const double lm = eval_loss(params, x, B, T, labels, mask_seed);
      w.data()[i] = saved;
      const double numeric = (lp - lm) / (2.0 * eps);
      const double ana = a.data()[i];
      const double diff = std::abs(ana - numeric);
      const double denom = std::max(std::abs(ana), std::abs(numeric));
      const double rel = denom > 0 ? diff / denom : 0.0;
      ++out.checked;
      if (diff >= 1e-7 && rel >= 1e-4) {
        ++out.failures;
        if (rel > out.max_rel) out.worst = names[k] + "[" + std::to_string(i) + "]";
      }
      if (diff >= 1e-7 && rel > out.max_rel) out.max_rel = rel;
    }
  }
  return out;
}

NetworkParams zero_params(const NetworkConfig& c) {
  NetworkParams p = gaitlab::init_network(c, 1);
  gaitlab::for_each_param(p, [](const std::string&, MatrixXd& m) { m.setZero(); });
  return p;
}

}  // namespace

TEST_CASE("architecture names parse and round trip", "[nn]") {
  const NetworkConfig a = gaitlab::arch_from_name("fc-lstm2-128");
  CHECK(a.use_encoder);
  CHECK(a.lstm_layers == 2);
  CHECK(a.hidden == 128);
  const NetworkConfig b = gaitlab::arch_from_name("lstm1-256");
  CHECK_FALSE(b.use_encoder);
  CHECK(b.lstm_layers == 1);
  CHECK(b.hidden == 256);
  CHECK(gaitlab::arch_name(a) == "fc-lstm2-128");
  CHECK(gaitlab::arch_name(b) == "lstm1-256");
  CHECK_THROWS_AS(gaitlab::arch_from_name("gru2-64"), std::invalid_argument);
  CHECK_THROWS_AS(gaitlab::arch_from_name("fc-lstm"), std::invalid_argument);

  NetworkConfig bad;
  bad.lstm_layers = 0;
  CHECK_THROWS_AS(gaitlab::validate(bad), std::invalid_argument);
  bad = NetworkConfig{};
  bad.dropout_prob = 1.0;
  CHECK_THROWS_AS(gaitlab::validate(bad), std::invalid_argument);
}

TEST_CASE("encoder with zero weights maps everything to zero", "[nn]") {
  NetworkConfig c;
  c.hidden = 8;
  NetworkParams p = zero_params(c);
  Rng rng(3);
  const MatrixXd x = random_matrix(7, 5, rng);
  const MatrixXd enc = gaitlab::encoder_forward(x, p);
  REQUIRE(enc.rows() == c.fc2_out());
  REQUIRE(enc.cols() == 5);
  CHECK(enc.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lstm cell at zero weights and saturated forget gate", "[nn]") {
  NetworkConfig c;
  c.use_encoder = false;
  c.lstm_layers = 1;
  c.hidden = 4;
  NetworkParams p = zero_params(c);

  MatrixXd x = MatrixXd::Zero(7, 1);
  MatrixXd h0 = MatrixXd::Zero(4, 1), c0 = MatrixXd::Zero(4, 1);
  MatrixXd h1, c1;
  gaitlab::lstm_step(x, h0, c0, p.lstm[0], h1, c1);
  CHECK(c1.cwiseAbs().maxCoeff() == 0.0);  // i=f=o=0.5 but g=0 keeps the cell at rest
  CHECK(h1.cwiseAbs().maxCoeff() == 0.0);

  // A huge forget bias makes the cell remember c_prev almost exactly.
  p.lstm[0].b.block(4, 0, 4, 1).setConstant(50.0);
  MatrixXd v(4, 1);
  v << 0.3, -1.2, 4.0, 0.01;
  gaitlab::lstm_step(x, h0, v, p.lstm[0], h1, c1);
  CHECK((c1 - v).cwiseAbs().maxCoeff() < 1e-9);
  for (int i = 0; i < 4; ++i) CHECK(h1(i, 0) == Catch::Approx(0.5 * std::tanh(v(i, 0))).margin(1e-9));
}

TEST_CASE("zero params predict one half everywhere", "[nn]") {
  NetworkConfig c;
  c.hidden = 8;
  NetworkParams p = zero_params(c);
  Rng rng(5);
  const MatrixXd win = random_matrix(7, 6, rng);
  const VectorXd proba = gaitlab::predict_proba(p, win);
  REQUIRE(proba.size() == 6);
  for (int t = 0; t < 6; ++t) CHECK(proba(t) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("softmax columns are normalized and saturate safely", "[nn]") {
  NetworkConfig c;
  c.use_encoder = false;
  c.lstm_layers = 1;
  c.hidden = 4;
  NetworkParams p = gaitlab::init_network(c, 11);
  Rng rng(6);
  const MatrixXd x = random_matrix(7, 8, rng);
  const MatrixXd probs = gaitlab::forward_infer(x, 2, 4, p);
  REQUIRE(probs.rows() == 2);
  REQUIRE(probs.cols() == 8);
  for (Eigen::Index j = 0; j < probs.cols(); ++j) {
    CHECK(probs.col(j).sum() == Catch::Approx(1.0).margin(1e-12));
    CHECK(probs.col(j).minCoeff() >= 0.0);
  }

  // Extreme logits must not overflow thanks to max subtraction.
  p.w_out.setZero();
  p.b_out << 1000.0, -1000.0;
  const MatrixXd sat = gaitlab::forward_infer(x, 2, 4, p);
  CHECK(sat.allFinite());
  CHECK(sat.row(0).minCoeff() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("inference is deterministic, training dropout is not a constant mask", "[nn]") {
  NetworkConfig c;
  c.hidden = 8;
  NetworkParams p = gaitlab::init_network(c, 21);
  Rng rng(22);
  WindowSample s;
  s.inputs = random_matrix(7, 5, rng);
  s.labels = {0, 1, 0, 1, 0};

  const auto a = gaitlab::forward_window(s, p, gaitlab::RunMode::Infer);
  const auto b = gaitlab::forward_window(s, p, gaitlab::RunMode::Infer);
  CHECK((a.probs - b.probs).cwiseAbs().maxCoeff() == 0.0);

  const VectorXd proba = gaitlab::predict_proba(p, s.inputs);
  for (int t = 0; t < 5; ++t) CHECK(proba(t) == a.probs(1, t));

  // Two train-mode passes consume the rng, so the masks (and probs) differ.
  Rng dropout_rng(23);
  NetworkParams ptrain = p;
  const auto t1 = gaitlab::forward_window(s, ptrain, gaitlab::RunMode::Train, &dropout_rng);
  const auto t2 = gaitlab::forward_window(s, ptrain, gaitlab::RunMode::Train, &dropout_rng);
  CHECK((t1.smask - t2.smask).cwiseAbs().maxCoeff() > 0.0);
  CHECK_THROWS_AS(gaitlab::forward_window(s, ptrain, gaitlab::RunMode::Train, nullptr),
                  std::invalid_argument);
}

TEST_CASE("dropout mask is inverted-scaled and unbiased", "[nn]") {
  NetworkConfig c;
  c.hidden = 32;  // 128 mask rows
  c.dropout_prob = 0.7;
  NetworkParams p = gaitlab::init_network(c, 31);
  Rng data_rng(32), mask_rng(33);
  const int B = 20, T = 5;
  const MatrixXd x = random_matrix(7, B * T, data_rng);
  const auto cache = gaitlab::forward_train(x, B, T, p, mask_rng);

  const double keep_scale = 1.0 / 0.3;
  long zeros = 0;
  for (Eigen::Index i = 0; i < cache.smask.size(); ++i) {
    const double v = cache.smask.data()[i];
    REQUIRE((v == 0.0 || v == Catch::Approx(keep_scale).margin(1e-15)));
    if (v == 0.0) ++zeros;
  }
  const double n = static_cast<double>(cache.smask.size());
  CHECK(static_cast<double>(zeros) / n == Catch::Approx(0.7).margin(0.05));
  // E[mask] = 1 keeps activations unbiased between train and infer.
  CHECK(cache.smask.mean() == Catch::Approx(1.0).margin(0.06));

  NetworkConfig c0 = c;
  c0.dropout_prob = 0.0;
  NetworkParams p0 = gaitlab::init_network(c0, 31);
  Rng mask0(34);
  const auto cache0 = gaitlab::forward_train(x, B, T, p0, mask0);
  CHECK(cache0.smask.minCoeff() == 1.0);
  CHECK(cache0.smask.maxCoeff() == 1.0);
}

TEST_CASE("loss matches an independent per-element cross entropy", "[nn]") {
  Rng rng(41);
  const int m = 50;
  MatrixXd probs(2, m);
  std::vector<int> labels(m);
  for (int j = 0; j < m; ++j) {
    const double p1 = rng.uniform(0.01, 0.99);
    probs(0, j) = 1.0 - p1;
    probs(1, j) = p1;
    labels[j] = rng.uniform() < 0.5 ? 0 : 1;
  }
  double expected = 0.0;
  for (int j = 0; j < m; ++j) {
    const double y = labels[j];
    expected += -(y * std::log(probs(1, j)) + (1.0 - y) * std::log(probs(0, j)));
  }
  expected /= m;
  CHECK(gaitlab::loss(probs, labels) == Catch::Approx(expected).margin(1e-12));

  // Perfect predictions cost nothing; vanishing ones are clamped at 1e-12.
  MatrixXd perfect(2, 2);
  perfect << 1.0, 0.0, 0.0, 1.0;
  CHECK(gaitlab::loss(perfect, {0, 1}) == 0.0);
  MatrixXd half = MatrixXd::Constant(2, 4, 0.5);
  CHECK(gaitlab::loss(half, {0, 1, 0, 1}) == Catch::Approx(std::log(2.0)).margin(1e-15));
  MatrixXd tiny(2, 1);
  tiny << 1e-20, 1.0;
  CHECK(gaitlab::loss(tiny, {0}) == Catch::Approx(-std::log(1e-12)).margin(1e-9));

  CHECK_THROWS_AS(gaitlab::loss(half, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(gaitlab::loss(half, std::vector<int>{0, 1, 2, 0}), std::invalid_argument);
}

TEST_CASE("gradients match central finite differences on a tiny net", "[nn][gradcheck]") {
  const int B = 2, T = 5;

  SECTION("encoder, two layers, batch norm and dropout everywhere") {
    NetworkConfig c;
    c.hidden = 8;
    c.lstm_layers = 2;
    c.dropout_prob = 0.7;
    NetworkParams p = gaitlab::init_network(c, 42);
    Rng data_rng(43), label_rng(44);
    const MatrixXd x = random_matrix(7, B * T, data_rng);
    const auto labels = random_labels(B * T, label_rng);
    const auto r = grad_check(p, x, B, T, labels, 99);
    INFO("checked " << r.checked << " entries, worst " << r.worst << " rel " << r.max_rel);
    CHECK(r.checked > 2000);
    CHECK(r.failures == 0);
  }

  SECTION("plain lstm without encoder") {
    NetworkConfig c;
    c.use_encoder = false;
    c.hidden = 8;
    c.lstm_layers = 1;
    NetworkParams p = gaitlab::init_network(c, 45);
    Rng data_rng(46), label_rng(47);
    const MatrixXd x = random_matrix(7, B * T, data_rng);
    const auto labels = random_labels(B * T, label_rng);
    const auto r = grad_check(p, x, B, T, labels, 98);
    INFO("checked " << r.checked << " entries, worst " << r.worst << " rel " << r.max_rel);
    CHECK(r.failures == 0);
  }

  SECTION("encoder without batch norm or dropout") {
    NetworkConfig c;
    c.hidden = 8;
    c.lstm_layers = 1;
    c.dropout_prob = 0.0;
    c.bn_fc1 = c.bn_fc2 = c.bn_lstm = false;
    NetworkParams p = gaitlab::init_network(c, 48);
    Rng data_rng(49), label_rng(50);
    const MatrixXd x = random_matrix(7, B * T, data_rng);
    const auto labels = random_labels(B * T, label_rng);
    const auto r = grad_check(p, x, B, T, labels, 97);
    INFO("checked " << r.checked << " entries, worst " << r.worst << " rel " << r.max_rel);
    CHECK(r.failures == 0);
  }
}

TEST_CASE("saturated perfect predictions give zero loss and zero gradients", "[nn]") {
  NetworkConfig c;
  c.use_encoder = false;
  c.lstm_layers = 1;
  c.hidden = 4;
  NetworkParams p = gaitlab::init_network(c, 51);
  p.w_out.setZero();
  p.b_out << 50.0, -50.0;  // class 0 certain regardless of input

  Rng data_rng(52), mask_rng(53);
  const MatrixXd x = random_matrix(7, 6, data_rng);
  const std::vector<int> labels(6, 0);
  const auto cache = gaitlab::forward_train(x, 2, 3, p, mask_rng);
  CHECK(gaitlab::loss(cache.probs, labels) < 1e-12);
  const auto grads = gaitlab::backward(p, cache, labels);
  double max_norm = 0.0;
  gaitlab::for_each_param(grads, [&](const std::string&, const MatrixXd& m) {
    max_norm = std::max(max_norm, m.cwiseAbs().maxCoeff());
  });
  CHECK(max_norm < 1e-12);

  // grads mirror the architecture: one lstm layer configured, one present
  CHECK(grads.lstm.size() == 1);

  const auto infer_cache = gaitlab::forward_window({x.leftCols(3), {0, 0, 0}, 0}, p,
                                                   gaitlab::RunMode::Infer);
  CHECK_THROWS_AS(gaitlab::backward(p, infer_cache, {0, 0, 0}), std::invalid_argument);
}

TEST_CASE("adam first step and weight decay behave like the textbook update", "[nn]") {
  NetworkConfig c;
  c.use_encoder = false;
  c.lstm_layers = 1;
  c.hidden = 4;
  gaitlab::TrainConfig tc;
  tc.weight_decay = 0.0;
  tc.lr = 0.001;

  SECTION("zero gradients leave params untouched") {
    NetworkParams p = gaitlab::init_network(c, 61);
    const NetworkParams before = p;
    gaitlab::AdamState st;
    gaitlab::adam_step(p, gaitlab::zeros_like(p), st, tc.lr, tc);
    double max_diff = 0.0;
    std::vector<const MatrixXd*> now, was;
    gaitlab::for_each_param(p, [&](const std::string&, const MatrixXd& m) { now.push_back(&m); });
    gaitlab::for_each_param(before,
                            [&](const std::string&, const MatrixXd& m) { was.push_back(&m); });
    for (std::size_t i = 0; i < now.size(); ++i)
      max_diff = std::max(max_diff, (*now[i] - *was[i]).cwiseAbs().maxCoeff());
    CHECK(max_diff == 0.0);
  }

  SECTION("first step moves by lr against the gradient sign") {
    NetworkParams p = gaitlab::init_network(c, 62);
    const NetworkParams before = p;
    NetworkParams g = gaitlab::zeros_like(p);
    double fill = 0.37;
    gaitlab::for_each_param(g, [&](const std::string&, MatrixXd& m) {
      m.setConstant(fill);
      fill = -fill * 2.0;  // vary sign and magnitude across tensors
    });
    gaitlab::AdamState st;
    gaitlab::adam_step(p, g, st, tc.lr, tc);

    std::vector<const MatrixXd*> now, was, gs;
    gaitlab::for_each_param(p, [&](const std::string&, const MatrixXd& m) { now.push_back(&m); });
    gaitlab::for_each_param(before,
                            [&](const std::string&, const MatrixXd& m) { was.push_back(&m); });
    gaitlab::for_each_param(g, [&](const std::string&, const MatrixXd& m) { gs.push_back(&m); });
    for (std::size_t i = 0; i < now.size(); ++i) {
      const MatrixXd step = *now[i] - *was[i];
      const double sign = (*gs[i])(0, 0) > 0 ? 1.0 : -1.0;
      CHECK((step.array() + tc.lr * sign).abs().maxCoeff() < 1e-6);
    }
  }

  SECTION("pure weight decay shrinks a unit weight") {
    // Hand-computed: g = 0.01, mhat = 0.01, vhat = 0.0001,
    // step = lr * 0.01 / (0.01 + eps) which is essentially lr.
    NetworkParams p = gaitlab::init_network(c, 63);
    p.w_out.setConstant(1.0);
    gaitlab::TrainConfig wd = tc;
    wd.weight_decay = 0.01;
    gaitlab::AdamState st;
    gaitlab::adam_step(p, gaitlab::zeros_like(p), st, wd.lr, wd);
    CHECK(p.w_out(0, 0) < 1.0);
    CHECK(p.w_out(0, 0) == Catch::Approx(1.0 - wd.lr).margin(1e-8));
  }
}

TEST_CASE("training is deterministic and reduces loss on a separable set", "[nn]") {
  NetworkConfig nc;
  nc.hidden = 8;
  nc.lstm_layers = 1;
  nc.dropout_prob = 0.3;
  gaitlab::TrainConfig tc;
  tc.epochs = 12;
  tc.batch_size = 4;
  tc.lr = 0.005;
  tc.rng_seed = 7;

  Rng rng(71);
  std::vector<WindowSample> windows;
  for (int k = 0; k < 20; ++k) {
    const int label = k % 2;
    WindowSample w;
    w.inputs = random_matrix(7, 5, rng, 0.2);
    w.inputs.array() += label ? 0.5 : -0.5;
    w.labels.assign(5, label);
    windows.push_back(std::move(w));
  }

  const auto r1 = gaitlab::train(windows, nc, tc);
  const auto r2 = gaitlab::train(windows, nc, tc);
  REQUIRE(r1.history.size() == 12);
  CHECK(r1.history.back().mean_loss < r1.history.front().mean_loss);

  // bit-identical across runs with the same seed
  std::vector<const MatrixXd*> a, b;
  gaitlab::for_each_param(r1.params, [&](const std::string&, const MatrixXd& m) { a.push_back(&m); });
  gaitlab::for_each_param(r2.params, [&](const std::string&, const MatrixXd& m) { b.push_back(&m); });
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((*a[i] - *b[i]).cwiseAbs().maxCoeff() == 0.0);

  // learning rate schedule: full rate for the first half, a tenth after
  for (const auto& e : r1.history)
    CHECK(e.lr == Catch::Approx(2 * e.epoch > tc.epochs ? 0.0005 : 0.005));

  gaitlab::TrainConfig none = tc;
  none.epochs = 0;
  const auto r0 = gaitlab::train(windows, nc, none);
  const NetworkParams fresh =
      gaitlab::init_network(nc, gaitlab::derive_seed(tc.rng_seed, "params"));
  CHECK((r0.params.w_out - fresh.w_out).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r0.params.lstm[0].w_x - fresh.lstm[0].w_x).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(gaitlab::train({}, nc, tc), std::invalid_argument);
}

TEST_CASE("batched inference equals per-window inference", "[nn]") {
  NetworkConfig c;
  c.hidden = 8;
  c.lstm_layers = 2;
  NetworkParams p = gaitlab::init_network(c, 81);
  Rng rng(82);
  const int B = 3, T = 4;
  std::vector<MatrixXd> wins;
  for (int w = 0; w < B; ++w) wins.push_back(random_matrix(7, T, rng));

  MatrixXd x(7, B * T);
  for (int w = 0; w < B; ++w)
    for (int t = 0; t < T; ++t) x.col(t * B + w) = wins[w].col(t);

  const MatrixXd batched = gaitlab::forward_infer(x, B, T, p);
  for (int w = 0; w < B; ++w) {
    const MatrixXd single = gaitlab::forward_infer(wins[w], 1, T, p);
    for (int t = 0; t < T; ++t)
      CHECK(batched(1, t * B + w) == Catch::Approx(single(1, t)).margin(1e-12));
  }
}

TEST_CASE("stream prediction matches sliding windows", "[nn]") {
  NetworkConfig c;
  c.hidden = 8;
  c.lstm_layers = 2;
  NetworkParams p = gaitlab::init_network(c, 91);
  Rng rng(92);
  // Nontrivial batch-norm statistics so the affine path is exercised.
  for (auto* bn : {&p.bn1, &p.bn2, &p.bn_out}) {
    for (Eigen::Index i = 0; i < bn->running_mean.size(); ++i) {
      bn->running_mean(i) = rng.uniform(-1.0, 1.0);
      bn->running_var(i) = rng.uniform(0.5, 2.0);
      bn->gamma(i, 0) = rng.uniform(0.5, 1.5);
      bn->beta(i, 0) = rng.uniform(-0.5, 0.5);
    }
  }

  const int T = 7, F = 40;
  const MatrixXd features = random_matrix(7, F, rng);
  const VectorXd scanned = gaitlab::predict_stream(p, features, T, 8);

  for (int i = 0; i < T - 1; ++i) CHECK(std::isnan(scanned(i)));
  for (int e = T - 1; e < F; ++e) {
    const VectorXd win = gaitlab::predict_proba(p, features.middleCols(e - (T - 1), T));
    CHECK(scanned(e) == Catch::Approx(win(T - 1)).margin(1e-10));
  }

  const VectorXd short_stream = gaitlab::predict_stream(p, features.leftCols(T - 1), T);
  for (int i = 0; i < T - 1; ++i) CHECK(std::isnan(short_stream(i)));
}

TEST_CASE("forward rejects malformed inputs", "[nn]") {
  NetworkConfig c;
  c.hidden = 8;
  NetworkParams p = gaitlab::init_network(c, 95);
  Rng rng(96);
  const MatrixXd bad_rows = random_matrix(6, 10, rng);
  CHECK_THROWS_AS(gaitlab::forward_infer(bad_rows, 2, 5, p), std::invalid_argument);
  const MatrixXd x = random_matrix(7, 10, rng);
  CHECK_THROWS_AS(gaitlab::forward_infer(x, 3, 5, p), std::invalid_argument);
  CHECK_THROWS_AS(gaitlab::predict_proba(p, bad_rows), std::invalid_argument);
  CHECK_THROWS_AS(gaitlab::predict_stream(p, bad_rows, 5), std::invalid_argument);

  std::vector<WindowSample> mixed;
  WindowSample w1{random_matrix(7, 5, rng), {0, 0, 0, 0, 0}, 0};
  WindowSample w2{random_matrix(7, 4, rng), {0, 0, 0, 0}, 0};
  mixed.push_back(w1);
  mixed.push_back(w2);
  CHECK_THROWS_AS(gaitlab::train(mixed, c, gaitlab::TrainConfig{}), std::invalid_argument);
}
