#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gaitlab/sim.hpp"
#include "gaitlab/ukf.hpp"
#include "support/linear_kf.hpp"

using namespace gaitlab;

namespace {

Matrix4d random_psd(Rng& rng) {
  Matrix4d a;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = rng.gaussian();
  return a * a.transpose() + 1e-6 * Matrix4d::Identity();
}

}  // namespace

TEST_CASE("sigma points of a zero covariance collapse to the mean", "[ukf]") {
  UkfConfig c;
  const Vector4d mean(1.0, -2.0, 0.5, 0.1);
  SigmaPoints sp = sigma_points(mean, Matrix4d::Zero(), c);
  for (int i = 0; i < 9; ++i) REQUIRE((sp.points.col(i) - mean).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unit covariance with alpha=1 spreads points by sqrt(n+lambda)", "[ukf]") {
  UkfConfig c;
  c.alpha = 1.0;
  c.kappa = 0.0;
  const Vector4d mean = Vector4d::Zero();
  SigmaPoints sp = sigma_points(mean, Matrix4d::Identity(), c);
  // lambda = 0, so the spread is sqrt(4) = 2 along each axis.
  for (int i = 0; i < 4; ++i) {
    REQUIRE(sp.points(i, 1 + i) == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(sp.points(i, 5 + i) == Catch::Approx(-2.0).margin(1e-12));
  }
  Matrix4d rec = Matrix4d::Zero();
  for (int i = 0; i < 9; ++i) {
    const Vector4d d = sp.points.col(i) - mean;
    rec += sp.cov_w(i) * d * d.transpose();
  }
  REQUIRE((rec - Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("sigma points reconstruct the input moments", "[ukf]") {
  UkfConfig c;
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    Vector4d mean;
    for (int i = 0; i < 4; ++i) mean(i) = rng.gaussian(0.0, 3.0);
    const Matrix4d cov = random_psd(rng);
    SigmaPoints sp = sigma_points(mean, cov, c);
    const Vector4d rec_mean = sp.points * sp.mean_w;
    REQUIRE((rec_mean - mean).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + mean.cwiseAbs().maxCoeff()));
    Matrix4d rec = Matrix4d::Zero();
    for (int i = 0; i < 9; ++i) {
      const Vector4d d = sp.points.col(i) - rec_mean;
      rec += sp.cov_w(i) * d * d.transpose();
    }
    REQUIRE((rec - cov).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + cov.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("non-PSD covariance is rejected with a diagnostic", "[ukf]") {
  UkfConfig c;
  Matrix4d bad = Matrix4d::Identity();
  bad(3, 3) = -0.5;
  REQUIRE_THROWS_AS(sigma_points(Vector4d::Zero(), bad, c), std::runtime_error);
}

TEST_CASE("predict follows the kinematic motion model", "[ukf]") {
  UkfConfig c;
  c.sigma_speed = 0.0;
  c.sigma_turn = 0.0;

  SECTION("zero speed leaves position unchanged") {
    UkfState st;
    st.mean << 0.7, -0.3, 0.0, 2.4;
    st.cov.setZero();
    UkfState out = ukf_predict(st, 0.1, c);
    REQUIRE(out.mean(0) == Catch::Approx(0.7).margin(1e-12));
    REQUIRE(out.mean(1) == Catch::Approx(-0.3).margin(1e-12));
  }

  SECTION("unit speed with zero turn advances along x") {
    UkfState st;
    st.mean << 0.0, 0.0, 1.0, 0.0;
    st.cov.setZero();
    UkfState out = ukf_predict(st, 0.1, c);
    REQUIRE(out.mean(0) == Catch::Approx(0.1).margin(1e-12));
    REQUIRE(out.mean(1) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(out.t == Catch::Approx(st.t + 0.1));
  }

  SECTION("nonpositive dt is rejected") {
    UkfState st;
    REQUIRE_THROWS_AS(ukf_predict(st, 0.0, c), std::invalid_argument);
    REQUIRE_THROWS_AS(ukf_predict(st, -0.01, c), std::invalid_argument);
  }
}

TEST_CASE("update at the predicted position only shrinks uncertainty", "[ukf]") {
  UkfConfig c;
  UkfState st;
  st.mean << 1.0, 2.0, 0.3, 0.1;
  st.cov = Matrix4d::Identity() * 0.2;
  UkfState out = ukf_update(st, Vector2d(1.0, 2.0), c);
  REQUIRE(out.mean(0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(out.mean(1) == Catch::Approx(2.0).margin(1e-12));
  const double prior_pos_trace = st.cov(0, 0) + st.cov(1, 1);
  const double post_pos_trace = out.cov(0, 0) + out.cov(1, 1);
  REQUIRE(post_pos_trace < prior_pos_trace);
}

TEST_CASE("an uninformative observation leaves the state unchanged", "[ukf]") {
  UkfConfig c;
  c.obs_noise_x = c.obs_noise_y = 1e6;
  UkfState st;
  st.mean << -0.4, 1.2, 0.8, -0.2;
  st.cov = Matrix4d::Identity() * 0.3;
  UkfState out = ukf_update(st, Vector2d(3.0, -5.0), c);
  REQUIRE((out.mean - st.mean).cwiseAbs().maxCoeff() < 1e-6);
  REQUIRE((out.cov - st.cov).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("zero-turn filtering matches a linear Kalman filter", "[ukf]") {
  UkfConfig c;
  c.sigma_turn = 0.0;
  const double dt = 0.025;

  UkfState st;
  st.mean << 0.2, -0.4, 0.0, 0.0;
  st.cov.setZero();
  st.cov(0, 0) = c.obs_noise_x * c.obs_noise_x;
  st.cov(1, 1) = c.obs_noise_y * c.obs_noise_y;
  st.cov(2, 2) = 0.25;

  oracle::LinearKf kf;
  kf.mean = st.mean;
  kf.cov = st.cov;

  Matrix4d f = Matrix4d::Identity();
  f(0, 2) = dt;
  Matrix4d q = Matrix4d::Zero();
  q(2, 2) = c.sigma_speed * c.sigma_speed * dt;
  Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
  h(0, 0) = h(1, 1) = 1.0;
  Matrix2d r = Matrix2d::Zero();
  r(0, 0) = c.obs_noise_x * c.obs_noise_x;
  r(1, 1) = c.obs_noise_y * c.obs_noise_y;

  Rng rng(42);
  for (int step = 1; step <= 100; ++step) {
    const double t = step * dt;
    const Vector2d z(0.2 + 1.3 * t + rng.gaussian(0.0, 0.15),
                     -0.4 + rng.gaussian(0.0, 0.2));
    st = ukf_predict(st, dt, c);
    st = ukf_update(st, z, c);
    oracle::kf_predict(kf, f, q);
    oracle::kf_update(kf, h, r, z);
    REQUIRE((st.mean - kf.mean).cwiseAbs().maxCoeff() < 1e-8);
    REQUIRE((st.cov - kf.cov).cwiseAbs().maxCoeff() < 1e-8);
  }
  // The filter should have locked onto the true speed.
  REQUIRE(st.mean(2) == Catch::Approx(1.3).margin(0.25));
}

TEST_CASE("covariance stays symmetric PSD through random filtering", "[ukf]") {
  UkfConfig c;
  Rng rng(43);
  UkfState st;
  st.cov = Matrix4d::Identity();
  REQUIRE_NOTHROW([&] {
    for (int i = 0; i < 500; ++i) {
      st = ukf_predict(st, 0.01 + rng.uniform() * 0.05, c);
      if (rng.uniform() < 0.7)
        st = ukf_update(st, Vector2d(rng.gaussian(0.0, 2.0), rng.gaussian(0.0, 2.0)), c);
      check_covariance(st.cov, "test");
    }
  }());
}

TEST_CASE("track_stream validates its inputs", "[ukf]") {
  UkfConfig c;
  REQUIRE_THROWS_AS(track_stream({}, {0.0, 0.025}, c), std::invalid_argument);
  std::vector<ComDetection> dets = {{0.0, 0.1, 0.2}};
  REQUIRE_THROWS_AS(track_stream(dets, {}, c), std::invalid_argument);
  REQUIRE_THROWS_AS(track_stream(dets, {0.0, 0.0}, c), std::invalid_argument);
}

TEST_CASE("a single detection dead-reckons in place", "[ukf]") {
  UkfConfig c;
  std::vector<ComDetection> dets = {{0.0, 0.4, -0.1}};
  std::vector<double> ticks;
  for (int i = 0; i <= 20; ++i) ticks.push_back(i * 0.025);
  auto est = track_stream(dets, ticks, c);
  REQUIRE(est.size() == ticks.size());
  REQUIRE(est[0].from_update);
  for (std::size_t i = 1; i < est.size(); ++i) {
    REQUIRE_FALSE(est[i].from_update);
    REQUIRE(est[i].t == ticks[i]);
    // Zero initial speed: the posterior dead-reckons to a fixed point.
    REQUIRE(est[i].qx == Catch::Approx(0.4).margin(1e-9));
    REQUIRE(est[i].qy == Catch::Approx(-0.1).margin(1e-9));
  }
}

TEST_CASE("near-noiseless detections pin the estimates", "[ukf]") {
  UkfConfig c;
  c.obs_noise_x = c.obs_noise_y = 1e-6;
  c.assoc_window = 0.0125;
  std::vector<ComDetection> dets;
  std::vector<double> ticks;
  for (int i = 0; i <= 40; ++i) {
    const double t = i * 0.025;
    ticks.push_back(t);
    dets.push_back({t, 0.01 * i, 0.4 * t});
  }
  auto est = track_stream(dets, ticks, c);
  for (std::size_t i = 5; i < est.size(); ++i) {
    REQUIRE(est[i].from_update);
    REQUIRE(est[i].qx == Catch::Approx(dets[i].qx).margin(1e-3));
    REQUIRE(est[i].qy == Catch::Approx(dets[i].qy).margin(1e-3));
  }
}

TEST_CASE("tracking beats raw detections on a synthetic episode", "[ukf]") {
  SimConfig sc;
  sc.duration = 60.0;
  sc.fall_risk_count = 3;
  sc.rng_seed = 404;
  Episode ep = simulate_walk(sc);
  inject_fall_risk(ep, sc);
  sensorize(ep, sc);

  std::vector<double> ticks;
  for (const auto& fr : ep.frames) ticks.push_back(fr.t);
  UkfConfig uc;
  uc.assoc_window = 0.5 / sc.camera_rate;
  auto est = track_stream(ep.com_detections, ticks, uc);
  REQUIRE(est.size() == ticks.size());

  double raw_se = 0.0;
  for (const auto& d : ep.com_detections) {
    const Vector2d gt = interpolate_com(ep.frames, d.t);
    raw_se += (Vector2d(d.qx, d.qy) - gt).squaredNorm();
  }
  const double raw_rmse = std::sqrt(raw_se / static_cast<double>(ep.com_detections.size()));

  double est_se = 0.0;
  long fused = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const auto& fr = ep.frames[i];
    est_se += (Vector2d(est[i].qx, est[i].qy) - Vector2d(fr.com_x, fr.com_y)).squaredNorm();
    if (est[i].from_update) ++fused;
  }
  const double est_rmse = std::sqrt(est_se / static_cast<double>(est.size()));

  INFO("raw rmse " << raw_rmse << " filtered rmse " << est_rmse);
  REQUIRE(est_rmse < raw_rmse);

  // Detections arrive at 30 Hz with 20% dropout on a 40 Hz tick grid.
  const double fused_frac = static_cast<double>(fused) / static_cast<double>(est.size());
  const double expected = sc.camera_rate / sc.lrf_rate * (1.0 - sc.detection_dropout_prob);
  REQUIRE(fused_frac == Catch::Approx(expected).margin(0.05 * expected));
}
