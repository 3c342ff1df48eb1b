#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "gaitlab/common.hpp"
#include "gaitlab/types.hpp"

namespace gaitlab {

// State is (q^x, q^y, speed, turn rate). The motion model advances position by
// v*cos(w*dt)*dt / v*sin(w*dt)*dt, so with w near 0 the model carries speed
// along its x axis; track_stream aligns that axis with the walking direction.
struct UkfConfig {
  double sigma_speed = 0.98;  // m/s, speed process noise std
  double sigma_turn = 1.88;   // rad/s, turn-rate process noise std
  double obs_noise_x = 0.15;  // m, detection noise std per world axis
  double obs_noise_y = 0.20;  // m
  double alpha = 0.1;         // unscented spread
  double beta = 2.0;          // Gaussian prior weight
  double kappa = 0.0;
  double init_speed_std = 0.5;
  double init_turn_std = 0.5;
  double assoc_window = 0.5 / 30.0;  // s, half a camera period
  bool forward_axis_is_y = true;     // walking direction in the detection frame
};

inline void validate(const UkfConfig& c) {
  auto fail = [](const char* msg) { throw std::invalid_argument(std::string("UkfConfig: ") + msg); };
  if (!(c.obs_noise_x > 0) || !(c.obs_noise_y > 0)) fail("observation noise stds must be > 0");
  if (c.sigma_speed < 0 || c.sigma_turn < 0) fail("process noise stds must be >= 0");
  if (!(c.alpha > 0) || c.alpha > 1) fail("alpha must be in (0, 1]");
  if (c.kappa < 0) fail("kappa must be >= 0");
  if (!(c.assoc_window > 0)) fail("assoc_window must be > 0");
  if (c.init_speed_std < 0 || c.init_turn_std < 0) fail("initial stds must be >= 0");
}

struct UkfState {
  Vector4d mean = Vector4d::Zero();
  Matrix4d cov = Matrix4d::Identity();
  double t = 0.0;
};

// Symmetry within 1e-12 (relative to scale) and eigenvalues >= -1e-10.
inline void check_covariance(const Matrix4d& p, const char* where) {
  const double scale = 1.0 + p.cwiseAbs().maxCoeff();
  if (((p - p.transpose()).cwiseAbs().maxCoeff()) > 1e-12 * scale)
    throw std::runtime_error(std::string(where) + ": covariance not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix4d> es(p, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw std::runtime_error(std::string(where) + ": covariance not PSD (min eigenvalue " +
                             std::to_string(es.eigenvalues().minCoeff()) + ")");
}

namespace detail {

// S with S*S^T = p. Cholesky when possible, otherwise a symmetric-eigen
// square root with small negative eigenvalues clamped to zero.
inline Matrix4d matrix_sqrt(const Matrix4d& p, const char* where) {
  Eigen::LLT<Matrix4d> llt(p);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix4d> es(p);
  if (es.info() != Eigen::Success)
    throw std::runtime_error(std::string(where) + ": eigen decomposition failed");
  Vector4d ev = es.eigenvalues();
  const double scale = 1.0 + ev.cwiseAbs().maxCoeff();
  if (ev.minCoeff() < -1e-9 * scale)
    throw std::runtime_error(std::string(where) + ": matrix square root of non-PSD input (min eigenvalue " +
                             std::to_string(ev.minCoeff()) + ")");
  ev = ev.cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

}  // namespace detail

struct SigmaPoints {
  Eigen::Matrix<double, 4, 9> points;
  Eigen::Matrix<double, 9, 1> mean_w;
  Eigen::Matrix<double, 9, 1> cov_w;
};

inline SigmaPoints sigma_points(const Vector4d& mean, const Matrix4d& cov, const UkfConfig& c) {
  constexpr int n = 4;
  const double lambda = c.alpha * c.alpha * (n + c.kappa) - n;
  const double denom = n + lambda;
  SigmaPoints sp;
  const Matrix4d s = detail::matrix_sqrt(cov, "sigma_points");
  const double scale = std::sqrt(denom);
  sp.points.col(0) = mean;
  for (int i = 0; i < n; ++i) {
    sp.points.col(1 + i) = mean + scale * s.col(i);
    sp.points.col(1 + n + i) = mean - scale * s.col(i);
  }
  sp.mean_w.setConstant(1.0 / (2.0 * denom));
  sp.cov_w.setConstant(1.0 / (2.0 * denom));
  sp.mean_w(0) = lambda / denom;
  sp.cov_w(0) = lambda / denom + (1.0 - c.alpha * c.alpha + c.beta);
  return sp;
}

// Kinematic step: position advances by v*cos(w*dt)*dt, v*sin(w*dt)*dt;
// speed and turn rate stay constant within the step.
inline Vector4d propagate_motion(const Vector4d& x, double dt) {
  Vector4d out = x;
  out(0) += x(2) * std::cos(x(3) * dt) * dt;
  out(1) += x(2) * std::sin(x(3) * dt) * dt;
  return out;
}

inline UkfState ukf_predict(const UkfState& state, double dt, const UkfConfig& c) {
  if (!(dt > 0)) throw std::invalid_argument("ukf_predict: dt must be > 0");
  SigmaPoints sp = sigma_points(state.mean, state.cov, c);
  Eigen::Matrix<double, 4, 9> prop;
  for (int i = 0; i < 9; ++i) prop.col(i) = propagate_motion(sp.points.col(i), dt);

  UkfState out;
  out.t = state.t + dt;
  out.mean = prop * sp.mean_w;
  Matrix4d cov = Matrix4d::Zero();
  for (int i = 0; i < 9; ++i) {
    const Vector4d d = prop.col(i) - out.mean;
    cov += sp.cov_w(i) * d * d.transpose();
  }
  cov(2, 2) += c.sigma_speed * c.sigma_speed * dt;
  cov(3, 3) += c.sigma_turn * c.sigma_turn * dt;
  out.cov = 0.5 * (cov + cov.transpose());
  check_covariance(out.cov, "ukf_predict");
  return out;
}

// Linear measurement of the two position components.
inline UkfState ukf_update(const UkfState& state, const Vector2d& obs, const UkfConfig& c) {
  SigmaPoints sp = sigma_points(state.mean, state.cov, c);
  Eigen::Matrix<double, 2, 9> z = sp.points.topRows<2>();
  const Vector2d z_hat = z * sp.mean_w;

  Matrix2d s = Matrix2d::Zero();
  Eigen::Matrix<double, 4, 2> cxz = Eigen::Matrix<double, 4, 2>::Zero();
  for (int i = 0; i < 9; ++i) {
    const Vector2d dz = z.col(i) - z_hat;
    const Vector4d dx = sp.points.col(i) - state.mean;
    s += sp.cov_w(i) * dz * dz.transpose();
    cxz += sp.cov_w(i) * dx * dz.transpose();
  }
  s(0, 0) += c.obs_noise_x * c.obs_noise_x;
  s(1, 1) += c.obs_noise_y * c.obs_noise_y;

  Eigen::LLT<Matrix2d> llt(s);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("ukf_update: innovation covariance singular");
  const Eigen::Matrix<double, 4, 2> k = llt.solve(cxz.transpose()).transpose();

  UkfState out;
  out.t = state.t;
  out.mean = state.mean + k * (obs - z_hat);
  Matrix4d cov = state.cov - k * s * k.transpose();
  out.cov = 0.5 * (cov + cov.transpose());
  check_covariance(out.cov, "ukf_update");
  return out;
}

// One pass over the LRF tick grid: a detection is fused at its nearest tick
// when within the association window, every other tick is predict-only.
// Internally the filter runs in a frame whose x axis follows the walking
// direction (the motion model carries speed along x when the turn rate is
// small); estimates are mapped back to the detection frame.
inline std::vector<ComEstimate> track_stream(const std::vector<ComDetection>& detections,
                                             const std::vector<double>& ticks,
                                             const UkfConfig& c) {
  validate(c);
  if (detections.empty()) throw std::invalid_argument("track_stream: empty detection stream");
  if (ticks.empty()) throw std::invalid_argument("track_stream: no ticks");
  for (std::size_t i = 1; i < ticks.size(); ++i)
    if (!(ticks[i] > ticks[i - 1]))
      throw std::invalid_argument("track_stream: ticks must be strictly increasing");
  for (std::size_t i = 1; i < detections.size(); ++i)
    if (!(detections[i].t > detections[i - 1].t))
      throw std::invalid_argument("track_stream: detections must be strictly increasing in time");

  const bool swap = c.forward_axis_is_y;
  auto to_filter = [&](double qx, double qy) -> Vector2d {
    return swap ? Vector2d(qy, qx) : Vector2d(qx, qy);
  };
  UkfConfig fc = c;
  if (swap) std::swap(fc.obs_noise_x, fc.obs_noise_y);

  // Nearest tick per detection; on a collision only the closest detection is
  // fused, the other is treated as missing.
  std::vector<std::ptrdiff_t> fused(ticks.size(), -1);
  for (std::size_t d = 0; d < detections.size(); ++d) {
    const double t = detections[d].t;
    auto it = std::lower_bound(ticks.begin(), ticks.end(), t);
    std::size_t j = static_cast<std::size_t>(it - ticks.begin());
    if (j == ticks.size()) --j;
    if (j > 0 && t - ticks[j - 1] < ticks[j] - t) --j;
    if (std::abs(ticks[j] - t) > c.assoc_window) continue;
    if (fused[j] >= 0 &&
        std::abs(detections[fused[j]].t - ticks[j]) <= std::abs(t - ticks[j]))
      continue;
    fused[j] = static_cast<std::ptrdiff_t>(d);
  }

  UkfState st;
  st.t = ticks.front();
  st.mean.setZero();
  st.mean.head<2>() = to_filter(detections.front().qx, detections.front().qy);
  st.cov.setZero();
  st.cov(0, 0) = fc.obs_noise_x * fc.obs_noise_x;
  st.cov(1, 1) = fc.obs_noise_y * fc.obs_noise_y;
  st.cov(2, 2) = fc.init_speed_std * fc.init_speed_std;
  st.cov(3, 3) = fc.init_turn_std * fc.init_turn_std;

  std::vector<ComEstimate> out;
  out.reserve(ticks.size());
  for (std::size_t j = 0; j < ticks.size(); ++j) {
    if (j > 0) st = ukf_predict(st, ticks[j] - ticks[j - 1], fc);
    const bool has_det = fused[j] >= 0;
    if (has_det) {
      const ComDetection& d = detections[static_cast<std::size_t>(fused[j])];
      st = ukf_update(st, to_filter(d.qx, d.qy), fc);
    }
    ComEstimate e;
    e.t = ticks[j];
    e.qx = swap ? st.mean(1) : st.mean(0);
    e.qy = swap ? st.mean(0) : st.mean(1);
    e.from_update = has_det;
    out.push_back(e);
  }
  return out;
}

}  // namespace gaitlab
