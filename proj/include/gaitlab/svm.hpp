#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaitlab/common.hpp"

namespace gaitlab {

// Soft-margin SVM with a Gaussian kernel, trained by sequential minimal
// optimization with maximal-violating-pair working set selection. Fully
// deterministic: no randomness, ties broken by lowest index.

struct SvmConfig {
  double C = 10.0;
  double gamma = 0.0;  // <= 0 selects 1 / (dim * variance of all entries)
  double tol = 1e-3;
  long max_iter = 200000;
};

inline void validate(const SvmConfig& c) {
  if (!(c.C > 0)) throw std::invalid_argument("SvmConfig: C must be > 0");
  if (!(c.tol > 0)) throw std::invalid_argument("SvmConfig: tol must be > 0");
  if (c.max_iter < 1) throw std::invalid_argument("SvmConfig: max_iter must be >= 1");
}

inline double gaussian_kernel(const VectorXd& a, const VectorXd& b, double gamma) {
  if (!(gamma > 0)) throw std::invalid_argument("gaussian_kernel: gamma must be > 0");
  return std::exp(-gamma * (a - b).squaredNorm());
}

// Kernel width heuristic: 1 / (dim * population variance over every entry).
// Standardized features give roughly 1/dim.
inline double auto_gamma(const MatrixXd& x) {
  const double mean = x.mean();
  double var = (x.array() - mean).square().mean();
  if (var < 1e-12) var = 1.0;
  return 1.0 / (static_cast<double>(x.rows()) * var);
}

struct SvmModel {
  MatrixXd support;  // dim x m, one support vector per column
  VectorXd coef;     // alpha_i * y_i per support vector
  double bias = 0.0;
  double gamma = 0.0;
  double C = 0.0;
};

namespace detail {

// exp(-gamma * squared distance) between every column of x and the point p.
inline VectorXd kernel_column(const MatrixXd& x, const VectorXd& sqn, const VectorXd& p,
                              double gamma) {
  VectorXd row = sqn;
  row.array() += p.squaredNorm();
  row.noalias() -= 2.0 * (x.transpose() * p);
  return (row.array().max(0.0) * -gamma).exp().matrix();
}

}  // namespace detail

// Dual SMO on labels in {-1, +1}. Maintains F_i = sum_j alpha_j y_j K_ij - y_i
// so the pair update needs no running bias. Throws on non-convergence.
inline SvmModel smo_train(const MatrixXd& x, const std::vector<int>& y, const SvmConfig& cfg) {
  validate(cfg);
  const Eigen::Index n = x.cols();
  if (n < 2 || static_cast<Eigen::Index>(y.size()) != n)
    throw std::invalid_argument("smo_train: need >= 2 samples with matching labels");
  long pos = 0, neg = 0;
  for (const int l : y) {
    if (l == 1)
      ++pos;
    else if (l == -1)
      ++neg;
    else
      throw std::invalid_argument("smo_train: labels must be -1 or +1");
  }
  if (pos == 0 || neg == 0) throw std::invalid_argument("smo_train: need both classes");

  const double gamma = cfg.gamma > 0 ? cfg.gamma : auto_gamma(x);
  const double C = cfg.C;

  const VectorXd sqn = x.colwise().squaredNorm().transpose();

  // Full kernel matrix when it fits comfortably; otherwise rows on demand.
  const bool cache_full = n <= 8192;
  MatrixXd kfull;
  if (cache_full) {
    kfull.noalias() = -2.0 * (x.transpose() * x);
    kfull.colwise() += sqn;
    kfull.rowwise() += sqn.transpose();
    kfull = (kfull.array().max(0.0) * -gamma).exp().matrix();
  }
  auto kernel_row = [&](Eigen::Index i) -> VectorXd {
    if (cache_full) return kfull.col(i);
    return detail::kernel_column(x, sqn, x.col(i), gamma);
  };

  VectorXd alpha = VectorXd::Zero(n);
  VectorXd f(n);
  for (Eigen::Index i = 0; i < n; ++i) f(i) = -static_cast<double>(y[static_cast<std::size_t>(i)]);

  auto in_up = [&](Eigen::Index t) {
    return (y[static_cast<std::size_t>(t)] == 1 && alpha(t) < C) ||
           (y[static_cast<std::size_t>(t)] == -1 && alpha(t) > 0);
  };
  auto in_low = [&](Eigen::Index t) {
    return (y[static_cast<std::size_t>(t)] == 1 && alpha(t) > 0) ||
           (y[static_cast<std::size_t>(t)] == -1 && alpha(t) < C);
  };

  for (long iters = 0;; ++iters) {
    Eigen::Index i = -1, j = -1;
    double fmin = std::numeric_limits<double>::infinity();
    double fmax = -std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (in_up(t) && f(t) < fmin) {
        fmin = f(t);
        i = t;
      }
      if (in_low(t) && f(t) > fmax) {
        fmax = f(t);
        j = t;
      }
    }
    if (i < 0 || j < 0) break;
    const double violation = fmax - fmin;
    if (violation <= cfg.tol) break;
    if (iters >= cfg.max_iter)
      throw std::runtime_error("smo_train: no convergence after " + std::to_string(iters) +
                               " updates, violation " + std::to_string(violation) + " > tol " +
                               std::to_string(cfg.tol));

    const double yi = y[static_cast<std::size_t>(i)], yj = y[static_cast<std::size_t>(j)];
    const VectorXd ki = kernel_row(i);
    const VectorXd kj = kernel_row(j);

    double lo, hi;
    if (yi != yj) {
      lo = std::max(0.0, alpha(j) - alpha(i));
      hi = std::min(C, C + alpha(j) - alpha(i));
    } else {
      lo = std::max(0.0, alpha(i) + alpha(j) - C);
      hi = std::min(C, alpha(i) + alpha(j));
    }

    double eta = 2.0 - 2.0 * ki(j);  // k(x,x) = 1 for the Gaussian kernel
    if (eta < 1e-12) eta = 1e-12;    // duplicate points: step straight to a bound
    double aj = alpha(j) + yj * (f(i) - f(j)) / eta;
    aj = std::min(hi, std::max(lo, aj));
    // Snap onto the exact box bounds. A multiplier parked an ulp away from a
    // bound would stay in the selectable sets with no usable headroom and the
    // same pair would be picked forever.
    const double snap = 1e-10 * C;
    if (aj < snap)
      aj = 0.0;
    else if (aj > C - snap)
      aj = C;
    const double dj = aj - alpha(j);
    double ai = alpha(i) - yi * yj * dj;
    if (ai < snap)
      ai = 0.0;
    else if (ai > C - snap)
      ai = C;
    const double di = ai - alpha(i);
    if (di == 0.0 && dj == 0.0)
      throw std::runtime_error("smo_train: stalled working pair");

    alpha(i) = ai;
    alpha(j) = aj;
    f.noalias() += (yi * di) * ki;
    f.noalias() += (yj * dj) * kj;
  }

  // Bias from the optimality bounds; free vectors pin it tightly.
  double free_sum = 0.0;
  long free_count = 0;
  double up_min = std::numeric_limits<double>::infinity();
  double low_max = -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < n; ++t) {
    if (alpha(t) > 1e-9 && alpha(t) < C - 1e-9) {
      free_sum += f(t);
      ++free_count;
    }
    if (in_up(t)) up_min = std::min(up_min, f(t));
    if (in_low(t)) low_max = std::max(low_max, f(t));
  }
  const double bias =
      free_count > 0 ? -free_sum / static_cast<double>(free_count) : -0.5 * (up_min + low_max);

  SvmModel model;
  model.gamma = gamma;
  model.C = C;
  model.bias = bias;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < n; ++t)
    if (alpha(t) > 1e-9) sv.push_back(t);
  model.support.resize(x.rows(), static_cast<Eigen::Index>(sv.size()));
  model.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    model.support.col(static_cast<Eigen::Index>(k)) = x.col(sv[k]);
    model.coef(static_cast<Eigen::Index>(k)) =
        alpha(sv[k]) * static_cast<double>(y[static_cast<std::size_t>(sv[k])]);
  }
  return model;
}

inline double decision_score(const SvmModel& m, const VectorXd& x) {
  if (m.support.cols() == 0) return m.bias;
  if (x.size() != m.support.rows()) throw std::invalid_argument("decision_score: wrong dim");
  const VectorXd sqn = m.support.colwise().squaredNorm().transpose();
  return m.coef.dot(detail::kernel_column(m.support, sqn, x, m.gamma)) + m.bias;
}

// Scores for every column of x in one shot.
inline VectorXd decision_scores(const SvmModel& m, const MatrixXd& x) {
  if (m.support.cols() == 0) return VectorXd::Constant(x.cols(), m.bias);
  if (x.rows() != m.support.rows()) throw std::invalid_argument("decision_scores: wrong dim");
  const VectorXd sv_sqn = m.support.colwise().squaredNorm().transpose();
  const VectorXd x_sqn = x.colwise().squaredNorm().transpose();
  MatrixXd d2 = -2.0 * (m.support.transpose() * x);
  d2.colwise() += sv_sqn;
  d2.rowwise() += x_sqn.transpose();
  const MatrixXd k = (d2.array().max(0.0) * -m.gamma).exp().matrix();
  VectorXd scores = (m.coef.transpose() * k).transpose();
  scores.array() += m.bias;
  return scores;
}

}  // namespace gaitlab
