#pragma once

// Textbook linear Kalman filter, used as an independent oracle for the
// unscented filter in the zero-turn (linear) regime.

#include <Eigen/Dense>

namespace oracle {

using Eigen::Matrix2d;
using Eigen::Matrix4d;
using Eigen::Vector2d;
using Eigen::Vector4d;

struct LinearKf {
  Vector4d mean = Vector4d::Zero();
  Matrix4d cov = Matrix4d::Identity();
};

inline void kf_predict(LinearKf& kf, const Matrix4d& f, const Matrix4d& q) {
  kf.mean = f * kf.mean;
  kf.cov = f * kf.cov * f.transpose() + q;
}

inline void kf_update(LinearKf& kf, const Eigen::Matrix<double, 2, 4>& h, const Matrix2d& r,
                      const Vector2d& z) {
  const Matrix2d s = h * kf.cov * h.transpose() + r;
  const Eigen::Matrix<double, 4, 2> k = kf.cov * h.transpose() * s.inverse();
  kf.mean += k * (z - h * kf.mean);
  kf.cov = (Matrix4d::Identity() - k * h) * kf.cov;
}

}  // namespace oracle
