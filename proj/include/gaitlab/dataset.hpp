#pragma once

#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gaitlab/common.hpp"
#include "gaitlab/nn.hpp"
#include "gaitlab/sim.hpp"
#include "gaitlab/stability.hpp"
#include "gaitlab/types.hpp"
#include "gaitlab/ukf.hpp"

namespace gaitlab {

inline constexpr int kFeatureDim = 7;

// One classifier input instant: the seven observed features at an LRF tick,
// plus the ground truth needed to recompute the label under augmentation.
struct TickRecord {
  double t = 0.0;
  VectorXd features;  // [qx, qy, x_l, y_l, x_r, y_r, phase], robot frame
  double raw_qx = 0.0, raw_qy = 0.0;  // nearest unfiltered camera fix, world frame
  GaitState raw_gait;                 // unstandardized LRF observation, world frame
  bool from_update = false;           // tracker fused a detection at this tick
  StabilityLabel label = StabilityLabel::Safe;
  double gt_com_x = 0.0, gt_com_y = 0.0;
  GaitState gt_gait;
};

struct TrackStats {
  double raw_rmse = 0.0;       // camera detections vs ground truth
  double filtered_rmse = 0.0;  // tracker output vs ground truth
  double fall_risk_fraction = 0.0;
};

struct SubjectTrack {
  int subject_id = 0;
  bool augmented = false;
  std::vector<TickRecord> ticks;
  TrackStats stats;
};

// Forward coordinates are expressed relative to the robot's odometry anchor;
// in world coordinates the walk drift dwarfs the gait-scale geometry and
// standardization would bury it.
inline VectorXd observation_features(const ComEstimate& est, const GaitObservation& obs) {
  VectorXd f(kFeatureDim);
  f << est.qx, est.qy - obs.anchor_y, obs.gait.x_l, obs.gait.y_l - obs.anchor_y, obs.gait.x_r,
      obs.gait.y_r - obs.anchor_y, static_cast<double>(static_cast<int>(obs.gait.phase));
  return f;
}

inline double fall_risk_fraction(const std::vector<TickRecord>& ticks) {
  if (ticks.empty()) return 0.0;
  std::size_t fr = 0;
  for (const auto& r : ticks)
    if (r.label == StabilityLabel::FallRisk) ++fr;
  return static_cast<double>(fr) / static_cast<double>(ticks.size());
}

// Runs the tracker over a sensorized episode and pairs each tick's
// observations with its ground truth.
inline SubjectTrack assemble_track(const Episode& ep, const UkfConfig& ukf_cfg) {
  std::vector<double> tick_times(ep.frames.size());
  for (std::size_t i = 0; i < ep.frames.size(); ++i) tick_times[i] = ep.frames[i].t;
  const std::vector<ComEstimate> estimates = track_stream(ep.com_detections, tick_times, ukf_cfg);

  if (estimates.size() != ep.frames.size() || ep.gait_observations.size() != ep.frames.size())
    throw std::runtime_error("assemble_track: stream length mismatch");

  SubjectTrack track;
  track.subject_id = ep.subject_id;
  track.ticks.resize(ep.frames.size());
  double filt_sq = 0.0;
  std::size_t det = 0;  // nearest-detection cursor, advanced with the ticks
  for (std::size_t i = 0; i < ep.frames.size(); ++i) {
    const TrajectoryFrame& fr = ep.frames[i];
    TickRecord& r = track.ticks[i];
    r.t = fr.t;
    r.features = observation_features(estimates[i], ep.gait_observations[i]);
    while (det + 1 < ep.com_detections.size() &&
           std::abs(ep.com_detections[det + 1].t - fr.t) <
               std::abs(ep.com_detections[det].t - fr.t))
      ++det;
    r.raw_qx = ep.com_detections[det].qx;
    r.raw_qy = ep.com_detections[det].qy;
    r.raw_gait = ep.gait_observations[i].gait;
    r.from_update = estimates[i].from_update;
    r.label = fr.label;
    r.gt_com_x = fr.com_x;
    r.gt_com_y = fr.com_y;
    r.gt_gait = fr.gait;
    const double ex = estimates[i].qx - fr.com_x;
    const double ey = estimates[i].qy - fr.com_y;
    filt_sq += ex * ex + ey * ey;
  }
  track.stats.filtered_rmse = std::sqrt(filt_sq / static_cast<double>(ep.frames.size()));

  double raw_sq = 0.0;
  for (const ComDetection& d : ep.com_detections) {
    const Vector2d gt = interpolate_com(ep.frames, d.t);
    const double ex = d.qx - gt.x();
    const double ey = d.qy - gt.y();
    raw_sq += ex * ex + ey * ey;
  }
  if (!ep.com_detections.empty())
    track.stats.raw_rmse = std::sqrt(raw_sq / static_cast<double>(ep.com_detections.size()));

  track.stats.fall_risk_fraction = fall_risk_fraction(track.ticks);
  return track;
}

// Full per-subject pipeline: simulate, disturb, label, sensorize, track.
inline SubjectTrack build_track(const SimConfig& sim_cfg, const UkfConfig& ukf_cfg,
                                const FootGeometry& geom, const LabelThresholds& th,
                                int subject_id) {
  Episode ep = simulate_walk(sim_cfg, subject_id);
  inject_fall_risk(ep, sim_cfg);
  label_episode(ep, geom, th);
  sensorize(ep, sim_cfg);
  return assemble_track(ep, ukf_cfg);
}

// Perturbed copy of a track. Ticks labeled safe get Gaussian CoM noise added
// to both the ground truth and the observed estimate, and the label is then
// recomputed from the perturbed ground truth; fall-risk ticks pass through
// untouched, so the copy can only add fall-risk instants, never lose them.
inline SubjectTrack augment_track(const SubjectTrack& src, double sigma_x, double sigma_y,
                                  std::uint64_t seed, const FootGeometry& geom,
                                  const LabelThresholds& th) {
  if (sigma_x < 0.0 || sigma_y < 0.0)
    throw std::invalid_argument("augment_track: noise stddev must be non-negative");
  Rng rng(seed);
  SubjectTrack out = src;
  out.augmented = true;
  for (TickRecord& r : out.ticks) {
    if (r.label != StabilityLabel::Safe) continue;
    const double nx = rng.gaussian(0.0, sigma_x);
    const double ny = rng.gaussian(0.0, sigma_y);
    r.gt_com_x += nx;
    r.gt_com_y += ny;
    r.features(0) += nx;
    r.features(1) += ny;
    r.raw_qx += nx;
    r.raw_qy += ny;
    const double margin =
        signed_margin(Vector2d(r.gt_com_x, r.gt_com_y), bos_from_gait_state(r.gt_gait, geom));
    r.label = label_frame(margin, r.gt_gait.phase, th);
  }
  out.stats.fall_risk_fraction = fall_risk_fraction(out.ticks);
  return out;
}

inline MatrixXd track_features(const SubjectTrack& track) {
  MatrixXd m(kFeatureDim, static_cast<Eigen::Index>(track.ticks.size()));
  for (std::size_t i = 0; i < track.ticks.size(); ++i) {
    if (track.ticks[i].features.size() != kFeatureDim)
      throw std::invalid_argument("track_features: malformed tick");
    m.col(static_cast<Eigen::Index>(i)) = track.ticks[i].features;
  }
  return m;
}

inline std::vector<int> track_labels(const SubjectTrack& track) {
  std::vector<int> y(track.ticks.size());
  for (std::size_t i = 0; i < track.ticks.size(); ++i)
    y[i] = track.ticks[i].label == StabilityLabel::FallRisk ? 1 : 0;
  return y;
}

// Per-feature mean and stddev of a training set. Zero-variance features are
// passed through unchanged (mean 0, std 1) so standardization is always
// invertible.
struct FeatureStats {
  VectorXd mean, std;
};

inline FeatureStats feature_stats(const MatrixXd& train) {
  if (train.cols() == 0) throw std::invalid_argument("feature_stats: empty training set");
  FeatureStats s;
  s.mean = train.rowwise().mean();
  const VectorXd var =
      (train.colwise() - s.mean).array().square().rowwise().mean().matrix();
  s.std = var.array().sqrt().matrix();
  for (Eigen::Index i = 0; i < s.std.size(); ++i) {
    if (s.std(i) < 1e-12) {
      s.mean(i) = 0.0;
      s.std(i) = 1.0;
    }
  }
  return s;
}

inline MatrixXd apply_stats(const FeatureStats& s, const MatrixXd& x) {
  if (x.rows() != s.mean.size())
    throw std::invalid_argument("apply_stats: feature dimension mismatch");
  return ((x.colwise() - s.mean).array().colwise() / s.std.array()).matrix();
}

inline MatrixXd invert_stats(const FeatureStats& s, const MatrixXd& x) {
  if (x.rows() != s.mean.size())
    throw std::invalid_argument("invert_stats: feature dimension mismatch");
  return ((x.array().colwise() * s.std.array()).matrix().colwise() + s.mean);
}

inline std::pair<MatrixXd, FeatureStats> standardize(const MatrixXd& train) {
  FeatureStats s = feature_stats(train);
  return {apply_stats(s, train), std::move(s)};
}

// Slices a feature stream into fixed-length windows. Starts at frame 0 and
// advances by stride; a stream shorter than one window yields nothing.
inline std::vector<WindowSample> windowize(const MatrixXd& features,
                                           const std::vector<int>& labels, int window,
                                           int stride, int subject_id = 0) {
  if (window < 1) throw std::invalid_argument("windowize: window must be positive");
  if (stride < 1) throw std::invalid_argument("windowize: stride must be positive");
  if (features.cols() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("windowize: feature/label length mismatch");
  std::vector<WindowSample> out;
  const Eigen::Index n = features.cols();
  if (n < window) {
    std::cerr << "windowize: stream of " << n << " frames is shorter than one window ("
              << window << "), yielding nothing\n";
    return out;
  }
  for (Eigen::Index start = 0; start + window <= n; start += stride) {
    WindowSample w;
    w.subject_id = subject_id;
    w.inputs = features.middleCols(start, window);
    w.labels.assign(labels.begin() + start, labels.begin() + start + window);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace gaitlab
