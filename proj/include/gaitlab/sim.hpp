#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gaitlab/common.hpp"
#include "gaitlab/types.hpp"

namespace gaitlab {

// Everything is in meters / seconds, world frame: y points along the walking
// direction, x to the walker's right. The sensing robot keeps a fixed lead on
// the walker, so range-gate checks are relative to a co-moving anchor.
struct SimConfig {
  double walk_speed = 0.4;               // m/s, CoM forward speed
  double step_duration = 0.73;           // s per step (half gait cycle)
  double double_support_fraction = 0.3;  // share of the cycle with both feet down
  double step_width = 0.15;              // lateral distance between foot tracks
  double stride_length = 0.4;            // landing offset ahead of the CoM is half this
  double sway_amplitude = 0.03;          // lateral CoM sway toward the stance foot
  double duration = 300.0;               // s
  double lrf_rate = 40.0;                // Hz, leg tracker and tick grid
  double camera_rate = 30.0;             // Hz, CoM detector
  double com_noise_x = 0.15;             // m, CoM detection noise
  double com_noise_y = 0.20;             // m
  double leg_noise = 0.02;               // m, per-coordinate tibia noise
  double detection_dropout_prob = 0.2;   // camera frames lost

  int fall_risk_count = 15;              // unstable excursion windows per episode
  double fall_risk_duration = 6.0;       // s per window
  double fall_risk_offset = 0.5;         // m, peak CoM displacement
  double fall_risk_ramp_fraction = 0.1;  // raised-cosine ramp at each window edge
  double fall_risk_min_gap = 1.0;        // s between windows

  double robot_lead = 0.8;               // m, sensor anchor ahead of the CoM
  double lrf_min_range = 0.2;            // m, leg gate relative to the anchor
  double lrf_max_range = 1.5;            // m
  double max_step_width = 0.6;           // m, sanity bound on |x_l - x_r|

  std::uint64_t rng_seed = 1;
};

inline void validate(const SimConfig& c) {
  auto fail = [](const char* msg) { throw std::invalid_argument(std::string("SimConfig: ") + msg); };
  if (!(c.walk_speed > 0)) fail("walk_speed must be > 0");
  if (!(c.step_duration > 0)) fail("step_duration must be > 0");
  if (!(c.double_support_fraction > 0 && c.double_support_fraction < 1))
    fail("double_support_fraction must be in (0, 1)");
  if (!(c.step_width > 0)) fail("step_width must be > 0");
  if (!(c.stride_length > 0)) fail("stride_length must be > 0");
  if (c.sway_amplitude < 0) fail("sway_amplitude must be >= 0");
  if (!(c.duration > 0)) fail("duration must be > 0");
  if (!(c.lrf_rate > 0) || !(c.camera_rate > 0)) fail("sensor rates must be > 0");
  if (c.com_noise_x < 0 || c.com_noise_y < 0 || c.leg_noise < 0) fail("noise must be >= 0");
  if (c.detection_dropout_prob < 0 || c.detection_dropout_prob > 1)
    fail("detection_dropout_prob must be in [0, 1]");
  if (c.fall_risk_count < 0) fail("fall_risk_count must be >= 0");
  if (!(c.fall_risk_duration > 0)) fail("fall_risk_duration must be > 0");
  if (c.fall_risk_ramp_fraction < 0 || c.fall_risk_ramp_fraction > 0.5)
    fail("fall_risk_ramp_fraction must be in [0, 0.5]");
  if (!(c.lrf_max_range > c.lrf_min_range) || c.lrf_min_range < 0) fail("bad LRF range gate");
}

inline double cycle_period(const SimConfig& c) { return 2.0 * c.step_duration; }

// Swing begins once the stance share (double support + single support) of the
// cycle has elapsed: the foot is planted for (1 + f)/2 of its cycle.
inline double stance_fraction(const SimConfig& c) {
  return 0.5 * (1.0 + c.double_support_fraction);
}

inline GaitPhase phase_at(double t, const SimConfig& c) {
  const double C = cycle_period(c);
  const double f = c.double_support_fraction;
  double u = t / C - std::floor(t / C);
  if (u < 0.5 * f) return GaitPhase::LeftDS;
  if (u < 0.5) return GaitPhase::LeftStanceRightSwing;
  if (u < 0.5 + 0.5 * f) return GaitPhase::RightDS;
  return GaitPhase::RightStanceLeftSwing;
}

namespace detail {

inline double raised_cosine(double w) { return 0.5 * (1.0 - std::cos(kPi * w)); }

// Forward position of a foot whose landings happen at t = (k + phase_shift)*C,
// each landing placed half a stride ahead of the CoM at that instant.
inline double foot_forward_pos(double t, double phase_shift, const SimConfig& c) {
  const double C = cycle_period(c);
  const double p = 0.5 * c.stride_length;
  const double s = t / C - phase_shift;
  const double k = std::floor(s);
  const double u = s - k;
  const double landing = c.walk_speed * (k + phase_shift) * C + p;
  const double fs = stance_fraction(c);
  if (u < fs) return landing;
  const double w = (u - fs) / (1.0 - fs);
  return landing + c.walk_speed * C * raised_cosine(w);
}

}  // namespace detail

// Ground-truth CoM, before any fall-risk excursion. The lateral sway peaks
// toward the stance-side foot at mid single support.
inline Vector2d com_at(double t, const SimConfig& c) {
  const double C = cycle_period(c);
  const double f = c.double_support_fraction;
  const double u = t / C;
  const double x = -c.sway_amplitude * std::cos(2.0 * kPi * (u - 0.25 * (1.0 + f)));
  const double y = c.walk_speed * t;
  return {x, y};
}

inline GaitState gait_at(double t, const SimConfig& c) {
  GaitState g;
  g.x_l = -0.5 * c.step_width;
  g.x_r = 0.5 * c.step_width;
  g.y_l = detail::foot_forward_pos(t, 0.0, c);
  g.y_r = detail::foot_forward_pos(t, 0.5, c);
  g.phase = phase_at(t, c);
  return g;
}

// Range-gate and geometry sanity for one ground-truth state. The walker must
// stay inside the LRF's usable band relative to the co-moving robot anchor.
inline void validate_gait_state(const GaitState& g, double com_y, const SimConfig& c) {
  const double anchor = com_y + c.robot_lead;
  for (double y : {g.y_l, g.y_r}) {
    const double range = anchor - y;
    if (range < c.lrf_min_range || range > c.lrf_max_range)
      throw std::invalid_argument("gait state outside LRF range gate");
  }
  if (std::abs(g.x_l - g.x_r) > c.max_step_width)
    throw std::invalid_argument("lateral foot separation exceeds max_step_width");
}

// Pure kinematics, no randomness: frames on the LRF tick grid covering
// [0, duration]. Labels are filled in later by the stability pass.
inline Episode simulate_walk(const SimConfig& c, int subject_id = 0) {
  validate(c);
  Episode ep;
  ep.subject_id = subject_id;
  const long n = static_cast<long>(std::floor(c.duration * c.lrf_rate)) + 1;
  ep.frames.reserve(n);
  for (long i = 0; i < n; ++i) {
    TrajectoryFrame fr;
    fr.t = static_cast<double>(i) / c.lrf_rate;
    const Vector2d com = com_at(fr.t, c);
    fr.com_x = com.x();
    fr.com_y = com.y();
    fr.gait = gait_at(fr.t, c);
    validate_gait_state(fr.gait, fr.com_y, c);
    ep.frames.push_back(fr);
  }
  return ep;
}

struct FallRiskWindow {
  double start = 0.0;
  double duration = 0.0;
  double dir_x = 0.0, dir_y = 0.0;  // unit displacement direction
};

inline double window_activation(const FallRiskWindow& w, double t, double ramp_fraction) {
  if (t < w.start || t > w.start + w.duration) return 0.0;
  const double ramp = ramp_fraction * w.duration;
  const double into = t - w.start;
  const double left = w.duration - into;
  if (ramp <= 0.0) return 1.0;
  if (into < ramp) return detail::raised_cosine(into / ramp);
  if (left < ramp) return detail::raised_cosine(left / ramp);
  return 1.0;
}

// Displace the ground-truth CoM inside randomly placed, pairwise disjoint
// windows. Directions cycle right / left / backward; ramps keep the
// excursion continuous. Frames outside all windows are untouched.
inline std::vector<FallRiskWindow> inject_fall_risk(Episode& ep, const SimConfig& c) {
  validate(c);
  if (c.fall_risk_count == 0) return {};
  if (c.fall_risk_duration > c.duration ||
      c.fall_risk_count * (c.fall_risk_duration + c.fall_risk_min_gap) > c.duration)
    throw std::invalid_argument("fall-risk windows exceed episode duration");

  Rng rng(derive_seed(c.rng_seed, "inject"));
  std::vector<double> starts(c.fall_risk_count);
  const double latest = c.duration - c.fall_risk_duration;
  bool placed = false;
  for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
    for (double& s : starts) s = rng.uniform(0.0, latest);
    std::sort(starts.begin(), starts.end());
    placed = true;
    for (std::size_t i = 1; i < starts.size(); ++i)
      if (starts[i] - starts[i - 1] < c.fall_risk_duration + c.fall_risk_min_gap) {
        placed = false;
        break;
      }
  }
  if (!placed) throw std::runtime_error("could not place disjoint fall-risk windows");

  std::vector<FallRiskWindow> windows;
  windows.reserve(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    FallRiskWindow w;
    w.start = starts[i];
    w.duration = c.fall_risk_duration;
    switch (i % 3) {
      case 0: w.dir_x = 1.0; break;
      case 1: w.dir_x = -1.0; break;
      case 2: w.dir_y = -1.0; break;
    }
    windows.push_back(w);
  }

  std::size_t wi = 0;
  for (TrajectoryFrame& fr : ep.frames) {
    while (wi < windows.size() && fr.t > windows[wi].start + windows[wi].duration) ++wi;
    if (wi == windows.size()) break;
    const double a = window_activation(windows[wi], fr.t, c.fall_risk_ramp_fraction);
    if (a > 0.0) {
      fr.com_x += c.fall_risk_offset * a * windows[wi].dir_x;
      fr.com_y += c.fall_risk_offset * a * windows[wi].dir_y;
    }
  }
  return windows;
}

// Linear interpolation of the ground-truth CoM between frames. Exact at the
// frame instants themselves.
inline Vector2d interpolate_com(const std::vector<TrajectoryFrame>& frames, double t) {
  if (frames.empty()) throw std::invalid_argument("interpolate_com: no frames");
  if (t <= frames.front().t) return {frames.front().com_x, frames.front().com_y};
  if (t >= frames.back().t) return {frames.back().com_x, frames.back().com_y};
  auto it = std::upper_bound(frames.begin(), frames.end(), t,
                             [](double v, const TrajectoryFrame& f) { return v < f.t; });
  const TrajectoryFrame& b = *it;
  const TrajectoryFrame& a = *(it - 1);
  const double alpha = (t - a.t) / (b.t - a.t);
  return {a.com_x + alpha * (b.com_x - a.com_x), a.com_y + alpha * (b.com_y - a.com_y)};
}

// Turn ground truth into sensor streams: camera CoM detections on an exact
// 1/camera_rate grid with dropout and Gaussian noise, plus per-tick noisy leg
// observations. Ground-truth frames are left untouched.
inline void sensorize(Episode& ep, const SimConfig& c) {
  validate(c);
  if (ep.frames.empty()) throw std::invalid_argument("sensorize: episode has no frames");
  Rng com_rng(derive_seed(c.rng_seed, "sensor.com"));
  Rng drop_rng(derive_seed(c.rng_seed, "sensor.dropout"));
  Rng leg_rng(derive_seed(c.rng_seed, "sensor.legs"));

  ep.com_detections.clear();
  const long m = static_cast<long>(std::floor(c.duration * c.camera_rate)) + 1;
  ep.com_detections.reserve(m);
  for (long k = 0; k < m; ++k) {
    if (drop_rng.uniform() < c.detection_dropout_prob) continue;
    ComDetection d;
    d.t = static_cast<double>(k) / c.camera_rate;
    const Vector2d com = interpolate_com(ep.frames, d.t);
    d.qx = com.x() + com_rng.gaussian(0.0, c.com_noise_x);
    d.qy = com.y() + com_rng.gaussian(0.0, c.com_noise_y);
    ep.com_detections.push_back(d);
  }

  ep.gait_observations.clear();
  ep.gait_observations.reserve(ep.frames.size());
  for (const TrajectoryFrame& fr : ep.frames) {
    GaitObservation ob;
    ob.t = fr.t;
    // The robot drives open loop at the planned speed, so its reported
    // odometry is independent of how the walker actually moved.
    ob.anchor_y = c.walk_speed * fr.t + c.robot_lead;
    ob.gait = fr.gait;
    ob.gait.x_l += leg_rng.gaussian(0.0, c.leg_noise);
    ob.gait.y_l += leg_rng.gaussian(0.0, c.leg_noise);
    ob.gait.x_r += leg_rng.gaussian(0.0, c.leg_noise);
    ob.gait.y_r += leg_rng.gaussian(0.0, c.leg_noise);
    ep.gait_observations.push_back(ob);
  }
}

}  // namespace gaitlab
