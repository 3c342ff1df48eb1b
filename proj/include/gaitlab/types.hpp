#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gaitlab {

// Four-phase gait cycle. Double support alternates with single support;
// the swing leg is named explicitly so observers know which tibia moves.
enum class GaitPhase : int {
  LeftDS = 0,               // both feet down, left foot just landed
  LeftStanceRightSwing = 1,
  RightDS = 2,              // both feet down, right foot just landed
  RightStanceLeftSwing = 3,
};

inline bool is_double_support(GaitPhase p) {
  return p == GaitPhase::LeftDS || p == GaitPhase::RightDS;
}

inline GaitPhase next_phase(GaitPhase p) {
  return static_cast<GaitPhase>((static_cast<int>(p) + 1) % 4);
}

inline std::string to_string(GaitPhase p) {
  switch (p) {
    case GaitPhase::LeftDS: return "LeftDS";
    case GaitPhase::LeftStanceRightSwing: return "LeftStanceRightSwing";
    case GaitPhase::RightDS: return "RightDS";
    case GaitPhase::RightStanceLeftSwing: return "RightStanceLeftSwing";
  }
  throw std::invalid_argument("unknown GaitPhase");
}

inline GaitPhase gait_phase_from_string(std::string_view s) {
  if (s == "LeftDS") return GaitPhase::LeftDS;
  if (s == "LeftStanceRightSwing") return GaitPhase::LeftStanceRightSwing;
  if (s == "RightDS") return GaitPhase::RightDS;
  if (s == "RightStanceLeftSwing") return GaitPhase::RightStanceLeftSwing;
  throw std::invalid_argument("unknown GaitPhase name: " + std::string(s));
}

// Planar tibia positions of both legs plus the current phase, in meters,
// world frame (x lateral, y along the walking direction).
struct GaitState {
  double x_l = 0.0, y_l = 0.0;
  double x_r = 0.0, y_r = 0.0;
  GaitPhase phase = GaitPhase::LeftDS;
};

enum class StabilityLabel : int { Safe = 0, FallRisk = 1 };

inline std::string to_string(StabilityLabel l) {
  return l == StabilityLabel::Safe ? "Safe" : "FallRisk";
}

inline StabilityLabel stability_label_from_string(std::string_view s) {
  if (s == "Safe") return StabilityLabel::Safe;
  if (s == "FallRisk") return StabilityLabel::FallRisk;
  throw std::invalid_argument("unknown StabilityLabel name: " + std::string(s));
}

// Ground-truth sample of the walker at one LRF tick.
struct TrajectoryFrame {
  double t = 0.0;
  double com_x = 0.0, com_y = 0.0;
  GaitState gait;
  StabilityLabel label = StabilityLabel::Safe;
};

// One noisy camera fix of the CoM. Timestamps sit on the camera grid but
// frames can be missing (detector dropout).
struct ComDetection {
  double t = 0.0;
  double qx = 0.0, qy = 0.0;
};

// One noisy LRF observation of the legs, stamped with the sensing robot's own
// forward odometry so downstream consumers can work in the robot's frame.
struct GaitObservation {
  double t = 0.0;
  double anchor_y = 0.0;  // robot forward position at scan time
  GaitState gait;
};

// Filtered CoM position at one LRF tick. from_update marks ticks where a
// camera detection was fused rather than dead-reckoned.
struct ComEstimate {
  double t = 0.0;
  double qx = 0.0, qy = 0.0;
  bool from_update = false;
};

// A full simulated walking episode: ground truth plus both sensor streams.
struct Episode {
  int subject_id = 0;
  std::vector<TrajectoryFrame> frames;
  std::vector<ComDetection> com_detections;
  std::vector<GaitObservation> gait_observations;
};

}  // namespace gaitlab
