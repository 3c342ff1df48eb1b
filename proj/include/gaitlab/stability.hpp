#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gaitlab/common.hpp"
#include "gaitlab/types.hpp"

namespace gaitlab {

// Feet are modeled as axis-aligned rectangles centered a small forward offset
// ahead of the tracked tibia point.
struct FootGeometry {
  double foot_length = 0.25;          // m, along the walking direction
  double foot_width = 0.10;           // m, lateral
  double tibia_forward_offset = 0.05; // m, rectangle center ahead of the tibia
};

inline void validate(const FootGeometry& g) {
  if (!(g.foot_length > 0) || !(g.foot_width > 0))
    throw std::invalid_argument("FootGeometry: foot dimensions must be > 0");
}

struct LabelThresholds {
  double theta_ds = 0.0;    // margin threshold during double support
  double theta_ss = -0.15;  // during single support (CoM may leave the foot)
};

// Convex polygon, counter-clockwise vertex order, no duplicate vertices.
struct BoSPolygon {
  std::vector<Vector2d> vertices;
};

inline double cross2(const Vector2d& o, const Vector2d& a, const Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain. Collinear points on the hull edge are dropped.
inline BoSPolygon convex_hull(std::vector<Vector2d> pts) {
  if (pts.size() < 3) throw std::invalid_argument("convex_hull: need at least 3 points");
  std::sort(pts.begin(), pts.end(), [](const Vector2d& a, const Vector2d& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vector2d& a, const Vector2d& b) {
                          return a.x() == b.x() && a.y() == b.y();
                        }),
            pts.end());
  const std::size_t n = pts.size();
  if (n < 3) throw std::invalid_argument("convex_hull: degenerate point set");
  std::vector<Vector2d> h(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {  // lower hull
    while (k >= 2 && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = n - 1, lo = k + 1; i-- > 0;) {  // upper hull
    while (k >= lo && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  if (h.size() < 3) throw std::invalid_argument("convex_hull: degenerate point set");
  return BoSPolygon{std::move(h)};
}

inline std::vector<Vector2d> foot_rect(double tibia_x, double tibia_y, const FootGeometry& g) {
  validate(g);
  const double cx = tibia_x;
  const double cy = tibia_y + g.tibia_forward_offset;
  const double hx = 0.5 * g.foot_width;
  const double hy = 0.5 * g.foot_length;
  return {{cx - hx, cy - hy}, {cx + hx, cy - hy}, {cx + hx, cy + hy}, {cx - hx, cy + hy}};
}

// Base of support: both feet during double support, the stance foot otherwise.
inline BoSPolygon bos_from_gait_state(const GaitState& s, const FootGeometry& g) {
  std::vector<Vector2d> pts;
  const bool use_left = s.phase != GaitPhase::RightStanceLeftSwing;
  const bool use_right = s.phase != GaitPhase::LeftStanceRightSwing;
  if (use_left) {
    auto r = foot_rect(s.x_l, s.y_l, g);
    pts.insert(pts.end(), r.begin(), r.end());
  }
  if (use_right) {
    auto r = foot_rect(s.x_r, s.y_r, g);
    pts.insert(pts.end(), r.begin(), r.end());
  }
  return convex_hull(std::move(pts));
}

namespace detail {

inline double point_segment_distance(const Vector2d& p, const Vector2d& a, const Vector2d& b) {
  const Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

}  // namespace detail

// Signed distance from a point to the polygon boundary: positive inside,
// negative outside, zero on the boundary (boundary counts as inside).
inline double signed_margin(const Vector2d& p, const BoSPolygon& poly) {
  const std::size_t n = poly.vertices.size();
  if (n < 3) throw std::invalid_argument("signed_margin: polygon needs >= 3 vertices");
  bool inside = true;
  double dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vector2d& a = poly.vertices[i];
    const Vector2d& b = poly.vertices[(i + 1) % n];
    if (cross2(a, b, p) < 0.0) inside = false;
    dist = std::min(dist, detail::point_segment_distance(p, a, b));
  }
  return inside ? dist : -dist;
}

inline StabilityLabel label_frame(double margin, GaitPhase phase, const LabelThresholds& th) {
  const double theta = is_double_support(phase) ? th.theta_ds : th.theta_ss;
  return margin >= theta ? StabilityLabel::Safe : StabilityLabel::FallRisk;
}

// The rule-based classifier: apply the same biomechanic rules used for
// ground-truth labeling, but on the filtered CoM and the observed legs.
// Hard labels only.
inline std::vector<StabilityLabel> rule_based_predict(
    const std::vector<ComEstimate>& com_estimates,
    const std::vector<GaitObservation>& gait_observations, const FootGeometry& g,
    const LabelThresholds& th) {
  if (com_estimates.size() != gait_observations.size())
    throw std::invalid_argument("rule_based_predict: stream lengths differ");
  std::vector<StabilityLabel> out;
  out.reserve(com_estimates.size());
  for (std::size_t i = 0; i < com_estimates.size(); ++i) {
    if (std::abs(com_estimates[i].t - gait_observations[i].t) > 1e-9)
      throw std::invalid_argument("rule_based_predict: streams not time-aligned");
    const BoSPolygon bos = bos_from_gait_state(gait_observations[i].gait, g);
    const double m = signed_margin({com_estimates[i].qx, com_estimates[i].qy}, bos);
    out.push_back(label_frame(m, gait_observations[i].gait.phase, th));
  }
  return out;
}

// Label every frame from ground truth; returns the margins in frame order.
inline std::vector<double> label_episode(Episode& ep, const FootGeometry& g,
                                         const LabelThresholds& th) {
  std::vector<double> margins;
  margins.reserve(ep.frames.size());
  for (TrajectoryFrame& fr : ep.frames) {
    const BoSPolygon bos = bos_from_gait_state(fr.gait, g);
    const double m = signed_margin({fr.com_x, fr.com_y}, bos);
    fr.label = label_frame(m, fr.gait.phase, th);
    margins.push_back(m);
  }
  return margins;
}

}  // namespace gaitlab
