#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace courtesy {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

/// Rotate by angle (counter-clockwise).
inline Vec2 rotated(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Normalize an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kPi = 3.14159265358979323846;
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

inline Vec2 closest_point_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  return distance(p, closest_point_on_segment(p, a, b));
}

/// Piecewise-linear path with arclength queries.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> pts) : pts_(std::move(pts)) { rebuild(); }

  const std::vector<Vec2>& points() const { return pts_; }
  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }
  bool empty() const { return pts_.empty(); }

  struct Projection {
    Vec2 point;
    double station = 0.0;
    Vec2 tangent{1.0, 0.0};  // unit direction of travel at the projection
  };

  Projection project(const Vec2& p) const {
    Projection out;
    if (pts_.empty()) return out;
    if (pts_.size() == 1) {
      out.point = pts_[0];
      return out;
    }
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
      const Vec2 c = closest_point_on_segment(p, pts_[i], pts_[i + 1]);
      const double d = distance(p, c);
      if (d < best_d) {
        best_d = d;
        out.point = c;
        out.station = cum_[i] + distance(pts_[i], c);
        const Vec2 seg = pts_[i + 1] - pts_[i];
        const double len = norm(seg);
        if (len > 0.0) out.tangent = seg * (1.0 / len);
      }
    }
    return out;
  }

  /// Closest point on the path; also reports the arclength station.
  Vec2 closest_point(const Vec2& p, double* station = nullptr) const {
    const Projection pr = project(p);
    if (station) *station = pr.station;
    return pr.point;
  }

  double distance_to(const Vec2& p) const { return distance(p, closest_point(p)); }

  /// Arclength station of the closest point to p.
  double station(const Vec2& p) const {
    double s = 0.0;
    closest_point(p, &s);
    return s;
  }

 private:
  void rebuild() {
    cum_.assign(pts_.size(), 0.0);
    for (std::size_t i = 1; i < pts_.size(); ++i)
      cum_[i] = cum_[i - 1] + distance(pts_[i - 1], pts_[i]);
  }

  std::vector<Vec2> pts_;
  std::vector<double> cum_;
};

/// Oriented rectangle (vehicle footprint).
struct OrientedBox {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;

  std::array<Vec2, 4> corners() const {
    const double hl = 0.5 * length, hw = 0.5 * width;
    const std::array<Vec2, 4> local = {Vec2{hl, hw}, Vec2{hl, -hw}, Vec2{-hl, -hw}, Vec2{-hl, hw}};
    std::array<Vec2, 4> out;
    for (int i = 0; i < 4; ++i) out[i] = center + rotated(local[i], heading);
    return out;
  }
};

namespace detail {

inline bool separates(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b, const Vec2& axis) {
  double amin = std::numeric_limits<double>::infinity(), amax = -amin;
  double bmin = amin, bmax = -amin;
  for (const auto& p : a) {
    const double t = dot(p, axis);
    amin = std::min(amin, t);
    amax = std::max(amax, t);
  }
  for (const auto& p : b) {
    const double t = dot(p, axis);
    bmin = std::min(bmin, t);
    bmax = std::max(bmax, t);
  }
  return amax < bmin || bmax < amin;
}

inline double segment_segment_distance(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
  double d = std::min(point_segment_distance(a0, b0, b1), point_segment_distance(a1, b0, b1));
  d = std::min(d, point_segment_distance(b0, a0, a1));
  d = std::min(d, point_segment_distance(b1, a0, a1));
  return d;
}

}  // namespace detail

inline bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes = {
      Vec2{std::cos(a.heading), std::sin(a.heading)},
      Vec2{-std::sin(a.heading), std::cos(a.heading)},
      Vec2{std::cos(b.heading), std::sin(b.heading)},
      Vec2{-std::sin(b.heading), std::cos(b.heading)}};
  for (const auto& ax : axes)
    if (detail::separates(ca, cb, ax)) return false;
  return true;
}

/// Euclidean gap between two boxes; zero when they overlap.
inline double box_gap(const OrientedBox& a, const OrientedBox& b) {
  if (boxes_overlap(a, b)) return 0.0;
  const auto ca = a.corners();
  const auto cb = b.corners();
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      d = std::min(d, detail::segment_segment_distance(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4]));
  return d;
}

inline bool segments_intersect(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
  const double d1 = cross(a1 - a0, b0 - a0);
  const double d2 = cross(a1 - a0, b1 - a0);
  const double d3 = cross(b1 - b0, a0 - b0);
  const double d4 = cross(b1 - b0, a1 - b0);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  auto on = [](const Vec2& p, const Vec2& q0, const Vec2& q1) {
    return std::abs(cross(q1 - q0, p - q0)) < 1e-12 && dot(p - q0, p - q1) <= 0.0;
  };
  return on(b0, a0, a1) || on(b1, a0, a1) || on(a0, b0, b1) || on(a1, b0, b1);
}

}  // namespace courtesy
