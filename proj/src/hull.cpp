#include "arousal/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace arousal {

namespace {

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double boundary_distance(const ConvexHull& hull, const Eigen::Vector2d& p) {
  const auto& v = hull.vertices;
  if (v.size() == 1) return (p - v[0]).norm();
  if (v.size() == 2) return point_segment_distance(p, v[0], v[1]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i)
    best = std::min(best, point_segment_distance(p, v[i], v[(i + 1) % v.size()]));
  return best;
}

bool strictly_inside(const ConvexHull& hull, const Eigen::Vector2d& p) {
  if (hull.degenerate) return false;
  const auto& v = hull.vertices;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (cross(v[i], v[(i + 1) % v.size()], p) <= 0.0) return false;
  return true;
}

}  // namespace

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

ConvexHull convex_hull(const Eigen::Ref<const Eigen::Matrix2Xd>& points) {
  std::vector<Eigen::Vector2d> pts(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index i = 0; i < points.cols(); ++i) pts[static_cast<std::size_t>(i)] = points.col(i);
  std::sort(pts.begin(), pts.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  ConvexHull hull;
  if (pts.size() <= 2) {
    hull.vertices = pts;
    hull.degenerate = true;
    return hull;
  }

  // Lower then upper chain; cross <= 0 pops collinear points too.
  std::vector<Eigen::Vector2d> h(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0.0) --k;
    h[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);

  hull.vertices = std::move(h);
  hull.degenerate = hull.vertices.size() < 3;
  return hull;
}

double point_hull_distance(const ConvexHull& hull, const Eigen::Vector2d& p) {
  if (hull.vertices.empty()) return std::numeric_limits<double>::infinity();
  if (strictly_inside(hull, p)) return 0.0;
  return boundary_distance(hull, p);
}

double signed_hull_distance(const ConvexHull& hull, const Eigen::Vector2d& p) {
  if (hull.vertices.empty()) return std::numeric_limits<double>::infinity();
  const double d = boundary_distance(hull, p);
  return strictly_inside(hull, p) ? -d : d;
}

double containment_margin(const ConvexHull& hull, const Eigen::Vector2d& p) {
  if (hull.degenerate) return -point_hull_distance(hull, p);
  const auto& v = hull.vertices;
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Eigen::Vector2d& a = v[i];
    const Eigen::Vector2d& b = v[(i + 1) % v.size()];
    margin = std::min(margin, cross(a, b, p) / (b - a).norm());
  }
  return margin;
}

double hull_clearance(const ConvexHull& hull, const Circle& obstacle) {
  return point_hull_distance(hull, obstacle.center) - obstacle.radius;
}

double hull_diameter(const ConvexHull& hull) {
  double best = 0.0;
  for (std::size_t i = 0; i < hull.vertices.size(); ++i)
    for (std::size_t j = i + 1; j < hull.vertices.size(); ++j)
      best = std::max(best, (hull.vertices[i] - hull.vertices[j]).norm());
  return best;
}

}  // namespace arousal
