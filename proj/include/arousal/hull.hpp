#pragma once

#include <vector>

#include <Eigen/Dense>

namespace arousal {

struct Circle {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
};

/// Counterclockwise vertices with collinear boundary points removed.
/// Degenerate hulls hold one point or the two extremes of a segment.
struct ConvexHull {
  std::vector<Eigen::Vector2d> vertices;
  bool degenerate = false;
};

/// Andrew's monotone chain. Points are the columns of `points`.
ConvexHull convex_hull(const Eigen::Ref<const Eigen::Matrix2Xd>& points);

/// Euclidean distance from p to the hull; zero inside.
double point_hull_distance(const ConvexHull& hull, const Eigen::Vector2d& p);

/// Distance to the hull boundary, negated when p lies strictly inside.
double signed_hull_distance(const ConvexHull& hull, const Eigen::Vector2d& p);

/// Smallest signed distance of p to the supporting lines of the hull edges,
/// positive inside. For degenerate hulls, minus the distance to the hull.
double containment_margin(const ConvexHull& hull, const Eigen::Vector2d& p);

/// distance(center, hull) - radius; positive when the hull clears the circle.
double hull_clearance(const ConvexHull& hull, const Circle& obstacle);

double hull_diameter(const ConvexHull& hull);

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b);

}  // namespace arousal
