#include <doctest.h>

#include <cmath>
#include <random>

#include "arousal/bernstein.hpp"
#include "arousal/hull.hpp"
#include "arousal/lgl.hpp"

using namespace arousal;

namespace {

BernsteinCurve2d random_curve(std::mt19937_64& rng, int degree) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  BernsteinCurve2d c;
  c.control_points.resize(2, degree + 1);
  for (int k = 0; k <= degree; ++k) c.control_points.col(k) = Eigen::Vector2d(u(rng), u(rng));
  c.duration = std::uniform_real_distribution<double>(0.5, 10.0)(rng);
  return c;
}

// Bernstein sum evaluated directly from the basis polynomials.
Eigen::Vector2d basis_sum(const BernsteinCurve2d& c, double t) {
  const int n = c.degree();
  const double z = t / c.duration;
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  for (int k = 0; k <= n; ++k)
    p += binomial<double>(n, k) * std::pow(1 - z, n - k) * std::pow(z, k) * c.control_points.col(k);
  return p;
}

double poly_integral(const Eigen::VectorXd& coeffs) {
  // Exact integral over [-1, 1] of sum_j c_j x^j: odd terms vanish.
  double s = 0.0;
  for (Eigen::Index j = 0; j < coeffs.size(); j += 2) s += 2.0 * coeffs(j) / static_cast<double>(j + 1);
  return s;
}

double poly_eval(const Eigen::VectorXd& coeffs, double x) {
  double v = 0.0;
  for (Eigen::Index j = coeffs.size() - 1; j >= 0; --j) v = v * x + coeffs(j);
  return v;
}

ConvexHull unit_square() {
  Eigen::Matrix2Xd pts(2, 4);
  pts << 0, 1, 1, 0, 0, 0, 1, 1;
  return convex_hull(pts);
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("evaluation: endpoints, partition of unity, and a hand value") {
    std::mt19937_64 rng(1);
    const BernsteinCurve2d c = random_curve(rng, 6);
    CHECK(bernstein_eval(c, 0.0) == c.front());
    CHECK(bernstein_eval(c, c.duration) == c.back());

    BernsteinCurve2d flat;
    flat.control_points = Eigen::Matrix2Xd::Constant(2, 5, 0.0);
    flat.control_points.row(0).setConstant(1.25);
    flat.control_points.row(1).setConstant(-3.5);
    flat.duration = 2.0;
    for (double t : {0.0, 0.3, 1.1, 2.0}) {
      CHECK(bernstein_eval(flat, t).x() == doctest::Approx(1.25).epsilon(1e-15));
      CHECK(bernstein_eval(flat, t).y() == doctest::Approx(-3.5).epsilon(1e-15));
    }

    BernsteinCurve2d q;
    q.control_points.resize(2, 3);
    q.control_points << 0, 1, 2, 0, 2, 0;
    q.duration = 4.0;
    const Eigen::Vector2d mid = bernstein_eval(q, 2.0);
    CHECK(mid.x() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(mid.y() == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(bernstein_eval(q, 4.5), Error);
    CHECK_THROWS_AS(bernstein_eval(q, -0.1), Error);
  }

  TEST_CASE("De Casteljau agrees with the basis sum") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      const BernsteinCurve2d c = random_curve(rng, 1 + trial % 9);
      for (int k = 0; k <= 10; ++k) {
        const double t = c.duration * k / 10.0;
        CHECK((bernstein_eval(c, t) - basis_sum(c, t)).norm() <= 1e-12);
      }
    }
  }

  TEST_CASE("hodograph") {
    BernsteinCurve2d flat;
    flat.control_points = Eigen::Matrix2Xd::Ones(2, 4);
    flat.duration = 3.0;
    CHECK(derivative_curve(flat).control_points.cwiseAbs().maxCoeff() == 0.0);

    BernsteinCurve2d line;
    line.control_points.resize(2, 2);
    line.control_points << 1, 7, 2, -2;
    line.duration = 2.0;
    const BernsteinCurve2d v = derivative_curve(line);
    CHECK(v.degree() == 0);
    CHECK(v.control_points.col(0) == Eigen::Vector2d(3.0, -2.0));

    std::mt19937_64 rng(3);
    const BernsteinCurve2d c = random_curve(rng, 4);
    const BernsteinCurve2d dc = derivative_curve(c);
    const BernsteinCurve2d ddc = derivative_curve(dc);
    const double h = 1e-5 * c.duration;
    for (int k = 1; k <= 20; ++k) {
      const double t = c.duration * (k - 0.5) / 20.0;
      const Eigen::Vector2d fd = (bernstein_eval(c, t + h) - bernstein_eval(c, t - h)) / (2 * h);
      CHECK((bernstein_eval(dc, t) - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
      const double h2 = 1e-4 * c.duration;
      const Eigen::Vector2d fd2 =
          (bernstein_eval(c, t + h2) - 2.0 * bernstein_eval(c, t) + bernstein_eval(c, t - h2)) / (h2 * h2);
      CHECK((bernstein_eval(ddc, t) - fd2).norm() <= 1e-6 * std::max(1.0, fd2.norm()) + 1e-4);
    }
  }

  TEST_CASE("splitting") {
    BernsteinCurve2d seg;
    seg.control_points.resize(2, 2);
    seg.control_points << 0, 4, 0, 2;
    seg.duration = 1.0;
    const auto [l, r] = de_casteljau_split(seg, 0.5);
    CHECK(l.back() == Eigen::Vector2d(2, 1));
    CHECK(r.front() == Eigen::Vector2d(2, 1));
    CHECK(l.duration == 0.5);

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
      const BernsteinCurve2d c = random_curve(rng, 5);
      const double tau = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
      const auto [left, right] = de_casteljau_split(c, tau);
      CHECK(left.degree() == 5);
      CHECK(right.degree() == 5);
      CHECK((left.back() - right.front()).norm() == 0.0);
      CHECK((left.back() - bernstein_eval(c, tau * c.duration)).norm() <= 1e-12);
      for (int k = 0; k < 50; ++k) {
        const double t = std::uniform_real_distribution<double>(0.0, c.duration)(rng);
        const Eigen::Vector2d piece = t <= left.duration ? bernstein_eval(left, t)
                                                         : bernstein_eval(right, std::min(t - left.duration, right.duration));
        CHECK((piece - bernstein_eval(c, t)).norm() <= 1e-12);
      }
    }
    CHECK_THROWS_AS(de_casteljau_split(seg, 0.0), Error);
    CHECK_THROWS_AS(de_casteljau_split(seg, 1.0), Error);
  }

  TEST_CASE("subdivision hulls shrink and still cover the path") {
    std::mt19937_64 rng(5);
    const BernsteinCurve2d c = random_curve(rng, 7);
    double previous = std::numeric_limits<double>::infinity();
    for (int depth = 0; depth <= 4; ++depth) {
      const auto pieces = subdivide(c, depth);
      CHECK(pieces.size() == (1u << depth));
      double widest = 0.0;
      std::vector<ConvexHull> hulls;
      for (const auto& p : pieces) {
        hulls.push_back(convex_hull(p.control_points));
        widest = std::max(widest, hull_diameter(hulls.back()));
      }
      CHECK(widest <= previous);
      previous = widest;
      for (int k = 0; k <= 200; ++k) {
        const Eigen::Vector2d p = bernstein_eval(c, c.duration * k / 200.0);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& h : hulls) best = std::min(best, point_hull_distance(h, p));
        CHECK(best <= 1e-9);
      }
    }
  }

  TEST_CASE("hull construction") {
    Eigen::Matrix2Xd pts(2, 5);
    pts << 0, 1, 1, 0, 0.5, 0, 0, 1, 1, 0.5;
    ConvexHull h = convex_hull(pts);
    CHECK(h.vertices.size() == 4);
    CHECK_FALSE(h.degenerate);

    Eigen::Matrix2Xd line(2, 3);
    line << 0, 1, 2, 0, 1, 2;
    h = convex_hull(line);
    CHECK(h.degenerate);
    REQUIRE(h.vertices.size() == 2);
    CHECK(h.vertices[0] == Eigen::Vector2d(0, 0));
    CHECK(h.vertices[1] == Eigen::Vector2d(2, 2));

    h = convex_hull(Eigen::Matrix2Xd::Constant(2, 3, 1.5));
    CHECK(h.degenerate);
    CHECK(h.vertices.size() == 1);

    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::Matrix2Xd cloud(2, 100);
    for (int k = 0; k < 100; ++k) cloud.col(k) = Eigen::Vector2d(g(rng), g(rng));
    h = convex_hull(cloud);
    const std::size_t m = h.vertices.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Eigen::Vector2d a = h.vertices[i], b = h.vertices[(i + 1) % m], c = h.vertices[(i + 2) % m];
      const Eigen::Vector2d e1 = b - a, e2 = c - b;
      CHECK(e1.x() * e2.y() - e1.y() * e2.x() > 0.0);
      bool from_input = false;
      for (int k = 0; k < 100; ++k) from_input = from_input || cloud.col(k) == a;
      CHECK(from_input);
    }
    for (int k = 0; k < 100; ++k) CHECK(containment_margin(h, cloud.col(k)) >= -1e-12);
  }

  TEST_CASE("clearance") {
    const ConvexHull sq = unit_square();
    CHECK(hull_clearance(sq, Circle{{0.5, 0.5}, 0.3}) == -0.3);
    CHECK(hull_clearance(sq, Circle{{3.0, 0.0}, 1.0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(hull_clearance(sq, Circle{{2.0, 0.5}, 1.0}) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(signed_hull_distance(sq, Eigen::Vector2d(0.5, 0.6)) == doctest::Approx(-0.4).epsilon(1e-15));
    CHECK(signed_hull_distance(sq, Eigen::Vector2d(-1, -1)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(point_segment_distance(Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 0)) == 1.0);
  }

  TEST_CASE("curves stay inside the hull of their control points") {
    std::mt19937_64 rng(7);
    double worst = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 500; ++trial) {
      const BernsteinCurve2d c = random_curve(rng, 1 + trial % 10);
      const ConvexHull h = convex_hull(c.control_points);
      for (int k = 0; k < 100; ++k)
        worst = std::min(worst, containment_margin(h, bernstein_eval(c, std::min(c.duration, c.duration * k / 99.0))));
    }
    CHECK(worst >= -1e-9);
  }

  TEST_CASE("LGL rules: closed forms, symmetry, weight sum") {
    const auto r1 = lgl_rule(1);
    CHECK(r1.nodes == Eigen::Vector2d(-1, 1));
    CHECK(r1.weights == Eigen::Vector2d(1, 1));

    const auto r2 = lgl_rule(2);
    CHECK(r2.nodes(0) == -1.0);
    CHECK(r2.nodes(1) == 0.0);
    CHECK(r2.nodes(2) == 1.0);
    CHECK(std::abs(r2.weights(0) - 1.0 / 3.0) <= 1e-14);
    CHECK(std::abs(r2.weights(1) - 4.0 / 3.0) <= 1e-14);
    CHECK(std::abs(r2.weights(2) - 1.0 / 3.0) <= 1e-14);

    for (int n = 1; n <= 20; ++n) {
      const auto r = lgl_rule(n);
      CHECK(r.order() == n);
      CHECK(r.nodes(0) == -1.0);
      CHECK(r.nodes(n) == 1.0);
      CHECK(std::abs(r.weights.sum() - 2.0) <= 1e-12);
      for (int k = 0; k <= n; ++k) {
        CHECK(r.nodes(k) == -r.nodes(n - k));
        CHECK(r.weights(k) == r.weights(n - k));
        CHECK(r.weights(k) > 0.0);
      }
    }
    CHECK_THROWS_AS(lgl_rule(0), Error);
  }

  TEST_CASE("LGL quadrature is exact to degree 2n - 1") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int n = 1; n <= 20; ++n) {
      const auto r = lgl_rule(n);
      for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd coeffs(2 * n);
        for (Eigen::Index j = 0; j < coeffs.size(); ++j) coeffs(j) = u(rng);
        Eigen::VectorXd values(n + 1);
        for (int k = 0; k <= n; ++k) values(k) = poly_eval(coeffs, r.nodes(k));
        CHECK(std::abs(lgl_quadrature(values, r, 2.0) - poly_integral(coeffs)) <= 1e-10);
      }
    }
  }

  TEST_CASE("quadrature on [0, t_f]") {
    const auto r = lgl_rule(6);
    const double tf = 3.7;
    CHECK(lgl_quadrature(Eigen::VectorXd::Constant(7, 2.5), r, tf) == doctest::Approx(2.5 * tf).epsilon(1e-14));
    const Eigen::VectorXd t = tf * (r.nodes.array() + 1.0) / 2.0;
    CHECK(std::abs(lgl_quadrature(t, r, tf) - tf * tf / 2.0) <= 1e-12);
    CHECK_THROWS_AS(lgl_quadrature(Eigen::VectorXd::Ones(3), r, tf), Error);
  }

  TEST_CASE("interpolation transform") {
    std::mt19937_64 rng(9);
    const auto rule = lgl_rule(6);
    const BernsteinCurve2d c = random_curve(rng, 6);
    const Eigen::Matrix2Xd pts = bernstein_to_interpolation(c, rule);
    CHECK((pts.col(0) - c.front()).norm() <= 1e-15);
    CHECK((pts.col(6) - c.back()).norm() <= 1e-15);
    for (int k = 0; k <= 6; ++k) {
      const double t = c.duration * (rule.nodes(k) + 1.0) / 2.0;
      CHECK((pts.col(k) - bernstein_eval(c, t)).norm() <= 1e-12);
    }

    BernsteinCurve2d flat;
    flat.control_points = Eigen::Matrix2Xd::Constant(2, 7, 0.75);
    flat.duration = 1.0;
    CHECK((bernstein_to_interpolation(flat, rule).array() - 0.75).abs().maxCoeff() <= 1e-15);

    for (int n = 1; n <= 10; ++n) {
      const auto r = lgl_rule(n);
      const BernsteinCurve2d src = random_curve(rng, n);
      const BernsteinCurve2d back = interpolation_to_bernstein(bernstein_to_interpolation(src, r), r, src.duration);
      CHECK((back.control_points - src.control_points).cwiseAbs().maxCoeff() <= 1e-9);
    }
    CHECK_THROWS_AS(bernstein_to_interpolation(c, lgl_rule(5)), Error);
  }

  TEST_CASE("templated on the scalar type") {
    const auto r = lgl_rule<long double>(4);
    CHECK(std::abs(static_cast<double>(r.weights.sum()) - 2.0) <= 1e-15);
    BernsteinCurve<float> c;
    c.control_points.resize(2, 3);
    c.control_points << 0, 1, 2, 0, 2, 0;
    c.duration = 1.0f;
    CHECK(bernstein_eval(c, 0.5f).y() == doctest::Approx(1.0));
  }
}
