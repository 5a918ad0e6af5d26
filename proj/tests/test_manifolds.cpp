#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "geotubes/errors.hpp"
#include "geotubes/manifolds.hpp"

using namespace geotubes;

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 random_point(const ChartMetric& chart, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (chart.kind()) {
    case ChartKind::Sphere3Hopf:
    case ChartKind::Ellipsoid3Degenerate:
      return {0.1 + (kPi / 2 - 0.2) * u(rng), 2 * kPi * u(rng), 2 * kPi * u(rng)};
    case ChartKind::Hyperbolic3HalfSpace:
      return {4 * u(rng) - 2, 4 * u(rng) - 2, 0.2 + 3 * u(rng)};
    case ChartKind::Euclidean3Cylindrical:
      return {0.2 + 2 * u(rng), 2 * kPi * u(rng), 4 * u(rng) - 2};
    default:
      return {4 * u(rng) - 2, 4 * u(rng) - 2, 4 * u(rng) - 2};
  }
}

Vec3 random_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return {n(rng), n(rng), n(rng)};
}

// Same sphere written as a user metric, differentiated numerically.
ChartMetric user_sphere() {
  return ChartMetric::user(
      "user sphere",
      [](const Vec3& x) {
        Mat3 g = Mat3::Zero();
        g(0, 0) = 1.0;
        g(1, 1) = std::sin(x(0)) * std::sin(x(0));
        g(2, 2) = std::cos(x(0)) * std::cos(x(0));
        return g;
      },
      [](const Vec3& x) { return x(0) > 0.0 && x(0) < kPi / 2; });
}

// A metric with no symmetry, for the tensor identities.
ChartMetric lumpy() {
  return ChartMetric::user("lumpy", [](const Vec3& x) {
    Mat3 g;
    g << 1.0 + 0.3 * std::sin(x(1)) * x(2) * x(2), 0.1 * x(0) * x(1), 0.05 * std::cos(x(2)),
        0.1 * x(0) * x(1), 2.0 + 0.2 * std::cos(x(0) + x(2)), 0.07 * x(2),
        0.05 * std::cos(x(2)), 0.07 * x(2), 1.5 + 0.1 * x(0) * x(0) * x(1);
    return g;
  });
}

struct SpaceFormCase {
  ChartMetric chart;
  double K;
};

}  // namespace

TEST(Manifolds, SpaceFormSectionalCurvature) {
  std::mt19937_64 rng(7);
  const SpaceFormCase cases[] = {{ChartMetric::euclidean3(), 0.0},
                                 {ChartMetric::euclidean3_cylindrical(), 0.0},
                                 {ChartMetric::sphere3_hopf(), 1.0},
                                 {ChartMetric::hyperbolic3_halfspace(), -1.0}};
  for (const auto& c : cases) {
    for (int k = 0; k < 100; ++k) {
      const Vec3 x = random_point(c.chart, rng);
      EXPECT_NEAR(sectional_curvature(c.chart, x, random_vector(rng), random_vector(rng)), c.K, 1e-10)
          << c.chart.name();
    }
  }
}

TEST(Manifolds, UserSphereMatchesBuiltIn) {
  const ChartMetric user = user_sphere();
  const ChartMetric hopf = ChartMetric::sphere3_hopf();
  EXPECT_EQ(user.christoffel_mode(), ChristoffelMode::FiniteDifference);
  EXPECT_EQ(hopf.christoffel_mode(), ChristoffelMode::Analytic);
  std::mt19937_64 rng(11);
  for (int k = 0; k < 50; ++k) {
    const Vec3 x = random_point(hopf, rng);
    const Vec3 u = random_vector(rng);
    const Vec3 v = random_vector(rng);
    EXPECT_NEAR(sectional_curvature(user, x, u, v), 1.0, 1e-6);
    const Christoffel a = christoffel_at(hopf, x);
    const Christoffel b = christoffel_at(user, x);
    for (int i = 0; i < 3; ++i) EXPECT_LT((a.gamma[i] - b.gamma[i]).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Manifolds, AnalyticJetsAgreeWithFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (const auto& chart : {ChartMetric::sphere3_hopf(), ChartMetric::hyperbolic3_halfspace(),
                            ChartMetric::ellipsoid3_degenerate(1.0, 1.5), ChartMetric::euclidean3_cylindrical()}) {
    for (int k = 0; k < 20; ++k) {
      const Vec3 x = random_point(chart, rng);
      const MetricJet a = chart.jet(x);
      const MetricJet f = chart.finite_difference_jet(x);
      EXPECT_LT((a.g - f.g).cwiseAbs().maxCoeff(), 1e-14);
      for (int m = 0; m < 3; ++m) {
        const double s1 = std::max(1.0, a.dg[m].cwiseAbs().maxCoeff());
        EXPECT_LT((a.dg[m] - f.dg[m]).cwiseAbs().maxCoeff(), 1e-8 * s1) << chart.name();
        for (int n = 0; n < 3; ++n) {
          const double s2 = std::max(1.0, a.ddg[m][n].cwiseAbs().maxCoeff());
          EXPECT_LT((a.ddg[m][n] - f.ddg[m][n]).cwiseAbs().maxCoeff(), 1e-5 * s2) << chart.name();
        }
      }
    }
  }
}

TEST(Manifolds, RiemannSymmetriesAndBianchi) {
  std::mt19937_64 rng(5);
  for (const auto& chart : {lumpy(), ChartMetric::ellipsoid3_degenerate(1.0, 1.5)}) {
    for (int k = 0; k < 10; ++k) {
      const Vec3 x = random_point(chart, rng);
      const Riemann R = riemann_at(chart, x);
      const double tol = chart.christoffel_mode() == ChristoffelMode::Analytic ? 1e-12 : 1e-6;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c)
            for (int d = 0; d < 3; ++d) {
              const double r = R.lowered(a, b, c, d);
              EXPECT_NEAR(r, -R.lowered(b, a, c, d), tol);
              EXPECT_NEAR(r, -R.lowered(a, b, d, c), tol);
              EXPECT_NEAR(r, R.lowered(c, d, a, b), tol);
              EXPECT_NEAR(r + R.lowered(a, c, d, b) + R.lowered(a, d, b, c), 0.0, tol);
            }
    }
  }
}

TEST(Manifolds, SectionalCurvatureIsBasisInvariant) {
  std::mt19937_64 rng(9);
  const ChartMetric chart = ChartMetric::ellipsoid3_degenerate(1.0, 1.5);
  for (int k = 0; k < 20; ++k) {
    const Vec3 x = random_point(chart, rng);
    const Vec3 u = random_vector(rng);
    const Vec3 v = random_vector(rng);
    const double K = sectional_curvature(chart, x, u, v);
    EXPECT_NEAR(sectional_curvature(chart, x, 2.0 * u - 0.3 * v, 0.7 * u + 1.9 * v), K, 1e-10);
    EXPECT_NEAR(sectional_curvature(chart, x, v, u), K, 1e-12);
  }
}

TEST(Manifolds, RoundEllipsoidIsTheSphere) {
  const ChartMetric e = ChartMetric::ellipsoid3_degenerate(1.0, 1.0);
  const ChartMetric s = ChartMetric::sphere3_hopf();
  std::mt19937_64 rng(13);
  for (int k = 0; k < 10; ++k) {
    const Vec3 x = random_point(s, rng);
    EXPECT_LT((e.metric(x) - s.metric(x)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(sectional_curvature(e, x, random_vector(rng), random_vector(rng)), 1.0, 1e-10);
  }
}

TEST(Manifolds, EllipsoidCurvatureDependsOnlyOnEta) {
  const ChartMetric e = ChartMetric::ellipsoid3_degenerate(1.0, 1.5);
  const Vec3 u(0.3, 1.0, -0.4);
  const Vec3 v(1.0, 0.2, 0.8);
  const double K = sectional_curvature(e, Vec3(0.6, 0.0, 0.0), u, v);
  EXPECT_NEAR(sectional_curvature(e, Vec3(0.6, 1.3, 4.1), u, v), K, 1e-13);
  EXPECT_GT(std::abs(sectional_curvature(e, Vec3(0.9, 0.0, 0.0), u, v) - K), 1e-3);
}

TEST(Manifolds, JacobiOperatorMatchesCurvature) {
  const ChartMetric chart = lumpy();
  const Vec3 x(0.3, -0.2, 0.5);
  const LocalGeometry geo = local_geometry(chart, x);
  const Vec3 u(1.0, 0.5, -0.3);
  const Vec3 v(-0.2, 0.7, 1.1);
  const Mat3& g = geo.metric.g;
  const double area2 = inner(g, u, u) * inner(g, v, v) - std::pow(inner(g, u, v), 2);
  // <R(u, v) v, u> = K |u ^ v|^2
  EXPECT_NEAR(inner(g, geo.riemann.jacobi_operator(v) * u, u), sectional_curvature(geo, u, v) * area2, 1e-10);
}

TEST(Manifolds, MetricCrossProduct) {
  const ChartMetric chart = ChartMetric::ellipsoid3_degenerate(1.0, 1.5);
  const Vec3 x(0.7, 0.1, 2.0);
  const MetricAt m = metric_at(chart, x);
  const Vec3 u(0.4, 1.0, 0.2);
  const Vec3 v(-0.1, 0.3, 0.9);
  const Vec3 w = cross(m, u, v);
  EXPECT_NEAR(inner(m.g, w, u), 0.0, 1e-13);
  EXPECT_NEAR(inner(m.g, w, v), 0.0, 1e-13);
  const double area2 = inner(m.g, u, u) * inner(m.g, v, v) - std::pow(inner(m.g, u, v), 2);
  EXPECT_NEAR(inner(m.g, w, w), area2, 1e-12);
  Mat3 frame;
  frame << u, v, w;
  EXPECT_GT(frame.determinant(), 0.0);
}

TEST(Manifolds, Errors) {
  const ChartMetric sphere = ChartMetric::sphere3_hopf();
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  EXPECT_EQ(kind_of([&] { metric_at(sphere, Vec3(-0.1, 0, 0)); }), ErrorKind::ChartDomain);
  EXPECT_EQ(kind_of([&] { metric_at(ChartMetric::hyperbolic3_halfspace(), Vec3(0, 0, -1)); }),
            ErrorKind::ChartDomain);
  EXPECT_EQ(kind_of([&] { sectional_curvature(sphere, Vec3(0.5, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)); }),
            ErrorKind::DegeneratePlane);
  const ChartMetric flat_degenerate = ChartMetric::user("degenerate", [](const Vec3&) {
    Mat3 g = Mat3::Identity();
    g(2, 2) = 0.0;
    return g;
  });
  EXPECT_EQ(kind_of([&] { metric_at(flat_degenerate, Vec3::Zero()); }), ErrorKind::DegenerateMetric);
  EXPECT_EQ(kind_of([] { space_form_from_int(2); }), ErrorKind::Config);
}

TEST(Manifolds, ChartMetadata) {
  const ChartMetric e = ChartMetric::ellipsoid3_degenerate(1.0, 1.5);
  EXPECT_FALSE(e.space_form().has_value());
  EXPECT_EQ(e.params().at("b"), 1.5);
  EXPECT_EQ(e.essential_coordinates(), std::vector<int>{0});
  EXPECT_EQ(*ChartMetric::sphere3_hopf().space_form(), SpaceForm::Spherical);
  EXPECT_TRUE(ChartMetric::sphere3_hopf().same_point(Vec3(0.5, 0.0, 0.0), Vec3(0.5, 2 * kPi, -2 * kPi), 1e-12));
  EXPECT_FALSE(ChartMetric::euclidean3().same_point(Vec3(0.5, 0.0, 0.0), Vec3(0.5, 2 * kPi, 0.0), 1e-12));
}
