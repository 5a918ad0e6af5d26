#include <cmath>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "geotubes/errors.hpp"
#include "geotubes/numeric_tubes.hpp"
#include "geotubes/poincare.hpp"

using namespace geotubes;

namespace {

constexpr double kPi = std::numbers::pi;

double max_error(const MetricGrid& grid, const InducedMetric2D& exact) {
  double err = 0.0;
  for (int i = 0; i < grid.n_s; ++i) {
    for (int j = 0; j < grid.n_psi; ++j) {
      const MetricSample m = exact(grid.s_at(i), grid.psi_at(j));
      err = std::max({err, std::abs(m.E - grid.E(i, j)), std::abs(m.F - grid.F(i, j)), std::abs(m.G - grid.G(i, j))});
    }
  }
  return err;
}

Eigen::Vector4d embed(const Vec3& h) {
  return {std::sin(h(0)) * std::cos(h(1)), std::sin(h(0)) * std::sin(h(1)), std::cos(h(0)) * std::cos(h(2)),
          std::cos(h(0)) * std::sin(h(2))};
}

NumericTubeOptions grid_options(int n_s, int n_psi) {
  NumericTubeOptions o;
  o.n_s = n_s;
  o.n_psi = n_psi;
  return o;
}

// Horizontal Euclidean circle of radius 1 at height 1 in the upper half-space.
ParamCurve halfspace_circle() {
  ParamCurve c;
  c.name = "horizontal circle";
  c.chart = std::make_shared<const ChartMetric>(ChartMetric::hyperbolic3_halfspace());
  c.pos = [](double t) { return Vec3(std::cos(t), std::sin(t), 1.0); };
  c.vel = [](double t) { return Vec3(-std::sin(t), std::cos(t), 0.0); };
  c.acc = [](double t) { return Vec3(-std::cos(t), -std::sin(t), 0.0); };
  c.jerk = [](double t) { return Vec3(std::sin(t), -std::cos(t), 0.0); };
  c.t_min = 0.0;
  c.t_max = 2 * kPi;
  c.closed = true;
  c.period = 2 * kPi;
  return c;
}

}  // namespace

TEST(NumericTubes, HopfTubeMatchesSpaceFormMetric) {
  const ParamCurve curve = catalog::hopf_curve(5, 2, kPi / 4);
  const double L = 2 * kPi * std::sqrt(14.5);
  for (const TubeProfile& profile : {TubeProfile::circular(0.2), TubeProfile::lobed(0.2, 0.3, 3)}) {
    const MetricGrid grid = sample_tube_metric(*curve.chart, curve, profile, grid_options(8, 16));
    const InducedMetric2D exact = generalized_tube_metric(SpaceForm::Spherical, 21.0 / 29.0, 20.0 / 29.0, profile, L);
    EXPECT_LT(max_error(grid, exact), 1e-9);
    EXPECT_LT(grid.s_variation(), 1e-8);
    EXPECT_NEAR(grid.s_length, L, 1e-11);
  }
}

TEST(NumericTubes, FlatTorusMatchesLineElement) {
  const ParamCurve curve = catalog::circle(2.0);
  const MetricGrid grid = sample_tube_metric(*curve.chart, curve, TubeProfile::circular(1.0), grid_options(8, 16));
  const InducedMetric2D exact =
      circular_tube_metric(SpaceForm::Flat, CurvatureFunctions::constants(0.5, 0.0, 4 * kPi), 1.0);
  EXPECT_LT(max_error(grid, exact), 1e-10);
}

TEST(NumericTubes, HyperbolicTubeMatchesSpaceFormMetric) {
  const ParamCurve curve = halfspace_circle();
  ASSERT_TRUE(constancy_check(curve, 8, 1e-9).constant);
  const auto k = curvature_scalars(curve, 0.0);
  const ArcLengthTable table(curve, 64);
  const TubeProfile profile = TubeProfile::lobed(0.3, 0.2, 2);
  const MetricGrid grid = sample_tube_metric(*curve.chart, curve, profile, grid_options(8, 16));
  const InducedMetric2D exact = generalized_tube_metric(SpaceForm::Hyperbolic, k.k1, k.k2, profile, table.length());
  EXPECT_LT(max_error(grid, exact), 1e-9);
}

TEST(NumericTubes, FlatJacobiFieldsAreAffine) {
  const ParamCurve curve = catalog::helix(1.0, 0.7);
  const FrenetData start = frenet_evolve(curve, {0.8})[0];
  for (double psi : {0.0, 0.9, 2.5, 4.4}) {
    RadialOptions o;
    o.output_rho = {0.1, 0.25, 0.5, 1.0};
    const auto states = transport_frame_and_jacobi_profile(*curve.chart, start, psi, 1.0, o);
    ASSERT_EQ(states.size(), 4u);
    const Vec3 slope_s(-start.k1 * std::cos(psi), -start.k2 * std::sin(psi), start.k2 * std::cos(psi));
    const Vec3 slope_psi(0.0, -std::sin(psi), std::cos(psi));
    for (const auto& st : states) {
      EXPECT_LT((st.jacobi.head<3>() - (Vec3(1, 0, 0) + st.rho * slope_s)).norm(), 1e-10);
      EXPECT_LT((st.jacobi.tail<3>() - st.rho * slope_psi).norm(), 1e-10);
      EXPECT_LT((st.jacobi_dot.head<3>() - slope_s).norm(), 1e-10);
    }
  }
}

TEST(NumericTubes, SphereJacobiFieldsMatchClosedForm) {
  const ParamCurve curve = catalog::hopf_curve(5, 2, kPi / 4);
  const FrenetData start = frenet_evolve(curve, {1.0})[0];
  const double psi = 1.2;
  const RadialState st = transport_frame_and_jacobi(*curve.chart, start, psi, 0.4);
  const Vec3 dir(0.0, std::cos(psi), std::sin(psi));
  const Vec3 Js = spaceform_jacobi(SpaceForm::Spherical, 0.4, Vec3(1, 0, 0),
                                   Vec3(-start.k1 * std::cos(psi), -start.k2 * std::sin(psi), start.k2 * std::cos(psi)),
                                   dir);
  const Vec3 Jp = spaceform_jacobi(SpaceForm::Spherical, 0.4, Vec3::Zero(), Vec3(0, -std::sin(psi), std::cos(psi)), dir);
  EXPECT_LT((st.jacobi.head<3>() - Js).norm(), 1e-9);
  EXPECT_LT((st.jacobi.tail<3>() - Jp).norm(), 1e-9);
}

TEST(NumericTubes, RadialGeodesicsAreUnitSpeedGreatCircles) {
  const ParamCurve curve = catalog::hopf_curve(5, 2, kPi / 4);
  const FrenetData start = frenet_evolve(curve, {2.0})[0];
  RadialOptions o;
  o.output_rho = {0.1, 0.3, 0.5};
  const auto states = radial_geodesic(*curve.chart, start, 0.7, 0.5, o);
  const MetricAt m0 = metric_at(*curve.chart, start.x);
  for (const auto& st : states) {
    const double dist = std::acos(std::clamp(embed(start.x).dot(embed(st.x)), -1.0, 1.0));
    EXPECT_NEAR(dist, st.rho, 1e-10);
    EXPECT_NEAR(norm(metric_at(*curve.chart, st.x).g, st.xdot), 1.0, 1e-10);
    const Mat3 gram = st.frame.transpose() * metric_at(*curve.chart, st.x).g * st.frame;
    EXPECT_LT((gram - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-10);
  }
  (void)m0;
}

TEST(NumericTubes, EllipsoidKnotTubeIsSIndependent) {
  const ParamCurve curve = catalog::ellipsoid_curve(1.0, 1.5, 5.0, 2.0, kPi / 4);
  const MetricGrid grid = sample_tube_metric(*curve.chart, curve, TubeProfile::circular(0.2), grid_options(6, 16));
  EXPECT_LT(grid.s_variation(), 1e-9);
  const InducedMetric2D metric = interpolate_metric(grid);
  EXPECT_TRUE(metric.s_independent());
  const MetricSample m = metric(3.3, 1.1);
  EXPECT_EQ(m.E_s, 0.0);
  EXPECT_EQ(m.F_s, 0.0);
  EXPECT_EQ(m.G_s, 0.0);
}

TEST(NumericTubes, InterpolantReproducesNodesAndConverges) {
  const ParamCurve curve = catalog::ellipse(2.0, 2.5);
  const TubeProfile profile = TubeProfile::circular(0.5);
  const InducedMetric2D exact = ellipse_tube_metric(2.0, 2.5, 0.5);
  const MetricGrid grid = sample_tube_metric(*curve.chart, curve, profile, grid_options(64, 32));
  EXPECT_LT(max_error(grid, exact), 1e-9);
  const InducedMetric2D interp = interpolate_metric(grid);
  EXPECT_FALSE(interp.s_independent());
  EXPECT_NEAR(interp.E(grid.s_at(5), grid.psi_at(7)), grid.E(5, 7), 1e-12);
  double err = 0.0;
  for (double s : {0.13, 3.7, 9.9}) {
    for (double psi : {0.05, 2.2, 5.0}) err = std::max(err, std::abs(interp.E(s, psi) - exact.E(s, psi)));
  }
  EXPECT_LT(err, 1e-4);
}

TEST(NumericTubes, CsvRoundTrip) {
  const ParamCurve curve = catalog::hopf_curve(5, 2, kPi / 4);
  const MetricGrid grid = sample_tube_metric(*curve.chart, curve, TubeProfile::circular(0.2), grid_options(4, 8));
  const auto path = std::filesystem::temp_directory_path() / "geotubes_metric_roundtrip.csv";
  write_metric_csv(path.string(), grid);
  const MetricGrid back = read_metric_csv(path.string());
  EXPECT_EQ(back.n_s, grid.n_s);
  EXPECT_EQ(back.n_psi, grid.n_psi);
  EXPECT_EQ(back.s_length, grid.s_length);
  EXPECT_EQ(back.s_closed, grid.s_closed);
  EXPECT_EQ((back.E - grid.E).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((back.F - grid.F).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((back.G - grid.G).cwiseAbs().maxCoeff(), 0.0);
  std::filesystem::remove(path);
}

TEST(NumericTubes, SIndependenceCertificate) {
  const ParamCurve knot = catalog::ellipsoid_curve(1.0, 1.5, 5.0, 2.0, kPi / 4);
  const auto yes = s_independence_certificate(*knot.chart, knot, 0.5, 2);
  EXPECT_TRUE(yes.verdict);
  EXPECT_LT(yes.max_sectional_derivative, 1e-7);
  EXPECT_LT(yes.max_coordinate_derivative, 1e-7);
  const ParamCurve wobble = catalog::ellipsoid_curve(1.0, 1.5, 5.0, 2.0, kPi / 4, 0.1);
  const auto no = s_independence_certificate(*wobble.chart, wobble, 0.5, 2);
  EXPECT_FALSE(no.verdict);
  EXPECT_GT(no.max_coordinate_derivative, 1e-3);
}

TEST(NumericTubes, LeavingTheChartIsReported) {
  const ParamCurve curve = catalog::hopf_curve(2, 1, 0.05);
  const FrenetData start = frenet_evolve(curve, {0.0})[0];
  int failures = 0;
  for (double psi : {0.0, kPi / 2, kPi, 3 * kPi / 2}) {
    try {
      radial_geodesic(*curve.chart, start, psi, 0.5);
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ChartDomain);
      ++failures;
    }
  }
  EXPECT_GT(failures, 0);
}
