#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "geotubes/errors.hpp"
#include "geotubes/spaceform_tubes.hpp"

using namespace geotubes;

namespace {

constexpr double kPi = std::numbers::pi;

// Generalized tube about the helix (a cos s/w, a sin s/w, c s/w), w = sqrt(a^2 + c^2), built
// directly in R^3 from the textbook Frenet frame and differentiated numerically.
struct HelixTube {
  double a, c;
  TubeProfile profile;

  Vec3 point(double s, double psi) const {
    const double w = std::sqrt(a * a + c * c);
    const double t = s / w;
    const Vec3 gamma(a * std::cos(t), a * std::sin(t), c * t);
    const Vec3 T = Vec3(-a * std::sin(t), a * std::cos(t), c) / w;
    const Vec3 N(-std::cos(t), -std::sin(t), 0.0);
    const Vec3 B = T.cross(N);
    const auto v = profile.values(psi);
    return gamma + profile.rho0() * (v.f * N + v.g * B);
  }

  MetricSample sample(double s, double psi) const {
    const double h = 1e-5;
    const Vec3 bs = (point(s + h, psi) - point(s - h, psi)) / (2 * h);
    const Vec3 bp = (point(s, psi + h) - point(s, psi - h)) / (2 * h);
    MetricSample m;
    m.E = bs.dot(bs);
    m.F = bs.dot(bp);
    m.G = bp.dot(bp);
    return m;
  }
};

double eq_metric_E(double k1, double k2, double rho, double psi) {
  return std::pow(1 - k1 * rho * std::cos(psi), 2) + k2 * k2 * rho * rho;
}

}  // namespace

TEST(SpaceFormTubes, FlatCircularTubeMatchesLineElement) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10000; ++k) {
    const double psi = 2 * kPi * u(rng);
    const double rho = 0.05 + 0.9 * u(rng);
    const double k1 = 2 * u(rng) - 1;
    const double k2 = 4 * u(rng) - 2;
    const MetricSample m = circular_tube_sample(SpaceForm::Flat, k1, k2, 0.0, 0.0, rho, psi);
    ASSERT_NEAR(m.E, eq_metric_E(k1, k2, rho, psi), 1e-12);
    ASSERT_NEAR(m.F, k2 * rho * rho, 1e-12);
    ASSERT_NEAR(m.G, rho * rho, 1e-12);
  }
}

TEST(SpaceFormTubes, ScaleFunctions) {
  for (double rho : {0.0, 0.1, 0.7, 1.4}) {
    const auto s = space_form_scale(SpaceForm::Spherical, rho);
    EXPECT_NEAR(s.F0, std::cos(rho), 1e-15);
    EXPECT_NEAR(s.G0, std::sin(rho), 1e-15);
    const auto h = space_form_scale(SpaceForm::Hyperbolic, rho);
    EXPECT_NEAR(h.F0, std::cosh(rho), 1e-15);
    EXPECT_NEAR(h.G0, std::sinh(rho), 1e-15);
    const auto f = space_form_scale(SpaceForm::Flat, rho);
    EXPECT_EQ(f.F0, 1.0);
    EXPECT_EQ(f.G0, rho);
  }
}

TEST(SpaceFormTubes, CurvedLineElement) {
  const double k1 = 21.0 / 29.0, k2 = 20.0 / 29.0, rho = 0.2;
  for (SpaceForm K : {SpaceForm::Spherical, SpaceForm::Hyperbolic}) {
    const auto sc = space_form_scale(K, rho);
    for (double psi : {0.0, 1.0, 2.5, 4.0}) {
      const MetricSample m = circular_tube_sample(K, k1, k2, 0, 0, rho, psi);
      EXPECT_NEAR(m.E, std::pow(sc.F0 - k1 * sc.G0 * std::cos(psi), 2) + k2 * k2 * sc.G0 * sc.G0, 1e-14);
      EXPECT_NEAR(m.F, k2 * sc.G0 * sc.G0, 1e-15);
      EXPECT_NEAR(m.G, sc.G0 * sc.G0, 1e-15);
    }
  }
}

TEST(SpaceFormTubes, JacobiFieldsSolveConstantCurvatureEquation) {
  const Vec3 dir(1, 0, 0);
  const Vec3 J0(0.0, 1.0, 0.3);
  const Vec3 J1(0.2, -0.4, 0.5);
  for (SpaceForm K : {SpaceForm::Spherical, SpaceForm::Flat, SpaceForm::Hyperbolic}) {
    const double h = 1e-4, rho = 0.6;
    const Vec3 Jm = spaceform_jacobi(K, rho - h, J0, J1, dir);
    const Vec3 J = spaceform_jacobi(K, rho, J0, J1, dir);
    const Vec3 Jp = spaceform_jacobi(K, rho + h, J0, J1, dir);
    const Vec3 acc = (Jp - 2 * J + Jm) / (h * h);
    Vec3 expected = -curvature_of(K) * J;
    expected(0) = 0.0;  // tangential part is affine
    EXPECT_LT((acc - expected).norm(), 1e-6);
    EXPECT_LT((spaceform_jacobi(K, 0.0, J0, J1, dir) - J0).norm(), 1e-15);
  }
}

TEST(SpaceFormTubes, GeneralizedTubeMatchesDirectConstruction) {
  const HelixTube tube{1.0, 0.7, TubeProfile::lobed(0.3, 0.3, 3)};
  const double w2 = tube.a * tube.a + tube.c * tube.c;
  const InducedMetric2D metric =
      generalized_tube_metric(SpaceForm::Flat, tube.a / w2, tube.c / w2, tube.profile, 0.0);
  for (double s : {0.0, 1.3}) {
    for (double psi : {0.1, 1.0, 2.2, 3.7, 5.9}) {
      const MetricSample want = tube.sample(s, psi);
      const MetricSample got = metric(s, psi);
      EXPECT_NEAR(got.E, want.E, 1e-8);
      EXPECT_NEAR(got.F, want.F, 1e-8);
      EXPECT_NEAR(got.G, want.G, 1e-8);
    }
  }
}

TEST(SpaceFormTubes, CircularIsTheRoundGeneralizedCase) {
  const TubeProfile round = TubeProfile::fourier(0.3, FourierSeries(2 * kPi, 0, {1.0}, {0.0}),
                                                 FourierSeries(2 * kPi, 0, {0.0}, {1.0}));
  for (SpaceForm K : {SpaceForm::Spherical, SpaceForm::Flat, SpaceForm::Hyperbolic}) {
    for (double psi : {0.0, 0.8, 3.0, 5.5}) {
      const MetricSample a = circular_tube_sample(K, 0.4, -0.3, 0.0, 0.0, 0.3, psi);
      const MetricSample b = generalized_tube_sample(K, 0.4, -0.3, 0.0, 0.0, round, psi);
      EXPECT_NEAR(a.E, b.E, 1e-14);
      EXPECT_NEAR(a.F, b.F, 1e-14);
      EXPECT_NEAR(a.G, b.G, 1e-14);
      EXPECT_NEAR(a.E_psi, b.E_psi, 1e-13);
    }
  }
}

TEST(SpaceFormTubes, PartialDerivativesMatchFiniteDifferences) {
  CurvatureFunctions k;
  k.k1 = [](double s) { return 0.5 + 0.2 * std::sin(s); };
  k.k2 = [](double s) { return 0.3 * std::cos(2 * s); };
  k.dk1 = [](double s) { return 0.2 * std::cos(s); };
  k.dk2 = [](double s) { return -0.6 * std::sin(2 * s); };
  k.s_period = 2 * kPi;
  k.s_length = 2 * kPi;
  const TubeProfile profile = TubeProfile::lobed(0.25, 0.2, 2);
  for (SpaceForm K : {SpaceForm::Spherical, SpaceForm::Hyperbolic}) {
    for (const InducedMetric2D& m : {circular_tube_metric(K, k, 0.25), generalized_tube_metric(K, k, profile)}) {
      const double h = 1e-5;
      for (const auto& [s, psi] : {std::pair{0.4, 1.1}, std::pair{2.0, 4.5}}) {
        const MetricSample c = m(s, psi);
        const MetricSample sp = m(s + h, psi), sm = m(s - h, psi);
        const MetricSample pp = m(s, psi + h), pm = m(s, psi - h);
        EXPECT_NEAR(c.E_s, (sp.E - sm.E) / (2 * h), 1e-8);
        EXPECT_NEAR(c.F_s, (sp.F - sm.F) / (2 * h), 1e-8);
        EXPECT_NEAR(c.G_s, (sp.G - sm.G) / (2 * h), 1e-8);
        EXPECT_NEAR(c.E_psi, (pp.E - pm.E) / (2 * h), 1e-8);
        EXPECT_NEAR(c.F_psi, (pp.F - pm.F) / (2 * h), 1e-8);
        EXPECT_NEAR(c.G_psi, (pp.G - pm.G) / (2 * h), 1e-8);
      }
    }
  }
}

TEST(SpaceFormTubes, ConstantScalarsMakeSIgnorable) {
  const InducedMetric2D m =
      generalized_tube_metric(SpaceForm::Spherical, 21.0 / 29.0, 20.0 / 29.0, TubeProfile::lobed(0.2, 0.3, 3), 10.0);
  EXPECT_TRUE(m.s_independent());
  EXPECT_TRUE(m.s_closed());
  for (double psi : {0.3, 2.0}) {
    const MetricSample a = m(0.0, psi);
    const MetricSample b = m(7.3, psi);
    EXPECT_EQ(a.E, b.E);
    EXPECT_EQ(b.E_s, 0.0);
    EXPECT_EQ(b.F_s, 0.0);
    EXPECT_EQ(b.G_s, 0.0);
  }
}

TEST(SpaceFormTubes, PolarForm) {
  const TubeProfile p = TubeProfile::lobed(0.2, 0.3, 3);
  for (double psi : {0.0, 0.5, 2.0, 4.0}) {
    const auto pol = p.polar(psi);
    EXPECT_NEAR(pol.r, 0.2 * (1 + 0.3 * std::cos(3 * psi)), 1e-15);
    EXPECT_NEAR(std::remainder(pol.phi - psi, 2 * kPi), 0.0, 1e-14);
    EXPECT_NEAR(pol.phi1, 1.0, 1e-13);
  }
}

TEST(SpaceFormTubes, Errors) {
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  EXPECT_EQ(kind_of([] { circular_tube_metric(SpaceForm::Flat, CurvatureFunctions::constants(2.0, 0.0, 1.0), 0.6); }),
            ErrorKind::TubeDegenerate);
  EXPECT_EQ(kind_of([] { TubeProfile::lobed(0.2, 1.2, 3); }), ErrorKind::ProfileNotSimple);
  EXPECT_EQ(kind_of([] {
              TubeProfile::fourier(0.2, FourierSeries(2 * kPi, 0.0, {0.0}, {1.0}),
                                   FourierSeries(2 * kPi, 0.0, {0.0, 0.0}, {0.0, 1.0}));
            }),
            ErrorKind::ProfileNotSimple);
  EXPECT_EQ(kind_of([] { TubeProfile::circular(-1.0); }), ErrorKind::Config);
}
