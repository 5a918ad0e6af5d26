#include "geotubes/spaceform_tubes.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "geotubes/errors.hpp"

namespace geotubes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double five_point(const std::function<double(double)>& f, double s) {
  const double h = 1e-3 * std::max(1.0, std::abs(s));
  return (-f(s + 2.0 * h) + 8.0 * f(s + h) - 8.0 * f(s - h) + f(s - 2.0 * h)) / (12.0 * h);
}

bool segments_cross(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2, const Eigen::Vector2d& q1,
                    const Eigen::Vector2d& q2) {
  auto orient = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  };
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

}  // namespace

TubeProfile TubeProfile::circular(double rho0) {
  if (!(rho0 > 0.0)) {
    throw Error(ErrorKind::Config, "tube radius rho0 must be positive");
  }
  TubeProfile p;
  p.kind_ = Kind::Circular;
  p.rho0_ = rho0;
  p.f_ = FourierSeries(kTwoPi, 0.0, {1.0}, {0.0});
  p.g_ = FourierSeries(kTwoPi, 0.0, {0.0}, {1.0});
  return p;
}

TubeProfile TubeProfile::fourier(double rho0, FourierSeries f, FourierSeries g) {
  if (!(rho0 > 0.0)) {
    throw Error(ErrorKind::Config, "tube radius rho0 must be positive");
  }
  TubeProfile p;
  p.kind_ = Kind::Generalized;
  p.rho0_ = rho0;
  p.f_ = FourierSeries(kTwoPi, f.a0(), f.cos_coefficients(), f.sin_coefficients());
  p.g_ = FourierSeries(kTwoPi, g.a0(), g.cos_coefficients(), g.sin_coefficients());
  p.validate();
  return p;
}

TubeProfile TubeProfile::lobed(double rho0, double amp, int lobes) {
  if (lobes < 1) {
    throw Error(ErrorKind::Config, "lobed profile needs lobes >= 1");
  }
  const auto order = static_cast<std::size_t>(lobes + 1);
  std::vector<double> fa(order, 0.0), fb(order, 0.0), ga(order, 0.0), gb(order, 0.0);
  double f0 = 0.0;
  fa[0] += 1.0;
  gb[0] += 1.0;
  // (1 + A cos n psi) (cos psi, sin psi) as a finite Fourier sum.
  fa[order - 1] += 0.5 * amp;
  gb[order - 1] += 0.5 * amp;
  if (lobes == 1) {
    f0 += 0.5 * amp;
  } else {
    fa[static_cast<std::size_t>(lobes - 2)] += 0.5 * amp;
    gb[static_cast<std::size_t>(lobes - 2)] -= 0.5 * amp;
  }
  return fourier(rho0, FourierSeries(kTwoPi, f0, fa, fb), FourierSeries(kTwoPi, 0.0, ga, gb));
}

TubeProfile::Values TubeProfile::values(double psi) const {
  Values v{};
  if (kind_ == Kind::Circular) {
    v.f = std::cos(psi);
    v.g = std::sin(psi);
    v.f1 = -v.g;
    v.g1 = v.f;
    v.f2 = -v.f;
    v.g2 = -v.g;
    return v;
  }
  f_.evaluate(psi, v.f, v.f1, v.f2);
  g_.evaluate(psi, v.g, v.g1, v.g2);
  return v;
}

TubeProfile::Polar TubeProfile::polar(double psi) const {
  Polar p{};
  if (kind_ == Kind::Circular) {
    p.r = rho0_;
    p.phi = psi;
    p.phi1 = 1.0;
    return p;
  }
  const Values v = values(psi);
  const double m = v.f * v.f + v.g * v.g;
  const double m1 = 2.0 * (v.f * v.f1 + v.g * v.g1);
  const double m2 = 2.0 * (v.f1 * v.f1 + v.f * v.f2 + v.g1 * v.g1 + v.g * v.g2);
  const double w = v.f * v.g1 - v.g * v.f1;
  const double w1 = v.f * v.g2 - v.g * v.f2;
  const double sm = std::sqrt(m);
  p.r = rho0_ * sm;
  p.r1 = rho0_ * m1 / (2.0 * sm);
  p.r2 = rho0_ * (m2 / (2.0 * sm) - m1 * m1 / (4.0 * m * sm));
  p.phi = std::atan2(v.g, v.f);
  p.phi1 = w / m;
  p.phi2 = (w1 * m - w * m1) / (m * m);
  return p;
}

void TubeProfile::validate(int n_grid) const {
  if (kind_ == Kind::Circular) return;
  std::vector<Eigen::Vector2d> pts(static_cast<std::size_t>(n_grid));
  double scale = 0.0;
  for (int i = 0; i < n_grid; ++i) {
    const Values v = values(kTwoPi * i / n_grid);
    pts[static_cast<std::size_t>(i)] = Eigen::Vector2d(v.f, v.g);
    scale = std::max(scale, pts[static_cast<std::size_t>(i)].norm());
  }
  for (const auto& p : pts) {
    if (!(p.norm() > 1e-9 * std::max(1.0, scale))) {
      throw Error(ErrorKind::ProfileNotSimple, "profile not simple: (f, g) passes through the origin");
    }
  }
  const auto n = static_cast<std::size_t>(n_grid);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n])) {
        throw Error(ErrorKind::ProfileNotSimple, "profile not simple: self-intersection near psi=" +
                                                     std::to_string(kTwoPi * static_cast<double>(i) / n_grid));
      }
    }
  }
}

InducedMetric2D::InducedMetric2D(Evaluator eval, double s_period, double s_length, bool s_independent,
                                 std::string description)
    : eval_(std::move(eval)),
      s_period_(s_period),
      s_length_(s_period > 0.0 ? s_period : s_length),
      s_independent_(s_independent),
      description_(std::move(description)) {}

double InducedMetric2D::psi_period() const { return kTwoPi; }

void InducedMetric2D::validate(int n_s, int n_psi) const {
  const double span = s_length_ > 0.0 ? s_length_ : 1.0;
  for (int i = 0; i < n_s; ++i) {
    const double s = s_closed() ? span * i / n_s : span * i / std::max(1, n_s - 1);
    for (int j = 0; j < n_psi; ++j) {
      const double psi = kTwoPi * j / n_psi;
      const MetricSample m = eval_(s, psi);
      const double det = m.E * m.G - m.F * m.F;
      if (!(m.E > 0.0) || !(m.G > 0.0) || !(det > 0.0)) {
        std::ostringstream os;
        os << "tube degenerate: EG - F^2 = " << det << " at (s, psi) = (" << s << ", " << psi << ")";
        throw Error(ErrorKind::TubeDegenerate, os.str());
      }
    }
  }
}

SpaceFormScale space_form_scale(SpaceForm k0, double rho) {
  switch (k0) {
    case SpaceForm::Spherical:
      return {std::cos(rho), std::sin(rho)};
    case SpaceForm::Flat:
      return {1.0, rho};
    case SpaceForm::Hyperbolic:
      return {std::cosh(rho), std::sinh(rho)};
  }
  return {};
}

Vec3 spaceform_jacobi(SpaceForm k0, double rho, const Vec3& J0, const Vec3& J1, const Vec3& gamma_dir) {
  const SpaceFormScale sc = space_form_scale(k0, rho);
  const double a0 = J0.dot(gamma_dir);
  const double a1 = J1.dot(gamma_dir);
  const Vec3 J0p = J0 - a0 * gamma_dir;
  const Vec3 J1p = J1 - a1 * gamma_dir;
  return (a0 + rho * a1) * gamma_dir + sc.F0 * J0p + sc.G0 * J1p;
}

CurvatureFunctions CurvatureFunctions::constants(double k1, double k2, double s_period) {
  CurvatureFunctions c;
  c.k1 = [k1](double) { return k1; };
  c.k2 = [k2](double) { return k2; };
  c.dk1 = [](double) { return 0.0; };
  c.dk2 = [](double) { return 0.0; };
  c.s_period = s_period;
  c.s_length = s_period;
  c.constant = true;
  return c;
}

MetricSample circular_tube_sample(SpaceForm k0, double k1, double k2, double dk1, double dk2, double rho0,
                                  double psi) {
  const SpaceFormScale sc = space_form_scale(k0, rho0);
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  const double X = sc.F0 - k1 * sc.G0 * c;
  const double G2 = sc.G0 * sc.G0;
  MetricSample m;
  m.E = X * X + k2 * k2 * G2;
  m.F = k2 * G2;
  m.G = G2;
  m.E_s = 2.0 * X * (-dk1 * sc.G0 * c) + 2.0 * k2 * dk2 * G2;
  m.F_s = dk2 * G2;
  m.E_psi = 2.0 * X * (k1 * sc.G0 * s);
  return m;
}

MetricSample generalized_tube_sample(SpaceForm k0, double k1, double k2, double dk1, double dk2,
                                     const TubeProfile& profile, double psi) {
  const TubeProfile::Polar p = profile.polar(psi);
  const SpaceFormScale sc = space_form_scale(k0, p.r);
  const double K = static_cast<double>(curvature_of(k0));
  const double Fr = sc.F0;
  const double Gr = sc.G0;
  const double c = std::cos(p.phi);
  const double s = std::sin(p.phi);
  const double X = Fr - k1 * Gr * c;
  const double G2 = Gr * Gr;
  MetricSample m;
  // J_s = X T + k2 G(r) e_phi and d beta / d psi = r' Gamma' + phi' G(r) e_phi.
  m.E = X * X + k2 * k2 * G2;
  m.F = k2 * G2 * p.phi1;
  m.G = p.r1 * p.r1 + G2 * p.phi1 * p.phi1;
  m.E_s = 2.0 * X * (-dk1 * Gr * c) + 2.0 * k2 * dk2 * G2;
  m.F_s = dk2 * G2 * p.phi1;
  m.G_s = 0.0;
  const double dX = -K * Gr * p.r1 - k1 * Fr * p.r1 * c + k1 * Gr * s * p.phi1;
  m.E_psi = 2.0 * X * dX + 2.0 * k2 * k2 * Gr * Fr * p.r1;
  m.F_psi = k2 * (2.0 * Gr * Fr * p.r1 * p.phi1 + G2 * p.phi2);
  m.G_psi = 2.0 * p.r1 * p.r2 + 2.0 * Gr * Fr * p.r1 * p.phi1 * p.phi1 + 2.0 * G2 * p.phi1 * p.phi2;
  return m;
}

namespace {

std::function<double(double)> derivative_or_fd(const std::function<double(double)>& f,
                                               const std::function<double(double)>& df) {
  if (df) return df;
  return [f](double s) { return five_point(f, s); };
}

}  // namespace

InducedMetric2D circular_tube_metric(SpaceForm k0, const CurvatureFunctions& k, double rho0) {
  if (!(rho0 > 0.0)) {
    throw Error(ErrorKind::Config, "tube radius rho0 must be positive");
  }
  auto dk1 = derivative_or_fd(k.k1, k.dk1);
  auto dk2 = derivative_or_fd(k.k2, k.dk2);
  auto k1 = k.k1;
  auto k2 = k.k2;
  InducedMetric2D metric(
      [=](double s, double psi) { return circular_tube_sample(k0, k1(s), k2(s), dk1(s), dk2(s), rho0, psi); },
      k.s_period, k.s_length, k.constant, "circular tube");
  const SpaceFormScale sc = space_form_scale(k0, rho0);
  if (k.constant && !(std::abs(k.k1(0.0)) * sc.G0 < sc.F0)) {
    throw Error(ErrorKind::TubeDegenerate, "tube degenerate: |k1| G0 >= F0 for rho0=" + std::to_string(rho0));
  }
  metric.validate();
  return metric;
}

InducedMetric2D generalized_tube_metric(SpaceForm k0, const CurvatureFunctions& k, const TubeProfile& profile) {
  profile.validate();
  auto dk1 = derivative_or_fd(k.k1, k.dk1);
  auto dk2 = derivative_or_fd(k.k2, k.dk2);
  auto k1 = k.k1;
  auto k2 = k.k2;
  InducedMetric2D metric(
      [=](double s, double psi) { return generalized_tube_sample(k0, k1(s), k2(s), dk1(s), dk2(s), profile, psi); },
      k.s_period, k.s_length, k.constant,
      profile.kind() == TubeProfile::Kind::Circular ? "circular tube" : "generalized tube");
  metric.validate();
  return metric;
}

InducedMetric2D generalized_tube_metric(SpaceForm k0, double k1, double k2, const TubeProfile& profile,
                                        double s_period) {
  return generalized_tube_metric(k0, CurvatureFunctions::constants(k1, k2, s_period), profile);
}

}  // namespace geotubes
