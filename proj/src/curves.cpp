#include "geotubes/curves.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "curve_kinematics.hpp"
#include "geotubes/errors.hpp"

namespace geotubes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec3 five_point(const ParamCurve::PointFn& f, double t) {
  const double h = 1e-3 * std::max(1.0, std::abs(t));
  return (-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h)) / (12.0 * h);
}

std::shared_ptr<const ChartMetric> shared_chart(ChartMetric c) {
  return std::make_shared<const ChartMetric>(std::move(c));
}

bool is_integer(double x) { return std::abs(x - std::round(x)) < 1e-12; }

Vec3 hinted_normal(const ParamCurve& curve, double t) {
  const Vec3 x = curve.position(t);
  const MetricAt m = metric_at(*curve.chart, x);
  const Vec3 v = curve.velocity(t);
  const Vec3 T = v / norm(m.g, v);
  Vec3 n = curve.normal_hint(t);
  n -= inner(m.g, n, T) * T;
  const double len = norm(m.g, n);
  if (!(len > 1e-12)) {
    throw Error(ErrorKind::VanishingCurvature, "vanishing geodesic curvature: normal hint is tangent at t=" +
                                                   std::to_string(t));
  }
  return n / len;
}

}  // namespace

Vec3 ParamCurve::position(double t) const { return pos(t); }

Vec3 ParamCurve::velocity(double t) const { return vel ? vel(t) : five_point(pos, t); }

Vec3 ParamCurve::acceleration(double t) const {
  if (acc) return acc(t);
  return five_point([this](double u) { return velocity(u); }, t);
}

Vec3 ParamCurve::third_derivative(double t) const {
  if (jerk) return jerk(t);
  return five_point([this](double u) { return acceleration(u); }, t);
}

namespace catalog {

ParamCurve circle(double radius) {
  ParamCurve c;
  c.name = "circle";
  c.chart = shared_chart(ChartMetric::euclidean3());
  c.pos = [radius](double t) { return Vec3(radius * std::cos(t), radius * std::sin(t), 0.0); };
  c.vel = [radius](double t) { return Vec3(-radius * std::sin(t), radius * std::cos(t), 0.0); };
  c.acc = [radius](double t) { return Vec3(-radius * std::cos(t), -radius * std::sin(t), 0.0); };
  c.jerk = [radius](double t) { return Vec3(radius * std::sin(t), -radius * std::cos(t), 0.0); };
  c.t_min = 0.0;
  c.t_max = kTwoPi;
  c.closed = true;
  c.period = kTwoPi;
  return c;
}

ParamCurve helix(double a, double c) {
  ParamCurve h;
  h.name = "helix";
  h.chart = shared_chart(ChartMetric::euclidean3());
  h.pos = [a, c](double t) { return Vec3(a * std::cos(t), a * std::sin(t), c * t); };
  h.vel = [a, c](double t) { return Vec3(-a * std::sin(t), a * std::cos(t), c); };
  h.acc = [a](double t) { return Vec3(-a * std::cos(t), -a * std::sin(t), 0.0); };
  h.jerk = [a](double t) { return Vec3(a * std::sin(t), -a * std::cos(t), 0.0); };
  h.t_min = 0.0;
  h.t_max = kTwoPi;
  return h;
}

ParamCurve helix_cylindrical(double a, double c) {
  ParamCurve h;
  h.name = "helix_cylindrical";
  h.chart = shared_chart(ChartMetric::euclidean3_cylindrical());
  h.pos = [a, c](double t) { return Vec3(a, t, c * t); };
  h.vel = [c](double) { return Vec3(0.0, 1.0, c); };
  h.acc = [](double) { return Vec3::Zero().eval(); };
  h.jerk = [](double) { return Vec3::Zero().eval(); };
  h.t_min = 0.0;
  h.t_max = kTwoPi;
  return h;
}

ParamCurve ellipse(double a_semi, double b_semi) {
  if (!(a_semi > 0.0) || !(b_semi > 0.0)) {
    throw Error(ErrorKind::Config, "ellipse semi-axes must be positive");
  }
  ParamCurve e;
  e.name = "ellipse";
  e.chart = shared_chart(ChartMetric::euclidean3());
  e.pos = [a_semi, b_semi](double t) { return Vec3(a_semi * std::cos(t), b_semi * std::sin(t), 0.0); };
  e.vel = [a_semi, b_semi](double t) { return Vec3(-a_semi * std::sin(t), b_semi * std::cos(t), 0.0); };
  e.acc = [a_semi, b_semi](double t) { return Vec3(-a_semi * std::cos(t), -b_semi * std::sin(t), 0.0); };
  e.jerk = [a_semi, b_semi](double t) { return Vec3(a_semi * std::sin(t), -b_semi * std::cos(t), 0.0); };
  e.t_min = 0.0;
  e.t_max = kTwoPi;
  e.closed = true;
  e.period = kTwoPi;
  return e;
}

ParamCurve straight_line(double length) {
  ParamCurve l;
  l.name = "straight_line";
  l.chart = shared_chart(ChartMetric::euclidean3());
  l.pos = [](double t) { return Vec3(t, 0.0, 0.0); };
  l.vel = [](double) { return Vec3(1.0, 0.0, 0.0); };
  l.acc = [](double) { return Vec3::Zero().eval(); };
  l.jerk = [](double) { return Vec3::Zero().eval(); };
  l.t_min = 0.0;
  l.t_max = length;
  return l;
}

ParamCurve hopf_curve(double alpha, double beta, double eta0) {
  ParamCurve h;
  h.name = "hopf_curve";
  h.chart = shared_chart(ChartMetric::sphere3_hopf());
  h.chart->require_domain(Vec3(eta0, 0.0, 0.0));
  h.pos = [alpha, beta, eta0](double t) { return Vec3(eta0, alpha * t, beta * t); };
  h.vel = [alpha, beta](double) { return Vec3(0.0, alpha, beta); };
  h.acc = [](double) { return Vec3::Zero().eval(); };
  h.jerk = [](double) { return Vec3::Zero().eval(); };
  h.t_min = 0.0;
  h.t_max = kTwoPi;
  h.closed = is_integer(alpha) && is_integer(beta);
  h.period = h.closed ? kTwoPi : 0.0;
  return h;
}

ParamCurve ellipsoid_curve(double a, double b, double alpha, double beta, double eta0, double eta_amplitude) {
  ParamCurve e;
  e.name = "ellipsoid_curve";
  e.chart = shared_chart(ChartMetric::ellipsoid3_degenerate(a, b));
  e.chart->require_domain(Vec3(eta0 - std::abs(eta_amplitude), 0.0, 0.0));
  e.chart->require_domain(Vec3(eta0 + std::abs(eta_amplitude), 0.0, 0.0));
  const double A = eta_amplitude;
  e.pos = [alpha, beta, eta0, A](double t) { return Vec3(eta0 + A * std::sin(t), alpha * t, beta * t); };
  e.vel = [alpha, beta, A](double t) { return Vec3(A * std::cos(t), alpha, beta); };
  e.acc = [A](double t) { return Vec3(-A * std::sin(t), 0.0, 0.0); };
  e.jerk = [A](double t) { return Vec3(-A * std::cos(t), 0.0, 0.0); };
  e.normal_hint = [a, b, eta0, A](double t) {
    const double eta = eta0 + A * std::sin(t);
    const double q = std::sqrt(a * a * std::cos(eta) * std::cos(eta) + b * b * std::sin(eta) * std::sin(eta));
    return Vec3(1.0 / q, 0.0, 0.0);
  };
  e.t_min = 0.0;
  e.t_max = kTwoPi;
  e.closed = is_integer(alpha) && is_integer(beta);
  e.period = e.closed ? kTwoPi : 0.0;
  return e;
}

}  // namespace catalog

ParamCurve reparameterize(const ParamCurve& curve, const Reparameterization& r) {
  ParamCurve out;
  out.name = curve.name + "_reparameterized";
  out.chart = curve.chart;
  auto base = std::make_shared<const ParamCurve>(curve);
  out.pos = [base, r](double u) { return base->position(r.phi(u)); };
  out.vel = [base, r](double u) { return (base->velocity(r.phi(u)) * r.d1(u)).eval(); };
  out.acc = [base, r](double u) {
    const double t = r.phi(u);
    const double p1 = r.d1(u);
    return (base->acceleration(t) * p1 * p1 + base->velocity(t) * r.d2(u)).eval();
  };
  out.jerk = [base, r](double u) {
    const double t = r.phi(u);
    const double p1 = r.d1(u);
    const double p2 = r.d2(u);
    return (base->third_derivative(t) * p1 * p1 * p1 + 3.0 * base->acceleration(t) * p1 * p2 +
            base->velocity(t) * r.d3(u))
        .eval();
  };
  if (curve.normal_hint) {
    out.normal_hint = [base, r](double u) { return base->normal_hint(r.phi(u)); };
  }
  out.t_min = r.u_min;
  out.t_max = r.u_max;
  return out;
}

double metric_speed(const ParamCurve& curve, double t) {
  const Vec3 x = curve.position(t);
  curve.chart->require_domain(x);
  return norm(curve.chart->metric(x), curve.velocity(t));
}

namespace detail {

Kinematics kinematics(const ParamCurve& curve, double t) {
  Kinematics k;
  k.x = curve.position(t);
  k.geo = local_geometry(*curve.chart, k.x);
  k.vel = curve.velocity(t);
  k.speed = norm(k.geo.metric.g, k.vel);
  if (!(k.speed >= 1e-12)) {
    throw Error(ErrorKind::IrregularCurve, "irregular curve: vanishing speed at t=" + std::to_string(t));
  }
  k.acc = curve.acceleration(t);
  k.A = k.acc + k.geo.christoffel.contract(k.vel, k.vel);
  return k;
}

Vec3 covariant_jerk(const ParamCurve& curve, const Kinematics& k, double t) {
  const Vec3 jerk = curve.third_derivative(t);
  const ChristoffelJet& G = k.geo.christoffel;
  const Vec3 dA = jerk + G.contract_derivative(k.vel, k.vel, k.vel) + 2.0 * G.contract(k.acc, k.vel);
  return dA + G.contract(k.vel, k.A);
}

}  // namespace detail



FrenetData frenet_at_parameter(const ParamCurve& curve, double t, const FrenetOptions& options) {
  const detail::Kinematics k = detail::kinematics(curve, t);
  const MetricAt& m = k.geo.metric;
  const double v = k.speed;
  FrenetData f;
  f.t = t;
  f.x = k.x;
  f.T = k.vel / v;
  const Vec3 dT = (k.A - inner(m.g, k.A, f.T) * f.T) / (v * v);
  const double k1 = norm(m.g, dT);
  if (k1 >= options.k1_min) {
    f.k1 = k1;
    f.N = dT / k1;
    f.B = cross(m, f.T, f.N);
    const Vec3 dA = detail::covariant_jerk(curve, k, t);
    f.k2 = inner(m.g, dA, f.B) / (v * v * v * k1);
    return f;
  }
  if (!options.allow_normal_hint || !curve.normal_hint) {
    throw Error(ErrorKind::VanishingCurvature,
                "vanishing geodesic curvature: k1=" + std::to_string(k1) + " at t=" + std::to_string(t));
  }
  f.from_normal_hint = true;
  f.N = hinted_normal(curve, t);
  f.B = cross(m, f.T, f.N);
  f.k1 = inner(m.g, dT, f.N);
  const Vec3 dN = five_point([&curve](double u) { return hinted_normal(curve, u); }, t);
  const Vec3 DN = (dN + k.geo.christoffel.contract(k.vel, f.N)) / v;
  f.k2 = inner(m.g, DN, f.B);
  return f;
}

std::vector<FrenetData> frenet_evolve(const ParamCurve& curve, const ArcLengthTable& table,
                                      const std::vector<double>& s_values, const FrenetOptions& options) {
  std::vector<FrenetData> out;
  out.reserve(s_values.size());
  for (double s : s_values) {
    FrenetData f = frenet_at_parameter(curve, table.t_of_s(s), options);
    f.s = s;
    out.push_back(f);
  }
  return out;
}

std::vector<FrenetData> frenet_evolve(const ParamCurve& curve, const std::vector<double>& s_values,
                                      const FrenetOptions& options) {
  const ArcLengthTable table(curve, options.arclength_samples);
  return frenet_evolve(curve, table, s_values, options);
}

CurvatureScalars curvature_scalars(const ParamCurve& curve, double s, const FrenetOptions& options) {
  const FrenetData f = frenet_evolve(curve, std::vector<double>{s}, options).front();
  return {f.k1, f.k2};
}

ConstancyResult constancy_check(const ParamCurve& curve, int n_samples, double tol, const FrenetOptions& options) {
  if (n_samples < 2) {
    throw Error(ErrorKind::Config, "constancy check needs at least 2 samples");
  }
  const ArcLengthTable table(curve, options.arclength_samples);
  const double L = table.length();
  std::vector<double> s_values;
  for (int i = 0; i < n_samples; ++i) {
    s_values.push_back(curve.closed ? L * i / n_samples : L * i / (n_samples - 1));
  }
  const auto frames = frenet_evolve(curve, table, s_values, options);
  ConstancyResult r;
  for (const auto& f : frames) {
    r.max_deviation = std::max({r.max_deviation, std::abs(f.k1 - frames.front().k1), std::abs(f.k2 - frames.front().k2)});
  }
  r.constant = r.max_deviation < tol;
  return r;
}

}  // namespace geotubes
