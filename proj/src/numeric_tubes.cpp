#include "geotubes/numeric_tubes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "geotubes/errors.hpp"
#include "parallel.hpp"

namespace geotubes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kGeodesicDim = 15;  // x, xdot, frame
constexpr int kFullDim = 27;      // plus two Jacobi fields and their derivatives

// Geodesic equation, parallel transport of the frame and, optionally, the Jacobi
// equation J'' = -R(J, Gamma') Gamma' written in the transported frame.
class RadialSystem {
 public:
  RadialSystem(const ChartMetric& chart, bool with_jacobi) : chart_(chart), with_jacobi_(with_jacobi) {}

  void operator()(double, const ode::Vector& y, ode::Vector& dy) const {
    const Vec3 x = y.segment<3>(0);
    if (!chart_.in_domain(x)) {
      // NaN forces the integrator to reject the step; persistent exits surface as domain errors.
      left_domain_ = true;
      dy.setConstant(std::numeric_limits<double>::quiet_NaN());
      return;
    }
    const Vec3 v = y.segment<3>(3);
    if (!with_jacobi_) {
      const MetricJet jet = chart_.jet(x);
      const MetricAt m = invert_metric(jet.g);
      const Christoffel G = christoffel_from_jet(jet, m);
      dy.segment<3>(0) = v;
      dy.segment<3>(3) = -G.contract(v, v);
      for (int a = 0; a < 3; ++a) {
        dy.segment<3>(6 + 3 * a) = -G.contract(v, y.segment<3>(6 + 3 * a));
      }
      return;
    }
    const LocalGeometry geo = local_geometry(chart_, x);
    const Christoffel& G = geo.christoffel;
    dy.segment<3>(0) = v;
    dy.segment<3>(3) = -G.contract(v, v);
    Mat3 frame;
    for (int a = 0; a < 3; ++a) {
      frame.col(a) = y.segment<3>(6 + 3 * a);
      dy.segment<3>(6 + 3 * a) = -G.contract(v, frame.col(a));
    }
    const Mat3 M = geo.riemann.jacobi_operator(v);
    // c'' = -frame^T g M frame c
    const Mat3 A = frame.transpose() * geo.metric.g * M * frame;
    dy.segment<3>(15) = y.segment<3>(18);
    dy.segment<3>(18) = -A * y.segment<3>(15);
    dy.segment<3>(21) = y.segment<3>(24);
    dy.segment<3>(24) = -A * y.segment<3>(21);
  }

  bool left_domain() const { return left_domain_; }

 private:
  const ChartMetric& chart_;
  bool with_jacobi_;
  mutable bool left_domain_ = false;
};

ode::Vector initial_state(const FrenetData& start, double psi, bool with_jacobi) {
  ode::Vector y = ode::Vector::Zero(with_jacobi ? kFullDim : kGeodesicDim);
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  y.segment<3>(0) = start.x;
  y.segment<3>(3) = c * start.N + s * start.B;
  y.segment<3>(6) = start.T;
  y.segment<3>(9) = start.N;
  y.segment<3>(12) = start.B;
  if (with_jacobi) {
    y(15) = 1.0;
    y.segment<3>(18) = Vec3(-start.k1 * c, -start.k2 * s, start.k2 * c);
    y.segment<3>(24) = Vec3(0.0, -s, c);
  }
  return y;
}

RadialState to_state(double rho, const ode::Vector& y) {
  RadialState st;
  st.rho = rho;
  st.x = y.segment<3>(0);
  st.xdot = y.segment<3>(3);
  for (int a = 0; a < 3; ++a) st.frame.col(a) = y.segment<3>(6 + 3 * a);
  if (y.size() == kFullDim) {
    st.has_jacobi = true;
    st.jacobi.head<3>() = y.segment<3>(15);
    st.jacobi.tail<3>() = y.segment<3>(21);
    st.jacobi_dot.head<3>() = y.segment<3>(18);
    st.jacobi_dot.tail<3>() = y.segment<3>(24);
  }
  return st;
}

std::vector<RadialState> integrate_radial(const ChartMetric& chart, const FrenetData& start, double psi,
                                          double rho_max, const RadialOptions& options, bool with_jacobi) {
  if (!(rho_max >= 0.0)) {
    throw Error(ErrorKind::Config, "radial geodesic length must be non-negative");
  }
  chart.require_domain(start.x);
  RadialSystem system(chart, with_jacobi);
  ode::Vector y0 = initial_state(start, psi, with_jacobi);
  std::vector<RadialState> out;
  std::size_t next = 0;
  const auto& rhos = options.output_rho;
  while (next < rhos.size() && rhos[next] <= 0.0) {
    out.push_back(to_state(rhos[next], y0));
    ++next;
  }
  if (rhos.empty()) out.push_back(to_state(0.0, y0));
  if (rho_max == 0.0) return out;
  ode::Dop853 solver([&system](double t, const ode::Vector& y, ode::Vector& dy) { system(t, y, dy); }, 0.0, y0,
                     rho_max, options.tolerances);
  try {
    while (solver.step()) {
      if (rhos.empty()) {
        out.push_back(to_state(solver.t(), solver.y()));
        continue;
      }
      while (next < rhos.size() && rhos[next] <= solver.t()) {
        const double r = rhos[next];
        out.push_back(to_state(r, r == solver.t() ? solver.y() : solver.dense_output()(r)));
        ++next;
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::StepFailure && system.left_domain()) {
      std::ostringstream os;
      os << "left chart domain: radial geodesic exits " << chart.name() << " near rho=" << solver.t();
      throw Error(ErrorKind::ChartDomain, os.str());
    }
    throw;
  }
  return out;
}

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// Hermite basis on [0, 1]: value weights (H0, H1) and slope weights (K0, K1), with derivatives.
struct Hermite {
  double H0, H1, K0, K1;
  double dH0, dH1, dK0, dK1;
  explicit Hermite(double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    H0 = 2 * t3 - 3 * t2 + 1;
    H1 = -2 * t3 + 3 * t2;
    K0 = t3 - 2 * t2 + t;
    K1 = t3 - t2;
    dH0 = 6 * t2 - 6 * t;
    dH1 = -6 * t2 + 6 * t;
    dK0 = 3 * t2 - 4 * t + 1;
    dK1 = 3 * t2 - 2 * t;
  }
};

struct BicubicField {
  Eigen::MatrixXd v, ds, dp, dsp;

  BicubicField(const Eigen::MatrixXd& values, const Eigen::MatrixXd& Ss, const Eigen::MatrixXd& Sp) : v(values) {
    dp = values * Sp.transpose();
    ds = Ss * values;
    dsp = Ss * dp;
  }

  // Value and first partials at cell (i, j) with local coordinates (a, b) and spacings (hs, hp).
  void eval(int i0, int i1, int j0, int j1, const Hermite& A, const Hermite& B, double hs, double hp, double& value,
            double& d_s, double& d_p) const {
    const double f00 = v(i0, j0), f01 = v(i0, j1), f10 = v(i1, j0), f11 = v(i1, j1);
    const double s00 = hs * ds(i0, j0), s01 = hs * ds(i0, j1), s10 = hs * ds(i1, j0), s11 = hs * ds(i1, j1);
    const double p00 = hp * dp(i0, j0), p01 = hp * dp(i0, j1), p10 = hp * dp(i1, j0), p11 = hp * dp(i1, j1);
    const double x00 = hs * hp * dsp(i0, j0), x01 = hs * hp * dsp(i0, j1), x10 = hs * hp * dsp(i1, j0),
                 x11 = hs * hp * dsp(i1, j1);
    // a, c: value and slope weights in s; b, e: value and slope weights in psi.
    auto combine = [&](double a0, double a1, double b0, double b1, double c0, double c1, double e0, double e1) {
      return f00 * a0 * b0 + f01 * a0 * b1 + f10 * a1 * b0 + f11 * a1 * b1 + s00 * c0 * b0 + s01 * c0 * b1 +
             s10 * c1 * b0 + s11 * c1 * b1 + p00 * a0 * e0 + p01 * a0 * e1 + p10 * a1 * e0 + p11 * a1 * e1 +
             x00 * c0 * e0 + x01 * c0 * e1 + x10 * c1 * e0 + x11 * c1 * e1;
    };
    value = combine(A.H0, A.H1, B.H0, B.H1, A.K0, A.K1, B.K0, B.K1);
    d_s = combine(A.dH0, A.dH1, B.H0, B.H1, A.dK0, A.dK1, B.K0, B.K1) / hs;
    d_p = combine(A.H0, A.H1, B.dH0, B.dH1, A.K0, A.K1, B.dK0, B.dK1) / hp;
  }
};

}  // namespace

std::vector<RadialState> radial_geodesic(const ChartMetric& chart, const FrenetData& start, double psi,
                                         double rho_max, const RadialOptions& options) {
  return integrate_radial(chart, start, psi, rho_max, options, false);
}

RadialState transport_frame_and_jacobi(const ChartMetric& chart, const FrenetData& start, double psi, double rho0,
                                       const RadialOptions& options) {
  RadialOptions o = options;
  o.output_rho = {rho0};
  return integrate_radial(chart, start, psi, rho0, o, true).back();
}

std::vector<RadialState> transport_frame_and_jacobi_profile(const ChartMetric& chart, const FrenetData& start,
                                                            double psi, double rho_max,
                                                            const RadialOptions& options) {
  return integrate_radial(chart, start, psi, rho_max, options, true);
}

double MetricGrid::s_at(int i) const {
  return s_closed ? s_length * i / n_s : s_length * i / std::max(1, n_s - 1);
}

double MetricGrid::psi_at(int j) const { return kTwoPi * j / n_psi; }

double MetricGrid::s_variation() const {
  double worst = 0.0;
  for (const Eigen::MatrixXd* X : {&E, &F, &G}) {
    for (int j = 0; j < n_psi; ++j) {
      const double scale = std::max(1.0, X->col(j).cwiseAbs().maxCoeff());
      worst = std::max(worst, (X->col(j).maxCoeff() - X->col(j).minCoeff()) / scale);
    }
  }
  return worst;
}

MetricGrid sample_tube_metric(const ChartMetric& chart, const ParamCurve& curve, const TubeProfile& profile,
                              const NumericTubeOptions& options) {
  if (options.n_s < 4 || options.n_psi < 4) {
    throw Error(ErrorKind::Config, "numeric tube grid must be at least 4 x 4");
  }
  profile.validate();
  const ArcLengthTable table(curve, options.arclength_samples);
  MetricGrid grid;
  grid.n_s = options.n_s;
  grid.n_psi = options.n_psi;
  grid.s_length = table.length();
  grid.s_closed = curve.closed;
  grid.E.resize(grid.n_s, grid.n_psi);
  grid.F.resize(grid.n_s, grid.n_psi);
  grid.G.resize(grid.n_s, grid.n_psi);

  std::vector<double> s_nodes(static_cast<std::size_t>(grid.n_s));
  for (int i = 0; i < grid.n_s; ++i) s_nodes[static_cast<std::size_t>(i)] = grid.s_at(i);
  const std::vector<FrenetData> frames = frenet_evolve(curve, table, s_nodes, options.frenet);

  detail::run_parallel(grid.n_s * grid.n_psi, options.threads, [&](int node) {
    const int i = node / grid.n_psi;
    const int j = node % grid.n_psi;
    const TubeProfile::Polar p = profile.polar(grid.psi_at(j));
    const RadialState st =
        transport_frame_and_jacobi(chart, frames[static_cast<std::size_t>(i)], p.phi, p.r, options.radial);
    const Mat3 g = chart.metric(st.x);
    const Vec3 Js = st.J_s();
    const Vec3 Dpsi = p.r1 * st.xdot + p.phi1 * st.J_psi();
    grid.E(i, j) = inner(g, Js, Js);
    grid.F(i, j) = inner(g, Js, Dpsi);
    grid.G(i, j) = inner(g, Dpsi, Dpsi);
  });

  for (int i = 0; i < grid.n_s; ++i) {
    for (int j = 0; j < grid.n_psi; ++j) {
      const double det = grid.E(i, j) * grid.G(i, j) - grid.F(i, j) * grid.F(i, j);
      if (!(det > 0.0) || !(grid.E(i, j) > 0.0)) {
        std::ostringstream os;
        os << "tube degenerate: EG - F^2 = " << det << " at grid node (" << i << ", " << j << ")";
        throw Error(ErrorKind::TubeDegenerate, os.str());
      }
    }
  }

  grid.header.push_back("chart: " + chart.name());
  for (const auto& [k, v] : chart.params()) grid.header.push_back("chart." + k + ": " + format_double(v));
  grid.header.push_back("curve: " + curve.name);
  grid.header.push_back(std::string("profile: ") +
                        (profile.kind() == TubeProfile::Kind::Circular ? "circular" : "generalized") +
                        " rho0=" + format_double(profile.rho0()));
  grid.header.push_back("rtol: " + format_double(options.radial.tolerances.rtol) +
                        " atol: " + format_double(options.radial.tolerances.atol));
  return grid;
}

InducedMetric2D interpolate_metric(const MetricGrid& grid, double s_independence_tol) {
  const double period = grid.s_closed ? grid.s_length : 0.0;
  if (grid.s_variation() < s_independence_tol) {
    std::vector<double> e(static_cast<std::size_t>(grid.n_psi)), f(e.size()), g(e.size());
    for (int j = 0; j < grid.n_psi; ++j) {
      e[static_cast<std::size_t>(j)] = grid.E.col(j).mean();
      f[static_cast<std::size_t>(j)] = grid.F.col(j).mean();
      g[static_cast<std::size_t>(j)] = grid.G.col(j).mean();
    }
    const FourierSeries fe = FourierSeries::interpolate(e, kTwoPi);
    const FourierSeries ff = FourierSeries::interpolate(f, kTwoPi);
    const FourierSeries fg = FourierSeries::interpolate(g, kTwoPi);
    return InducedMetric2D(
        [fe, ff, fg](double, double psi) {
          MetricSample m;
          double d2;
          fe.evaluate(psi, m.E, m.E_psi, d2);
          ff.evaluate(psi, m.F, m.F_psi, d2);
          fg.evaluate(psi, m.G, m.G_psi, d2);
          return m;
        },
        period, grid.s_length, true, "numeric tube (psi-only interpolant)");
  }
  if (grid.n_s < 3) {
    throw Error(ErrorKind::InsufficientPoints, "insufficient points: s-dependent grid needs n_s >= 3");
  }
  const double hs = grid.s_closed ? grid.s_length / grid.n_s : grid.s_length / (grid.n_s - 1);
  const double hp = kTwoPi / grid.n_psi;
  const Eigen::MatrixXd Ss = spline_slope_matrix(grid.n_s, hs, grid.s_closed);
  const Eigen::MatrixXd Sp = spline_slope_matrix(grid.n_psi, hp, true);
  auto fields = std::make_shared<const std::array<BicubicField, 3>>(
      std::array<BicubicField, 3>{BicubicField(grid.E, Ss, Sp), BicubicField(grid.F, Ss, Sp),
                                  BicubicField(grid.G, Ss, Sp)});
  const int n_s = grid.n_s;
  const int n_psi = grid.n_psi;
  const bool closed = grid.s_closed;
  const double L = grid.s_length;
  return InducedMetric2D(
      [=](double s, double psi) {
        double us = closed ? wrap_periodic(s, L) / hs : std::clamp(s, 0.0, L) / hs;
        int i0 = static_cast<int>(std::floor(us));
        if (closed) {
          i0 = std::clamp(i0, 0, n_s - 1);
        } else {
          i0 = std::clamp(i0, 0, n_s - 2);
        }
        const int i1 = closed ? (i0 + 1) % n_s : i0 + 1;
        const double up = wrap_periodic(psi, kTwoPi) / hp;
        const int j0 = std::clamp(static_cast<int>(std::floor(up)), 0, n_psi - 1);
        const int j1 = (j0 + 1) % n_psi;
        const Hermite A(us - i0);
        const Hermite B(up - j0);
        MetricSample m;
        (*fields)[0].eval(i0, i1, j0, j1, A, B, hs, hp, m.E, m.E_s, m.E_psi);
        (*fields)[1].eval(i0, i1, j0, j1, A, B, hs, hp, m.F, m.F_s, m.F_psi);
        (*fields)[2].eval(i0, i1, j0, j1, A, B, hs, hp, m.G, m.G_s, m.G_psi);
        return m;
      },
      period, grid.s_length, false, "numeric tube (bicubic interpolant)");
}

InducedMetric2D tube_metric_numeric(const ChartMetric& chart, const ParamCurve& curve, const TubeProfile& profile,
                                    const NumericTubeOptions& options) {
  return interpolate_metric(sample_tube_metric(chart, curve, profile, options), options.s_independence_tol);
}

void write_metric_csv(const std::string& path, const MetricGrid& grid) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  }
  out.precision(17);
  for (const auto& line : grid.header) out << "# " << line << "\n";
  out << "# n_s: " << grid.n_s << "\n";
  out << "# n_psi: " << grid.n_psi << "\n";
  out << "# s_length: " << grid.s_length << "\n";
  out << "# s_closed: " << (grid.s_closed ? 1 : 0) << "\n";
  out << "s,psi,E,F,G\n";
  for (int i = 0; i < grid.n_s; ++i) {
    for (int j = 0; j < grid.n_psi; ++j) {
      out << grid.s_at(i) << "," << grid.psi_at(j) << "," << grid.E(i, j) << "," << grid.F(i, j) << ","
          << grid.G(i, j) << "\n";
    }
  }
  if (!out) {
    throw Error(ErrorKind::Io, "write failed for " + path);
  }
}

MetricGrid read_metric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open " + path + " for reading");
  }
  MetricGrid grid;
  std::string line;
  std::vector<std::array<double, 5>> rows;
  bool have_columns = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto start = line.find_first_not_of("# ");
      const std::string body = start == std::string::npos ? std::string() : line.substr(start);
      auto take = [&](const std::string& key) -> std::optional<std::string> {
        if (body.rfind(key + ": ", 0) == 0) return body.substr(key.size() + 2);
        return std::nullopt;
      };
      if (auto v = take("n_s")) {
        grid.n_s = std::stoi(*v);
      } else if (auto v2 = take("n_psi")) {
        grid.n_psi = std::stoi(*v2);
      } else if (auto v3 = take("s_length")) {
        grid.s_length = std::stod(*v3);
      } else if (auto v4 = take("s_closed")) {
        grid.s_closed = std::stoi(*v4) != 0;
      } else {
        grid.header.push_back(body);
      }
      continue;
    }
    if (!have_columns) {
      if (line != "s,psi,E,F,G") {
        throw Error(ErrorKind::Io, path + ": expected column header s,psi,E,F,G");
      }
      have_columns = true;
      continue;
    }
    std::array<double, 5> r{};
    std::istringstream ls(line);
    std::string cell;
    for (auto& x : r) {
      if (!std::getline(ls, cell, ',')) {
        throw Error(ErrorKind::Io, path + ": short row '" + line + "'");
      }
      x = std::stod(cell);
    }
    rows.push_back(r);
  }
  if (grid.n_s <= 0 || grid.n_psi <= 0 || rows.size() != static_cast<std::size_t>(grid.n_s * grid.n_psi)) {
    throw Error(ErrorKind::Io, path + ": grid size does not match the number of rows");
  }
  grid.E.resize(grid.n_s, grid.n_psi);
  grid.F.resize(grid.n_s, grid.n_psi);
  grid.G.resize(grid.n_s, grid.n_psi);
  for (int i = 0; i < grid.n_s; ++i) {
    for (int j = 0; j < grid.n_psi; ++j) {
      const auto& r = rows[static_cast<std::size_t>(i * grid.n_psi + j)];
      grid.E(i, j) = r[2];
      grid.F(i, j) = r[3];
      grid.G(i, j) = r[4];
    }
  }
  return grid;
}

SIndependenceReport s_independence_certificate(const ChartMetric& chart, const ParamCurve& curve, double rho0,
                                               int samples, const CertificateOptions& options) {
  if (samples < 1) {
    throw Error(ErrorKind::Config, "certificate needs at least one s sample");
  }
  const ArcLengthTable table(curve, options.arclength_samples);
  const double L = table.length();
  SIndependenceReport report;
  report.step = options.step_fraction * L;
  report.tolerance = options.tolerance;
  const double ds = report.step;

  RadialOptions radial = options.radial;
  radial.output_rho.clear();
  for (int k = 1; k <= options.n_rho; ++k) radial.output_rho.push_back(rho0 * k / options.n_rho);

  const std::vector<int>& essential = chart.essential_coordinates();
  for (int k = 0; k < samples; ++k) {
    const double s0 = curve.closed ? L * k / samples : (L - ds) * k / samples;
    const auto frames = frenet_evolve(curve, table, {s0, s0 + ds}, options.frenet);
    for (int m = 0; m < options.n_psi; ++m) {
      const double psi = kTwoPi * m / options.n_psi + 0.1;
      const auto a = transport_frame_and_jacobi_profile(chart, frames[0], psi, rho0, radial);
      const auto b = transport_frame_and_jacobi_profile(chart, frames[1], psi, rho0, radial);
      for (std::size_t r = 0; r < a.size(); ++r) {
        const LocalGeometry ga = local_geometry(chart, a[r].x);
        const LocalGeometry gb = local_geometry(chart, b[r].x);
        double dk = 0.0;
        const std::array<std::pair<int, int>, 3> planes{{{1, 2}, {0, 1}, {0, 2}}};
        for (const auto& [u, v] : planes) {
          const double ka = sectional_curvature(ga, a[r].frame.col(u), a[r].frame.col(v));
          const double kb = sectional_curvature(gb, b[r].frame.col(u), b[r].frame.col(v));
          dk = std::max(dk, std::abs(kb - ka) / ds);
        }
        double dx = 0.0;
        for (int e : essential) {
          dx = std::max({dx, std::abs(b[r].x(e) - a[r].x(e)) / ds, std::abs(b[r].xdot(e) - a[r].xdot(e)) / ds});
        }
        report.sectional_derivative.push_back(dk);
        report.coordinate_derivative.push_back(dx);
        report.max_sectional_derivative = std::max(report.max_sectional_derivative, dk);
        report.max_coordinate_derivative = std::max(report.max_coordinate_derivative, dx);
      }
    }
  }
  report.verdict =
      report.max_sectional_derivative < options.tolerance && report.max_coordinate_derivative < options.tolerance;
  return report;
}

}  // namespace geotubes
