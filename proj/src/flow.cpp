#include "geotubes/flow.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "geotubes/errors.hpp"
#include "parallel.hpp"

namespace geotubes {

namespace {

void check_domain(const InducedMetric2D& metric, double s) {
  if (!metric.s_closed() && (s < 0.0 || s > metric.s_length())) {
    std::ostringstream os;
    os << "left domain: s=" << s << " outside [0, " << metric.s_length() << "] of an open tube";
    throw Error(ErrorKind::LeftDomain, os.str());
  }
}

double energy(const MetricSample& m, double ps, double pp) {
  const Eigen::Matrix2d gi = inverse_metric(m);
  return 0.5 * (gi(0, 0) * ps * ps + 2.0 * gi(0, 1) * ps * pp + gi(1, 1) * pp * pp);
}

}  // namespace

Eigen::Matrix2d inverse_metric(const MetricSample& m) {
  const double det = m.E * m.G - m.F * m.F;
  if (!(det > 1e-14)) {
    std::ostringstream os;
    os << "degenerate metric at point: EG - F^2 = " << det;
    throw Error(ErrorKind::DegenerateMetric, os.str());
  }
  Eigen::Matrix2d gi;
  gi << m.G / det, -m.F / det, -m.F / det, m.E / det;
  return gi;
}

double hamiltonian(const InducedMetric2D& metric, const FlowState& state) {
  check_domain(metric, state.q(0));
  return energy(metric(state.q(0), state.q(1)), state.p(0), state.p(1));
}

void GeodesicFlow::operator()(double, const ode::Vector& y, ode::Vector& dy) const {
  if (!y.allFinite() || (!metric_.s_closed() && !(y(0) >= 0.0 && y(0) <= metric_.s_length()))) {
    // Rejected by the step controller; a persistent exit ends in a step failure.
    dy.setConstant(std::numeric_limits<double>::quiet_NaN());
    return;
  }
  const MetricSample m = metric_(y(0), y(1));
  const Eigen::Matrix2d gi = inverse_metric(m);
  const double ps = y(2);
  const double pp = y(3);
  const double sd = gi(0, 0) * ps + gi(0, 1) * pp;
  const double pd = gi(1, 0) * ps + gi(1, 1) * pp;
  dy(0) = sd;
  dy(1) = pd;
  dy(2) = 0.5 * (m.E_s * sd * sd + 2.0 * m.F_s * sd * pd + m.G_s * pd * pd);
  dy(3) = 0.5 * (m.E_psi * sd * sd + 2.0 * m.F_psi * sd * pd + m.G_psi * pd * pd);
}

ode::Tolerances flow_tolerances(const InducedMetric2D& metric, double tol, double max_step) {
  ode::Tolerances t;
  t.rtol = tol;
  t.atol = 1e-2 * tol;
  t.max_step = max_step;
  const double inf = std::numeric_limits<double>::infinity();
  t.magnitude_cap = ode::Vector::Constant(4, inf);
  if (metric.s_closed()) t.magnitude_cap(0) = metric.s_period();
  t.magnitude_cap(1) = metric.psi_period();
  return t;
}

Trajectory integrate(const InducedMetric2D& metric, const FlowState& state0, double length,
                     const FlowOptions& options) {
  Trajectory traj;
  traj.H0 = hamiltonian(metric, state0);
  if (!(traj.H0 > 0.0)) {
    throw Error(ErrorKind::SeedInfeasible, "flow needs H(state0) > 0");
  }
  traj.samples.push_back(state0);
  if (length == 0.0) return traj;

  GeodesicFlow flow(metric);
  ode::Vector y0(4);
  y0 << state0.q(0), state0.q(1), state0.p(0), state0.p(1);
  const ode::Tolerances tol = flow_tolerances(metric, options.tol, options.max_step);
  const double t_end = state0.tau + length;
  ode::Dop853 solver([&flow](double t, const ode::Vector& y, ode::Vector& dy) { flow(t, y, dy); }, state0.tau, y0,
                     t_end, tol);
  const double dir = length > 0.0 ? 1.0 : -1.0;
  double next_sample = state0.tau + dir * options.sample_interval;
  auto record = [&](double tau, const ode::Vector& y) {
    FlowState st;
    st.tau = tau;
    st.q = Vec2(y(0), y(1));
    st.p = Vec2(y(2), y(3));
    traj.samples.push_back(st);
  };
  auto monitor = [&](const ode::Vector& y) {
    const double H = energy(metric(y(0), y(1)), y(2), y(3));
    traj.max_energy_error = std::max(traj.max_energy_error, std::abs(H - traj.H0));
    traj.max_ps_drift = std::max(traj.max_ps_drift, std::abs(y(2) - state0.p(0)));
  };
  try {
    while (solver.step()) {
      monitor(solver.y());
      if (options.sample_interval <= 0.0) {
        record(solver.t(), solver.y());
        continue;
      }
      while (dir * (solver.t() - next_sample) >= 0.0) {
        record(next_sample, solver.dense_output()(next_sample));
        next_sample += dir * options.sample_interval;
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::StepFailure && !metric.s_closed()) {
      const double s = solver.y()(0);
      const double edge = 1e-6 * std::max(1.0, metric.s_length());
      if (s < edge || s > metric.s_length() - edge) {
        std::ostringstream os;
        os << "left domain: trajectory reached the end of the open tube near s=" << s << " at tau=" << solver.t();
        throw Error(ErrorKind::LeftDomain, os.str());
      }
    }
    throw;
  }
  return traj;
}

FlowState unit_speed_seed(const InducedMetric2D& metric, const Vec2& q0, double direction_angle) {
  check_domain(metric, q0(0));
  const MetricSample m = metric(q0(0), q0(1));
  inverse_metric(m);
  Eigen::Matrix2d g;
  g << m.E, m.F, m.F, m.G;
  const Vec2 e1(1.0 / std::sqrt(m.E), 0.0);
  const double w = std::sqrt(m.G - m.F * m.F / m.E);
  const Vec2 e2(-m.F / m.E / w, 1.0 / w);
  const Vec2 u = std::cos(direction_angle) * e1 + std::sin(direction_angle) * e2;
  FlowState st;
  st.q = q0;
  st.p = g * u;
  return st;
}

std::vector<Trajectory> integrate_batch(const InducedMetric2D& metric, const std::vector<FlowState>& seeds,
                                        double length, const FlowOptions& options, unsigned threads) {
  std::vector<Trajectory> out(seeds.size());
  detail::run_parallel(static_cast<int>(seeds.size()), threads, [&](int i) {
    out[static_cast<std::size_t>(i)] = integrate(metric, seeds[static_cast<std::size_t>(i)], length, options);
  });
  return out;
}

void write_trajectory_csv(const std::string& path, const Trajectory& trajectory, const InducedMetric2D& metric,
                          const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  }
  out.precision(17);
  for (const auto& line : header) out << "# " << line << "\n";
  out << "tau,s,psi,p_s,p_psi,H\n";
  for (const auto& st : trajectory.samples) {
    out << st.tau << "," << st.q(0) << "," << st.q(1) << "," << st.p(0) << "," << st.p(1) << ","
        << energy(metric(st.q(0), st.q(1)), st.p(0), st.p(1)) << "\n";
  }
  if (!out) {
    throw Error(ErrorKind::Io, "write failed for " + path);
  }
}

}  // namespace geotubes
