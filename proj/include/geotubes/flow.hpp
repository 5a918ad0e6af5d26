#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "geotubes/ode.hpp"
#include "geotubes/spaceform_tubes.hpp"

namespace geotubes {

using Vec2 = Eigen::Vector2d;

struct FlowState {
  double tau = 0.0;
  Vec2 q = Vec2::Zero();  // (s, psi); s is not wrapped
  Vec2 p = Vec2::Zero();  // (p_s, p_psi)
};

struct Trajectory {
  std::vector<FlowState> samples;
  double H0 = 0.0;
  double max_energy_error = 0.0;
  double max_ps_drift = 0.0;
};

struct FlowOptions {
  double tol = 1e-11;
  double max_step = std::numeric_limits<double>::infinity();
  // Spacing of recorded samples in tau; 0 records every accepted step.
  double sample_interval = 0.0;
};

// Inverse of [[E, F], [F, G]]; throws DegenerateMetric if EG - F^2 <= 1e-14.
Eigen::Matrix2d inverse_metric(const MetricSample& m);

double hamiltonian(const InducedMetric2D& metric, const FlowState& state);

// Hamilton's equations for y = (s, psi, p_s, p_psi):
// q' = g^-1 p, p_k' = 1/2 q'^T (d_k g) q'.
class GeodesicFlow {
 public:
  explicit GeodesicFlow(const InducedMetric2D& metric) : metric_(metric) {}
  void operator()(double tau, const ode::Vector& y, ode::Vector& dy) const;
  const InducedMetric2D& metric() const { return metric_; }

 private:
  const InducedMetric2D& metric_;
};

// ODE tolerances for the flow: rtol = tol, atol = tol / 100, with the relative scale of
// periodic coordinates capped at their period.
ode::Tolerances flow_tolerances(const InducedMetric2D& metric, double tol,
                                double max_step = std::numeric_limits<double>::infinity());

// Integrates for |length| in tau; a negative length integrates backwards.
Trajectory integrate(const InducedMetric2D& metric, const FlowState& state0, double length,
                     const FlowOptions& options = {});

// Unit-speed covector at q0 whose velocity makes `direction_angle` with d/ds in the
// orthonormal frame (d_s / sqrt(E), (d_psi - F/E d_s) / sqrt(G - F^2/E)).
FlowState unit_speed_seed(const InducedMetric2D& metric, const Vec2& q0, double direction_angle);

// Independent trajectories; output in seed order.
std::vector<Trajectory> integrate_batch(const InducedMetric2D& metric, const std::vector<FlowState>& seeds,
                                        double length, const FlowOptions& options = {}, unsigned threads = 0);

void write_trajectory_csv(const std::string& path, const Trajectory& trajectory, const InducedMetric2D& metric,
                          const std::vector<std::string>& header = {});

}  // namespace geotubes
