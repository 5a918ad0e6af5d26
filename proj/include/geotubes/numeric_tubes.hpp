#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geotubes/curves.hpp"
#include "geotubes/ode.hpp"
#include "geotubes/spaceform_tubes.hpp"

namespace geotubes {

using Vec6 = Eigen::Matrix<double, 6, 1>;

// State along a radial geodesic rho -> Gamma(rho) leaving the curve at angle psi.
struct RadialState {
  double rho = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 xdot = Vec3::Zero();
  // Columns: transported T, N, B in chart components.
  Mat3 frame = Mat3::Identity();
  // (t_s, n_s, b_s, t_psi, n_psi, b_psi) in the transported frame, and their rho-derivatives.
  Vec6 jacobi = Vec6::Zero();
  Vec6 jacobi_dot = Vec6::Zero();
  bool has_jacobi = false;

  Vec3 J_s() const { return frame * jacobi.head<3>(); }
  Vec3 J_psi() const { return frame * jacobi.tail<3>(); }
};

struct RadialOptions {
  ode::Tolerances tolerances{1e-10, 1e-12};
  // Output radii (ascending, within [0, rho_max]); empty records every accepted step.
  std::vector<double> output_rho;
};

std::vector<RadialState> radial_geodesic(const ChartMetric& chart, const FrenetData& start, double psi,
                                         double rho_max, const RadialOptions& options = {});

// Geodesic, parallel frame and the two Jacobi fields integrated together up to rho0.
RadialState transport_frame_and_jacobi(const ChartMetric& chart, const FrenetData& start, double psi, double rho0,
                                       const RadialOptions& options = {});
// Same, with output at several radii.
std::vector<RadialState> transport_frame_and_jacobi_profile(const ChartMetric& chart, const FrenetData& start,
                                                            double psi, double rho_max,
                                                            const RadialOptions& options = {});

// Induced metric sampled on a uniform (s, psi) grid. Rows index s, columns psi.
struct MetricGrid {
  int n_s = 0;
  int n_psi = 0;
  double s_length = 0.0;  // L
  bool s_closed = true;
  Eigen::MatrixXd E, F, G;
  std::vector<std::string> header;  // provenance lines, without the leading '#'

  double s_at(int i) const;
  double psi_at(int j) const;
  // Largest change of E, F, G across s for fixed psi, relative to max(1, |value|).
  double s_variation() const;
};

struct NumericTubeOptions {
  int n_s = 64;
  int n_psi = 64;
  RadialOptions radial;
  FrenetOptions frenet;
  int arclength_samples = 64;
  // Grid data whose s-variation is below this collapse to a psi-only interpolant.
  double s_independence_tol = 1e-8;
  unsigned threads = 0;  // 0 selects hardware concurrency
};

MetricGrid sample_tube_metric(const ChartMetric& chart, const ParamCurve& curve, const TubeProfile& profile,
                              const NumericTubeOptions& options = {});

// Interpolant over a sampled grid: trigonometric in psi when the data are s-independent to tol,
// bicubic Hermite with spline slopes (periodic in psi, and in s for closed curves) otherwise.
InducedMetric2D interpolate_metric(const MetricGrid& grid, double s_independence_tol = 1e-8);

InducedMetric2D tube_metric_numeric(const ChartMetric& chart, const ParamCurve& curve, const TubeProfile& profile,
                                    const NumericTubeOptions& options = {});

void write_metric_csv(const std::string& path, const MetricGrid& grid);
MetricGrid read_metric_csv(const std::string& path);

struct SIndependenceReport {
  // One entry per (s0, psi, rho) sample.
  std::vector<double> sectional_derivative;
  std::vector<double> coordinate_derivative;
  double max_sectional_derivative = 0.0;
  double max_coordinate_derivative = 0.0;
  double step = 0.0;
  double tolerance = 0.0;
  bool verdict = false;
};

struct CertificateOptions {
  double tolerance = 1e-7;
  double step_fraction = 1e-3;  // s-step as a fraction of L
  int n_psi = 4;
  int n_rho = 4;
  RadialOptions radial;
  FrenetOptions frenet;
  int arclength_samples = 64;
};

SIndependenceReport s_independence_certificate(const ChartMetric& chart, const ParamCurve& curve, double rho0,
                                               int samples, const CertificateOptions& options = {});

}  // namespace geotubes
