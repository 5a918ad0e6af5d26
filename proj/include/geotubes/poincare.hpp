#pragma once

#include <string>
#include <vector>

#include "geotubes/flow.hpp"
#include "geotubes/spaceform_tubes.hpp"

namespace geotubes {

// Tube of radius rho0 about the planar ellipse (a cos t, b sin t): E = (1 - k1(s) rho0 cos psi)^2,
// F = 0, G = rho0^2, with s-period the perimeter. a == b gives the exact torus metric.
InducedMetric2D ellipse_tube_metric(double a_semi, double b_semi, double rho0);

// Curvature of the ellipse as a trigonometric series in arc length.
FourierSeries ellipse_curvature_series(double a_semi, double b_semi);

struct SectionSeed {
  double psi0 = 0.0;
  double p_psi0 = 0.0;
};

struct SectionConfig {
  double section_period = 0.0;  // 0 uses the metric's s-period
  int direction = 1;            // required sign of p_s at a crossing
  int n_crossings = 400;
  std::vector<SectionSeed> seeds;
  double crossing_tol = 1e-10;
  double flow_tol = 1e-11;
  double max_length = 1e7;  // flow-length budget per seed
  unsigned threads = 0;
};

struct SectionPoint {
  double psi = 0.0;  // mod 2 pi
  double p_psi = 0.0;
  double p_s = 0.0;
  double H = 0.0;
  double s = 0.0;  // unwrapped s at the crossing
  int seed_index = 0;
  int crossing_index = 0;
};

struct SeedOutcome {
  int seed_index = 0;
  int crossings = 0;
  bool complete = false;
  double p_s0 = 0.0;
  double max_ps_drift = 0.0;
  std::string message;
};

struct SectionResult {
  std::vector<SectionPoint> points;  // seed-major, crossing-minor
  std::vector<SeedOutcome> seeds;
};

// Larger root p_s of H(q0, p) = 1/2 with p_psi fixed; throws SeedInfeasible if none is positive.
double seed_momentum(const InducedMetric2D& metric, const SectionSeed& seed);

SectionResult section(const InducedMetric2D& metric, const SectionConfig& config);

// Seeds psi0 = 0, p_psi0 in {-0.9, -0.7, ..., 0.9}.
std::vector<SectionSeed> figure_seed_grid();
// Seeds near the hyperbolic circle psi = 0 of the torus limit: psi0 = 0.05, p_psi0 in {+-0.02, +-0.05}.
std::vector<SectionSeed> near_separatrix_seeds();

struct RegularityOptions {
  int order = 16;
  double threshold = 1e-3;
  double momentum_scale = 1.0;
  int min_points = 50;
};

struct OrbitRegularity {
  int seed_index = 0;
  double residual = 0.0;
  bool regular = false;
  bool rotational = false;
  int points = 0;
};

// Fits a smooth closed curve to each orbit's section points and reports the RMS orthogonal misfit.
// Orbits with one sign of p_psi are fitted as p_psi^2 = Fourier(psi); others in polar form
// 1 / r^2 = Fourier(theta) about their centroid.
std::vector<OrbitRegularity> regularity_score(const std::vector<SectionPoint>& points,
                                              const RegularityOptions& options = {});

}  // namespace geotubes
