#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geotubes/fourier.hpp"
#include "geotubes/manifolds.hpp"

namespace geotubes {

// A parameterized curve t -> x(t) in a chart. Velocity, acceleration and jerk are
// optional; missing derivatives are obtained by finite differences of the next
// lower one.
struct ParamCurve {
  using PointFn = std::function<Vec3(double)>;

  std::string name;
  std::shared_ptr<const ChartMetric> chart;
  PointFn pos;
  PointFn vel;
  PointFn acc;
  PointFn jerk;
  double t_min = 0.0;
  double t_max = 1.0;
  bool closed = false;
  double period = 0.0;
  // Fallback normal direction used where the geodesic curvature vanishes.
  PointFn normal_hint;

  Vec3 position(double t) const;
  Vec3 velocity(double t) const;
  Vec3 acceleration(double t) const;
  Vec3 third_derivative(double t) const;
};

namespace catalog {
// All built-in curves use t in [0, 2 pi] unless noted.
ParamCurve circle(double radius);
ParamCurve helix(double a, double c);
// Helix of the same shape written in the cylindrical chart (r, theta, z) = (a, t, c t).
ParamCurve helix_cylindrical(double a, double c);
ParamCurve ellipse(double a_semi, double b_semi);
// Segment t -> (t, 0, 0) for t in [0, length].
ParamCurve straight_line(double length);
// (eta0, alpha t, beta t) on the round S^3.
ParamCurve hopf_curve(double alpha, double beta, double eta0);
// (eta0 + eta_amplitude sin t, alpha t, beta t) on the degenerate ellipsoid. Normal hint (1/q, 0, 0).
ParamCurve ellipsoid_curve(double a, double b, double alpha, double beta, double eta0, double eta_amplitude = 0.0);
}  // namespace catalog

// Composes the curve with t = phi(u); phi must be increasing. Derivatives of phi up to third order.
struct Reparameterization {
  std::function<double(double)> phi;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::function<double(double)> d3;
  double u_min = 0.0;
  double u_max = 1.0;
};
ParamCurve reparameterize(const ParamCurve& curve, const Reparameterization& r);

// Metric speed |x'(t)|_g.
double metric_speed(const ParamCurve& curve, double t);

// Arc length s(t) = int_{t_min}^t |x'|_g with inverse lookup.
class ArcLengthTable {
 public:
  ArcLengthTable(const ParamCurve& curve, int n_samples = 64);

  double length() const { return length_; }
  const std::vector<double>& t_samples() const { return t_; }
  const std::vector<double>& s_samples() const { return s_; }

  double s_of_t(double t) const;
  // For closed curves s is taken modulo L and t shifted by whole periods.
  double t_of_s(double s) const;
  // dt/ds, d2t/ds2 and d3t/ds3 at arc length s.
  void t_derivatives(double s, double& t, double& d1, double& d2, double& d3) const;

  // Spectral model of t(s) - (period / L) s for closed curves.
  const std::optional<FourierSeries>& spectral_inverse() const { return spectral_; }

 private:
  double integrate(double t0, double t1) const;
  double newton_t_of_s(double s) const;

  ParamCurve curve_;
  std::vector<double> t_;
  std::vector<double> s_;
  double length_ = 0.0;
  std::optional<FourierSeries> spectral_;
};

ArcLengthTable arclength_reparam(const ParamCurve& curve, int n_samples);

// Curve re-expressed in its arc-length parameter, s in [0, L].
ParamCurve arclength_parameterized(const ParamCurve& curve, const ArcLengthTable& table);

struct FrenetData {
  double s = 0.0;
  double t = 0.0;
  Vec3 x = Vec3::Zero();
  Vec3 T = Vec3::Zero();
  Vec3 N = Vec3::Zero();
  Vec3 B = Vec3::Zero();
  double k1 = 0.0;
  double k2 = 0.0;
  bool from_normal_hint = false;
};

struct FrenetOptions {
  double k1_min = 1e-8;
  // Use curve.normal_hint where k1 < k1_min instead of failing.
  bool allow_normal_hint = false;
  int arclength_samples = 64;
};

// Frame and curvature scalars at parameter t (s filled from the table when given).
FrenetData frenet_at_parameter(const ParamCurve& curve, double t, const FrenetOptions& options = {});

std::vector<FrenetData> frenet_evolve(const ParamCurve& curve, const std::vector<double>& s_values,
                                      const FrenetOptions& options = {});
std::vector<FrenetData> frenet_evolve(const ParamCurve& curve, const ArcLengthTable& table,
                                      const std::vector<double>& s_values, const FrenetOptions& options = {});

struct CurvatureScalars {
  double k1 = 0.0;
  double k2 = 0.0;
};
CurvatureScalars curvature_scalars(const ParamCurve& curve, double s, const FrenetOptions& options = {});

struct ConstancyResult {
  bool constant = false;
  double max_deviation = 0.0;
};
ConstancyResult constancy_check(const ParamCurve& curve, int n_samples, double tol,
                                const FrenetOptions& options = {});

}  // namespace geotubes
