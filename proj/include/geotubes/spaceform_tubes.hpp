#pragma once

#include <functional>
#include <string>

#include "geotubes/fourier.hpp"
#include "geotubes/manifolds.hpp"

namespace geotubes {

// Cross-section of a (generalized) tube: the normal-plane curve rho0 (f(psi), g(psi)).
class TubeProfile {
 public:
  enum class Kind { Circular, Generalized };

  static TubeProfile circular(double rho0);
  // f, g given as truncated Fourier series in psi (period 2 pi).
  static TubeProfile fourier(double rho0, FourierSeries f, FourierSeries g);
  // f = (1 + amp cos(lobes psi)) cos psi, g = (1 + amp cos(lobes psi)) sin psi.
  static TubeProfile lobed(double rho0, double amp, int lobes);

  Kind kind() const { return kind_; }
  double rho0() const { return rho0_; }
  const FourierSeries& f_series() const { return f_; }
  const FourierSeries& g_series() const { return g_; }

  struct Values {
    double f, f1, f2;
    double g, g1, g2;
  };
  Values values(double psi) const;

  // Polar form r = rho0 sqrt(f^2 + g^2), phi = atan2(g, f) with psi-derivatives.
  struct Polar {
    double r, r1, r2;
    double phi, phi1, phi2;
  };
  Polar polar(double psi) const;

  // Throws ProfileNotSimple if (f, g) hits the origin or self-intersects on an n-point grid.
  void validate(int n_grid = 512) const;

 private:
  Kind kind_ = Kind::Circular;
  double rho0_ = 0.0;
  FourierSeries f_;
  FourierSeries g_;
};

// First fundamental form of a tube over (s, psi) with first partials.
struct MetricSample {
  double E = 0.0, F = 0.0, G = 0.0;
  double E_s = 0.0, F_s = 0.0, G_s = 0.0;
  double E_psi = 0.0, F_psi = 0.0, G_psi = 0.0;
};

class InducedMetric2D {
 public:
  using Evaluator = std::function<MetricSample(double s, double psi)>;

  // s_period > 0 for closed curves; otherwise s ranges over [0, s_length].
  InducedMetric2D(Evaluator eval, double s_period, double s_length, bool s_independent, std::string description);

  MetricSample operator()(double s, double psi) const { return eval_(s, psi); }
  double E(double s, double psi) const { return eval_(s, psi).E; }
  double F(double s, double psi) const { return eval_(s, psi).F; }
  double G(double s, double psi) const { return eval_(s, psi).G; }

  double s_period() const { return s_period_; }
  double s_length() const { return s_length_; }
  bool s_closed() const { return s_period_ > 0.0; }
  double psi_period() const;
  bool s_independent() const { return s_independent_; }
  const std::string& description() const { return description_; }

  // Throws TubeDegenerate unless E > 0, G > 0 and EG - F^2 > 0 on an n_s x n_psi grid.
  void validate(int n_s = 64, int n_psi = 64) const;

 private:
  Evaluator eval_;
  double s_period_;
  double s_length_;
  bool s_independent_;
  std::string description_;
};

// Radial scale functions of a space form: F'' = -K0 F with F(0) = 1, F'(0) = 0 and G(0) = 0, G'(0) = 1.
struct SpaceFormScale {
  double F0 = 1.0;
  double G0 = 0.0;
};
SpaceFormScale space_form_scale(SpaceForm k0, double rho);

// J(rho) with D^2J/drho^2 = -K0 J_perp, J(0) = J0, J'(0) = J1, in a parallel frame.
Vec3 spaceform_jacobi(SpaceForm k0, double rho, const Vec3& J0, const Vec3& J1, const Vec3& gamma_dir);

// Curvature scalars along the curve as functions of arc length.
struct CurvatureFunctions {
  std::function<double(double)> k1;
  std::function<double(double)> k2;
  // Optional s-derivatives; finite differences are used when absent.
  std::function<double(double)> dk1;
  std::function<double(double)> dk2;
  double s_period = 0.0;
  double s_length = 0.0;
  bool constant = false;

  static CurvatureFunctions constants(double k1, double k2, double s_period);
};

InducedMetric2D circular_tube_metric(SpaceForm k0, const CurvatureFunctions& k, double rho0);
InducedMetric2D generalized_tube_metric(SpaceForm k0, const CurvatureFunctions& k, const TubeProfile& profile);
InducedMetric2D generalized_tube_metric(SpaceForm k0, double k1, double k2, const TubeProfile& profile,
                                        double s_period);

// Point evaluations shared with the numeric path and the tests.
MetricSample circular_tube_sample(SpaceForm k0, double k1, double k2, double dk1, double dk2, double rho0, double psi);
MetricSample generalized_tube_sample(SpaceForm k0, double k1, double k2, double dk1, double dk2,
                                     const TubeProfile& profile, double psi);

}  // namespace geotubes
