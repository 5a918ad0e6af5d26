#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace geotubes {

// Truncated real Fourier series a0 + sum_k (a_k cos(k w x) + b_k sin(k w x)), w = 2 pi / period.
class FourierSeries {
 public:
  FourierSeries() = default;
  FourierSeries(double period, double a0, std::vector<double> a, std::vector<double> b);

  // Trigonometric interpolant of uniform samples y_j at x_j = j * period / N.
  // For even N the Nyquist mode is folded into a cosine term with half weight.
  static FourierSeries interpolate(std::span<const double> samples, double period);

  // Least-squares fit of the given order to scattered samples.
  static FourierSeries fit(std::span<const double> x, std::span<const double> y, int order, double period);

  double period() const { return period_; }
  int order() const { return static_cast<int>(a_.size()); }
  double a0() const { return a0_; }
  const std::vector<double>& cos_coefficients() const { return a_; }
  const std::vector<double>& sin_coefficients() const { return b_; }

  double operator()(double x) const;
  // Value and first two derivatives in one pass.
  void evaluate(double x, double& value, double& d1, double& d2) const;
  // Value and first three derivatives.
  void evaluate(double x, double& value, double& d1, double& d2, double& d3) const;

  // Largest |coefficient| among the top `count` modes; used as a truncation estimate.
  double tail(int count) const;

 private:
  double period_ = 1.0;
  double a0_ = 0.0;
  std::vector<double> a_;
  std::vector<double> b_;
};

// Matrix S with S * y = slopes of the C2 cubic spline through uniform samples y (spacing h),
// periodic or with natural end conditions. Depends only on n and h.
Eigen::MatrixXd spline_slope_matrix(int n, double h, bool periodic = true);

// Wraps x into [0, period).
double wrap_periodic(double x, double period);

}  // namespace geotubes
