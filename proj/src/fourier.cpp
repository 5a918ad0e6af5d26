#include "geotubes/fourier.hpp"

#include <cmath>
#include <numbers>

#include "geotubes/errors.hpp"

namespace geotubes {

FourierSeries::FourierSeries(double period, double a0, std::vector<double> a, std::vector<double> b)
    : period_(period), a0_(a0), a_(std::move(a)), b_(std::move(b)) {
  if (a_.size() != b_.size()) {
    throw Error(ErrorKind::Config, "fourier series: cosine and sine coefficient lists differ in length");
  }
}

FourierSeries FourierSeries::interpolate(std::span<const double> samples, double period) {
  const int n = static_cast<int>(samples.size());
  if (n < 1) {
    throw Error(ErrorKind::InsufficientPoints, "insufficient points: empty sample set for interpolation");
  }
  const int m = n / 2;
  std::vector<double> a(static_cast<std::size_t>(m), 0.0);
  std::vector<double> b(static_cast<std::size_t>(m), 0.0);
  double a0 = 0.0;
  for (double y : samples) a0 += y;
  a0 /= n;
  for (int k = 1; k <= m; ++k) {
    double ck = 0.0;
    double sk = 0.0;
    for (int j = 0; j < n; ++j) {
      // Exact angle reduction keeps the transform accurate for large k*j.
      const double theta = 2.0 * std::numbers::pi * static_cast<double>((static_cast<long>(k) * j) % n) / n;
      ck += samples[static_cast<std::size_t>(j)] * std::cos(theta);
      sk += samples[static_cast<std::size_t>(j)] * std::sin(theta);
    }
    double scale = 2.0 / n;
    if (n % 2 == 0 && k == m) {
      scale = 1.0 / n;
      sk = 0.0;
    }
    a[static_cast<std::size_t>(k - 1)] = scale * ck;
    b[static_cast<std::size_t>(k - 1)] = scale * sk;
  }
  return FourierSeries(period, a0, std::move(a), std::move(b));
}

FourierSeries FourierSeries::fit(std::span<const double> x, std::span<const double> y, int order, double period) {
  const int n = static_cast<int>(x.size());
  const int cols = 2 * order + 1;
  if (n < cols || y.size() != x.size()) {
    throw Error(ErrorKind::InsufficientPoints,
                "insufficient points: " + std::to_string(n) + " samples for a Fourier fit of order " +
                    std::to_string(order));
  }
  const double w = 2.0 * std::numbers::pi / period;
  Eigen::MatrixXd design(n, cols);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (int k = 1; k <= order; ++k) {
      design(i, 2 * k - 1) = std::cos(k * w * x[static_cast<std::size_t>(i)]);
      design(i, 2 * k) = std::sin(k * w * x[static_cast<std::size_t>(i)]);
    }
    rhs(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd c = design.colPivHouseholderQr().solve(rhs);
  std::vector<double> a(static_cast<std::size_t>(order));
  std::vector<double> b(static_cast<std::size_t>(order));
  for (int k = 1; k <= order; ++k) {
    a[static_cast<std::size_t>(k - 1)] = c(2 * k - 1);
    b[static_cast<std::size_t>(k - 1)] = c(2 * k);
  }
  return FourierSeries(period, c(0), std::move(a), std::move(b));
}

double FourierSeries::operator()(double x) const {
  double v, d1, d2;
  evaluate(x, v, d1, d2);
  return v;
}

void FourierSeries::evaluate(double x, double& value, double& d1, double& d2) const {
  double d3;
  evaluate(x, value, d1, d2, d3);
}

void FourierSeries::evaluate(double x, double& value, double& d1, double& d2, double& d3) const {
  const double w = 2.0 * std::numbers::pi / period_;
  const double c1 = std::cos(w * x);
  const double s1 = std::sin(w * x);
  double ck = 1.0;
  double sk = 0.0;
  value = a0_;
  d1 = d2 = d3 = 0.0;
  const std::size_t m = a_.size();
  for (std::size_t i = 0; i < m; ++i) {
    // Angle addition recurrence for cos(k w x), sin(k w x).
    const double cn = ck * c1 - sk * s1;
    const double sn = sk * c1 + ck * s1;
    ck = cn;
    sk = sn;
    const double kw = static_cast<double>(i + 1) * w;
    const double u = a_[i] * ck + b_[i] * sk;
    const double du = -a_[i] * sk + b_[i] * ck;
    value += u;
    d1 += kw * du;
    d2 -= kw * kw * u;
    d3 -= kw * kw * kw * du;
  }
}

double FourierSeries::tail(int count) const {
  double t = 0.0;
  const int m = order();
  for (int k = std::max(0, m - count); k < m; ++k) {
    t = std::max({t, std::abs(a_[static_cast<std::size_t>(k)]), std::abs(b_[static_cast<std::size_t>(k)])});
  }
  return t;
}

Eigen::MatrixXd spline_slope_matrix(int n, double h, bool periodic) {
  if (n < 2 || (periodic && n < 3)) {
    throw Error(ErrorKind::InsufficientPoints, "insufficient points: spline needs at least 3 nodes");
  }
  // d_{i-1} + 4 d_i + d_{i+1} = 3 (y_{i+1} - y_{i-1}) / h in the interior.
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (!periodic && (i == 0 || i == n - 1)) {
      const int inner = (i == 0) ? 1 : n - 2;
      const double sign = (i == 0) ? 1.0 : -1.0;
      lhs(i, i) = 2.0;
      lhs(i, inner) = 1.0;
      rhs(i, inner) += sign * 3.0 / h;
      rhs(i, i) -= sign * 3.0 / h;
      continue;
    }
    lhs(i, i) += 4.0;
    lhs(i, (i + 1) % n) += 1.0;
    lhs(i, (i + n - 1) % n) += 1.0;
    rhs(i, (i + 1) % n) += 3.0 / h;
    rhs(i, (i + n - 1) % n) -= 3.0 / h;
  }
  return lhs.partialPivLu().solve(rhs);
}

double wrap_periodic(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r = 0.0;
  return r;
}

}  // namespace geotubes
