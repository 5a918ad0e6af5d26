#include "geotubes/ode.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "dop853_coefficients.hpp"
#include "geotubes/errors.hpp"

namespace geotubes::ode {

namespace c = dop853;

namespace {
constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;
constexpr double kErrorExponent = -1.0 / 8.0;
}  // namespace

DenseSegment::DenseSegment(double t_old, double t_new, Vector y_old, Eigen::MatrixXd coeffs)
    : t_old_(t_old), h_(t_new - t_old), y_old_(std::move(y_old)), coeffs_(std::move(coeffs)) {}

Vector DenseSegment::operator()(double t) const {
  const double x = (t - t_old_) / h_;
  Vector y = Vector::Zero(y_old_.size());
  const Eigen::Index m = coeffs_.rows();
  for (Eigen::Index r = 0; r < m; ++r) {
    y += coeffs_.row(m - 1 - r).transpose();
    y *= (r % 2 == 0) ? x : (1.0 - x);
  }
  return y + y_old_;
}

double DenseSegment::component(double t, Eigen::Index i) const {
  const double x = (t - t_old_) / h_;
  double y = 0.0;
  const Eigen::Index m = coeffs_.rows();
  for (Eigen::Index r = 0; r < m; ++r) {
    y += coeffs_(m - 1 - r, i);
    y *= (r % 2 == 0) ? x : (1.0 - x);
  }
  return y + y_old_(i);
}

Dop853::Dop853(Rhs f, double t0, Vector y0, double t_bound, Tolerances tol)
    : rhs_(std::move(f)),
      tol_(tol),
      direction_(t_bound >= t0 ? 1 : -1),
      t_(t0),
      t_old_(t0),
      t_bound_(t_bound),
      y_(std::move(y0)) {
  const Eigen::Index n = y_.size();
  k_.resize(n, c::kStagesExtended);
  dydt_.resize(n);
  tmp_.resize(n);
  stage_.resize(n);
  y_old_ = y_;
  if (!y_.allFinite()) {
    throw Error(ErrorKind::StepFailure, "step failure: non-finite initial state");
  }
  eval(t_, y_, dydt_);
  finished_ = (t_ == t_bound_);
  h_abs_ = tol_.first_step > 0.0 ? tol_.first_step : initial_step();
}

void Dop853::eval(double t, const Vector& y, Vector& out) {
  rhs_(t, y, out);
  ++n_eval_;
}

double Dop853::initial_step() {
  // Hairer, Norsett & Wanner, Solving ODEs I, II.4.
  const Vector scale = error_scale(y_.array().abs());
  const double n = static_cast<double>(y_.size());
  const double d0 = (y_.array() / scale.array()).matrix().norm() / std::sqrt(n);
  const double d1 = (dydt_.array() / scale.array()).matrix().norm() / std::sqrt(n);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, std::abs(t_bound_ - t_));
  Vector y1 = y_ + h0 * direction_ * dydt_;
  Vector f1(y_.size());
  eval(t_ + h0 * direction_, y1, f1);
  const double d2 = ((f1 - dydt_).array() / scale.array()).matrix().norm() / std::sqrt(n) / h0;
  double h1;
  if (d1 <= 1e-15 && d2 <= 1e-15) {
    h1 = std::max(1e-6, h0 * 1e-3);
  } else {
    h1 = std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
  }
  return std::min({100.0 * h0, h1, tol_.max_step});
}

Vector Dop853::error_scale(Eigen::ArrayXd magnitude) const {
  if (tol_.magnitude_cap.size() == magnitude.size()) {
    magnitude = magnitude.min(tol_.magnitude_cap.array());
  }
  return (tol_.atol + magnitude * tol_.rtol).matrix();
}

double Dop853::error_norm(double h, const Vector& scale) const {
  const Eigen::Index n = y_.size();
  double err5 = 0.0;
  double err3 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double e5 = 0.0;
    double e3 = 0.0;
    for (int s = 0; s <= c::kStages; ++s) {
      e5 += k_(i, s) * c::kE5[s];
      e3 += k_(i, s) * c::kE3[s];
    }
    e5 /= scale(i);
    e3 /= scale(i);
    err5 += e5 * e5;
    err3 += e3 * e3;
  }
  if (err5 == 0.0 && err3 == 0.0) {
    return 0.0;
  }
  const double denom = err5 + 0.01 * err3;
  return std::abs(h) * err5 / std::sqrt(denom * static_cast<double>(n));
}

bool Dop853::step() {
  if (finished_) {
    return false;
  }
  if (n_steps_ >= tol_.max_steps) {
    throw Error(ErrorKind::StepFailure, "step failure: maximum number of steps exceeded");
  }
  const double min_step =
      10.0 * std::abs(std::nextafter(t_, direction_ * std::numeric_limits<double>::infinity()) - t_);
  double h_abs = std::clamp(h_abs_, min_step, tol_.max_step);
  bool rejected = false;
  Vector y_new(y_.size());
  Vector f_new(y_.size());
  while (true) {
    if (h_abs < min_step) {
      throw Error(ErrorKind::StepFailure, "step failure: step size underflow at t=" + std::to_string(t_));
    }
    double h = h_abs * direction_;
    double t_new = t_ + h;
    if (direction_ * (t_new - t_bound_) > 0) {
      t_new = t_bound_;
    }
    h = t_new - t_;
    h_abs = std::abs(h);

    k_.col(0) = dydt_;
    for (int s = 1; s < c::kStages; ++s) {
      stage_ = y_;
      for (int j = 0; j < s; ++j) {
        if (c::kA[s][j] != 0.0) {
          stage_.noalias() += (h * c::kA[s][j]) * k_.col(j);
        }
      }
      tmp_.setZero();
      eval(t_ + c::kC[s] * h, stage_, tmp_);
      k_.col(s) = tmp_;
    }
    y_new = y_;
    for (int s = 0; s < c::kStages; ++s) {
      if (c::kB[s] != 0.0) {
        y_new.noalias() += (h * c::kB[s]) * k_.col(s);
      }
    }
    eval(t_new, y_new, f_new);
    k_.col(c::kStages) = f_new;

    const bool finite = y_new.allFinite() && f_new.allFinite();
    double err = std::numeric_limits<double>::infinity();
    if (finite) {
      const Vector scale = error_scale(y_.array().abs().max(y_new.array().abs()));
      err = error_norm(h, scale);
    }
    if (err < 1.0) {
      double factor = err == 0.0 ? kMaxFactor : std::min(kMaxFactor, kSafety * std::pow(err, kErrorExponent));
      if (rejected) {
        factor = std::min(1.0, factor);
      }
      h_abs *= factor;
      t_old_ = t_;
      y_old_ = y_;
      h_prev_ = h;
      t_ = t_new;
      y_ = y_new;
      dydt_ = f_new;
      h_abs_ = h_abs;
      dense_valid_ = false;
      ++n_steps_;
      if (t_ == t_bound_) {
        finished_ = true;
      }
      return true;
    }
    const double shrink = finite ? std::max(kMinFactor, kSafety * std::pow(err, kErrorExponent)) : 0.25;
    h_abs *= shrink;
    rejected = true;
  }
}

const DenseSegment& Dop853::dense_output() {
  if (dense_valid_) {
    return dense_;
  }
  const double h = h_prev_;
  const Eigen::Index n = y_.size();
  for (int s = c::kStages + 1; s < c::kStagesExtended; ++s) {
    stage_ = y_old_;
    for (int j = 0; j < s; ++j) {
      if (c::kA[s][j] != 0.0) {
        stage_.noalias() += (h * c::kA[s][j]) * k_.col(j);
      }
    }
    tmp_.setZero();
    eval(t_old_ + c::kC[s] * h, stage_, tmp_);
    k_.col(s) = tmp_;
  }
  Eigen::MatrixXd coeffs(c::kInterpolatorPower, n);
  const Vector delta = y_ - y_old_;
  const Vector f_old = k_.col(0);
  coeffs.row(0) = delta.transpose();
  coeffs.row(1) = (h * f_old - delta).transpose();
  coeffs.row(2) = (2.0 * delta - h * (dydt_ + f_old)).transpose();
  for (int r = 0; r < 4; ++r) {
    Vector acc = Vector::Zero(n);
    for (int s = 0; s < c::kStagesExtended; ++s) {
      if (c::kD[r][s] != 0.0) {
        acc.noalias() += c::kD[r][s] * k_.col(s);
      }
    }
    coeffs.row(3 + r) = (h * acc).transpose();
  }
  dense_ = DenseSegment(t_old_, t_, y_old_, std::move(coeffs));
  dense_valid_ = true;
  return dense_;
}

}  // namespace geotubes::ode
