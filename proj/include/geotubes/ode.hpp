#pragma once

#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace geotubes::ode {

using Vector = Eigen::VectorXd;

// dy/dt = f(t, y). The output vector is pre-sized by the integrator.
using Rhs = std::function<void(double t, const Vector& y, Vector& dydt)>;

struct Tolerances {
  double rtol = 1e-10;
  double atol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  double first_step = 0.0;  // 0 selects automatically
  long max_steps = 50'000'000;
  // Optional per-component cap on |y| in the relative error scale; used for
  // angular coordinates, whose size carries no information. Empty means no cap.
  Vector magnitude_cap;
};

// Seventh-order continuous extension of one accepted step.
class DenseSegment {
 public:
  DenseSegment() = default;
  DenseSegment(double t_old, double t_new, Vector y_old, Eigen::MatrixXd coeffs);

  double t_old() const { return t_old_; }
  double t_new() const { return t_old_ + h_; }

  Vector operator()(double t) const;
  // Single component, avoids allocating a full state.
  double component(double t, Eigen::Index i) const;

 private:
  double t_old_ = 0.0;
  double h_ = 0.0;
  Vector y_old_;
  Eigen::MatrixXd coeffs_;  // rows = interpolator power, cols = n
};

// Adaptive explicit Runge-Kutta 8(5,3) of Dormand and Prince with dense output.
// Integrates from t0 towards t_bound (either direction), one accepted step per
// call to step().
class Dop853 {
 public:
  Dop853(Rhs f, double t0, Vector y0, double t_bound, Tolerances tol = {});

  // Advances one accepted step. Returns false once t_bound has been reached.
  // Throws Error(StepFailure) if the step size underflows, the state becomes
  // non-finite, or max_steps is exceeded.
  bool step();

  bool finished() const { return finished_; }
  double t() const { return t_; }
  double t_old() const { return t_old_; }
  const Vector& y() const { return y_; }
  const Vector& y_old() const { return y_old_; }
  const Vector& derivative() const { return dydt_; }
  long steps_taken() const { return n_steps_; }
  long rhs_evaluations() const { return n_eval_; }

  // Dense output over the last accepted step [t_old, t]. Evaluates three extra
  // stages the first time it is requested for a given step.
  const DenseSegment& dense_output();

 private:
  void eval(double t, const Vector& y, Vector& out);
  double initial_step();
  Vector error_scale(Eigen::ArrayXd magnitude) const;
  double error_norm(double h, const Vector& scale) const;

  Rhs rhs_;
  Tolerances tol_;
  int direction_;
  double t_;
  double t_old_;
  double t_bound_;
  double h_abs_ = 0.0;
  double h_prev_ = 0.0;
  Vector y_;
  Vector y_old_;
  Vector dydt_;
  Eigen::MatrixXd k_;  // n x 16 stage derivatives
  Vector tmp_;
  Vector stage_;
  bool finished_ = false;
  bool dense_valid_ = false;
  DenseSegment dense_;
  long n_steps_ = 0;
  long n_eval_ = 0;
};

}  // namespace geotubes::ode
