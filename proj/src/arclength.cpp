#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "curve_kinematics.hpp"
#include "geotubes/curves.hpp"
#include "geotubes/errors.hpp"

namespace geotubes {

ArcLengthTable::ArcLengthTable(const ParamCurve& curve, int n_samples) : curve_(curve) {
  if (n_samples < 16) {
    throw Error(ErrorKind::Config, "arc length table needs at least 16 samples, got " + std::to_string(n_samples));
  }
  if (!curve.chart || !curve.pos) {
    throw Error(ErrorKind::Config, "curve has no chart or position function");
  }
  double t_end = curve.t_max;
  if (curve.closed) {
    if (!(curve.period > 0.0)) {
      throw Error(ErrorKind::Config, "closed curve needs a positive period");
    }
    t_end = curve.t_min + curve.period;
    if (!curve.chart->same_point(curve.position(curve.t_min), curve.position(t_end), 1e-12)) {
      throw Error(ErrorKind::Config, "curve marked closed but x(t) != x(t + period)");
    }
  }
  if (!(t_end > curve.t_min)) {
    throw Error(ErrorKind::Config, "curve parameter range is empty");
  }
  const int n = n_samples;
  t_.resize(static_cast<std::size_t>(n) + 1);
  s_.resize(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) {
    t_[static_cast<std::size_t>(i)] = curve.t_min + (t_end - curve.t_min) * i / n;
  }
  for (int i = 0; i < 2 * n + 1; ++i) {
    const double t = curve.t_min + (t_end - curve.t_min) * i / (2.0 * n);
    if (!(metric_speed(curve, t) >= 1e-12)) {
      throw Error(ErrorKind::IrregularCurve, "irregular curve: vanishing speed at t=" + std::to_string(t));
    }
  }
  s_[0] = 0.0;
  for (int i = 1; i <= n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    s_[k] = s_[k - 1] + integrate(t_[k - 1], t_[k]);
  }
  length_ = s_.back();

  if (curve.closed) {
    const double P = curve.period;
    const double L = length_;
    auto residual = [&](double s) { return newton_t_of_s(s) - curve.t_min - P / L * s; };
    std::vector<double> values;
    int N = 32;
    for (int j = 0; j < N; ++j) values.push_back(residual(L * j / N));
    while (true) {
      FourierSeries fs = FourierSeries::interpolate(values, L);
      std::vector<double> refined(2 * static_cast<std::size_t>(N));
      double err = 0.0;
      for (int j = 0; j < 2 * N; ++j) {
        const auto k = static_cast<std::size_t>(j);
        refined[k] = (j % 2 == 0) ? values[k / 2] : residual(L * j / (2.0 * N));
        err = std::max(err, std::abs(fs(L * j / (2.0 * N)) - refined[k]));
      }
      if (err < 1e-13 * std::max(1.0, P)) {
        spectral_ = std::move(fs);
        break;
      }
      if (N >= 2048) {
        // Slowly converging parameterization; t_of_s falls back to Newton.
        break;
      }
      values = std::move(refined);
      N *= 2;
    }
  }
}

double ArcLengthTable::integrate(double t0, double t1) const {
  if (t1 == t0) return 0.0;
  auto speed = [this](double t) { return metric_speed(curve_, t); };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(speed, t0, t1, 12, 1e-12, &err);
}

double ArcLengthTable::s_of_t(double t) const {
  double shift = 0.0;
  if (curve_.closed) {
    const double k = std::floor((t - curve_.t_min) / curve_.period);
    t -= k * curve_.period;
    shift = k * length_;
  }
  t = std::clamp(t, t_.front(), t_.back());
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - t_.begin()) - 1));
  i = std::min(i, t_.size() - 2);
  return shift + s_[i] + integrate(t_[i], t);
}

double ArcLengthTable::newton_t_of_s(double s) const {
  auto it = std::upper_bound(s_.begin(), s_.end(), s);
  std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - s_.begin()) - 1));
  i = std::min(i, s_.size() - 2);
  double t = t_[i] + (t_[i + 1] - t_[i]) * (s - s_[i]) / (s_[i + 1] - s_[i]);
  for (int iter = 0; iter < 60; ++iter) {
    const double f = s_[i] + integrate(t_[i], t) - s;
    const double dt = f / metric_speed(curve_, t);
    t -= dt;
    if (std::abs(dt) <= 4e-16 * std::max(1.0, std::abs(t))) break;
  }
  return t;
}

double ArcLengthTable::t_of_s(double s) const {
  double shift = 0.0;
  if (curve_.closed) {
    const double k = std::floor(s / length_);
    s -= k * length_;
    shift = k * curve_.period;
  } else if (s < -1e-12 * length_ || s > length_ * (1.0 + 1e-12)) {
    throw Error(ErrorKind::Config, "arc length " + std::to_string(s) + " outside [0, " + std::to_string(length_) + "]");
  }
  if (spectral_) {
    return shift + curve_.t_min + curve_.period / length_ * s + (*spectral_)(s);
  }
  return shift + newton_t_of_s(std::clamp(s, 0.0, length_));
}

void ArcLengthTable::t_derivatives(double s, double& t, double& d1, double& d2, double& d3) const {
  if (spectral_) {
    double h, h1, h2, h3;
    double base = s;
    double shift = 0.0;
    if (curve_.closed) {
      const double k = std::floor(s / length_);
      base -= k * length_;
      shift = k * curve_.period;
    }
    spectral_->evaluate(base, h, h1, h2, h3);
    const double slope = curve_.period / length_;
    t = shift + curve_.t_min + slope * base + h;
    d1 = slope + h1;
    d2 = h2;
    d3 = h3;
    return;
  }
  // dt/ds = 1/v, d2t/ds2 = -v'/v^3, d3t/ds3 = (3 v'^2 - v v'')/v^5 with ' = d/dt.
  t = t_of_s(s);
  const detail::Kinematics k = detail::kinematics(curve_, t);
  const Mat3& g = k.geo.metric.g;
  const double v = k.speed;
  const double av = inner(g, k.A, k.vel);
  const double dv = av / v;
  const Vec3 dA = detail::covariant_jerk(curve_, k, t);
  const double ddv = (inner(g, dA, k.vel) + inner(g, k.A, k.A)) / v - av * av / (v * v * v);
  d1 = 1.0 / v;
  d2 = -dv / (v * v * v);
  d3 = (3.0 * dv * dv - v * ddv) / std::pow(v, 5);
}

ArcLengthTable arclength_reparam(const ParamCurve& curve, int n_samples) { return ArcLengthTable(curve, n_samples); }

ParamCurve arclength_parameterized(const ParamCurve& curve, const ArcLengthTable& table) {
  auto tab = std::make_shared<const ArcLengthTable>(table);
  Reparameterization r;
  r.phi = [tab](double s) { return tab->t_of_s(s); };
  r.d1 = [tab](double s) {
    double t, a, b, c;
    tab->t_derivatives(s, t, a, b, c);
    return a;
  };
  r.d2 = [tab](double s) {
    double t, a, b, c;
    tab->t_derivatives(s, t, a, b, c);
    return b;
  };
  r.d3 = [tab](double s) {
    double t, a, b, c;
    tab->t_derivatives(s, t, a, b, c);
    return c;
  };
  r.u_min = 0.0;
  r.u_max = table.length();
  ParamCurve out = reparameterize(curve, r);
  out.name = curve.name + "_arclength";
  out.closed = curve.closed;
  out.period = curve.closed ? table.length() : 0.0;
  return out;
}

}  // namespace geotubes
