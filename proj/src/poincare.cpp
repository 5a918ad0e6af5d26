#include "geotubes/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "geotubes/curves.hpp"
#include "geotubes/errors.hpp"
#include "parallel.hpp"

namespace geotubes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double ellipse_curvature(double a, double b, double t) {
  const double s = std::sin(t);
  const double c = std::cos(t);
  return a * b / std::pow(a * a * s * s + b * b * c * c, 1.5);
}

// Minimizes f on [lo, hi] by golden-section search.
template <class Fn>
double golden_minimum(Fn f, double lo, double hi, int iterations = 100) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - r * (hi - lo);
  double x2 = lo + r * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iterations && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(x2);
    }
  }
  return std::min(f1, f2);
}

// RMS distance in the (psi, p) cylinder from points to the closed curve u -> curve(u), u in [0, 2 pi).
template <class Curve>
double rms_distance(const std::vector<Vec2>& pts, Curve curve) {
  constexpr int kCoarse = 2048;
  std::vector<Vec2> samples(kCoarse);
  for (int k = 0; k < kCoarse; ++k) samples[static_cast<std::size_t>(k)] = curve(kTwoPi * k / kCoarse);
  auto dist2 = [](const Vec2& c, const Vec2& p) {
    const double dpsi = std::remainder(c(0) - p(0), kTwoPi);
    const double dp = c(1) - p(1);
    return dpsi * dpsi + dp * dp;
  };
  double sum = 0.0;
  for (const Vec2& p : pts) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < kCoarse; ++k) {
      const double d = dist2(samples[static_cast<std::size_t>(k)], p);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    const double h = kTwoPi / kCoarse;
    const double u0 = kTwoPi * best / kCoarse;
    const double refined = golden_minimum([&](double u) { return dist2(curve(u), p); }, u0 - h, u0 + h);
    sum += std::min(best_d, refined);
  }
  return std::sqrt(sum / static_cast<double>(pts.size()));
}

}  // namespace

FourierSeries ellipse_curvature_series(double a_semi, double b_semi) {
  const ParamCurve curve = catalog::ellipse(a_semi, b_semi);
  const ArcLengthTable table(curve, 64);
  const double L = table.length();
  auto k_at = [&](double s) { return ellipse_curvature(a_semi, b_semi, table.t_of_s(s)); };
  const double scale = std::max(a_semi / (b_semi * b_semi), b_semi / (a_semi * a_semi));
  std::vector<double> values;
  int n = 32;
  for (int j = 0; j < n; ++j) values.push_back(k_at(L * j / n));
  while (true) {
    FourierSeries fs = FourierSeries::interpolate(values, L);
    std::vector<double> refined(2 * static_cast<std::size_t>(n));
    double err = 0.0;
    for (int j = 0; j < 2 * n; ++j) {
      const auto k = static_cast<std::size_t>(j);
      refined[k] = (j % 2 == 0) ? values[k / 2] : k_at(L * j / (2.0 * n));
      err = std::max(err, std::abs(fs(L * j / (2.0 * n)) - refined[k]));
    }
    if (err < 1e-14 * scale || n >= 4096) {
      return fs;
    }
    values = std::move(refined);
    n *= 2;
  }
}

InducedMetric2D ellipse_tube_metric(double a_semi, double b_semi, double rho0) {
  if (!(a_semi > 0.0) || !(b_semi > 0.0) || !(rho0 > 0.0)) {
    throw Error(ErrorKind::Config, "ellipse tube needs positive semi-axes and radius");
  }
  const double k_max = std::max(a_semi / (b_semi * b_semi), b_semi / (a_semi * a_semi));
  if (!(rho0 * k_max < 1.0)) {
    std::ostringstream os;
    os << "tube degenerate: rho0 * max k1 = " << rho0 * k_max << " >= 1";
    throw Error(ErrorKind::TubeDegenerate, os.str());
  }
  if (a_semi == b_semi) {
    const double L = kTwoPi * a_semi;
    return circular_tube_metric(SpaceForm::Flat, CurvatureFunctions::constants(1.0 / a_semi, 0.0, L), rho0);
  }
  auto series = std::make_shared<const FourierSeries>(ellipse_curvature_series(a_semi, b_semi));
  CurvatureFunctions k;
  k.k1 = [series](double s) { return (*series)(s); };
  k.dk1 = [series](double s) {
    double v, d1, d2;
    series->evaluate(s, v, d1, d2);
    return d1;
  };
  k.k2 = [](double) { return 0.0; };
  k.dk2 = [](double) { return 0.0; };
  k.s_period = series->period();
  k.s_length = series->period();
  k.constant = false;
  return circular_tube_metric(SpaceForm::Flat, k, rho0);
}

double seed_momentum(const InducedMetric2D& metric, const SectionSeed& seed) {
  const MetricSample m = metric(0.0, seed.psi0);
  const Eigen::Matrix2d gi = inverse_metric(m);
  // g^ss p_s^2 + 2 g^sp p_psi p_s + g^pp p_psi^2 - 1 = 0
  const double A = gi(0, 0);
  const double B = 2.0 * gi(0, 1) * seed.p_psi0;
  const double C = gi(1, 1) * seed.p_psi0 * seed.p_psi0 - 1.0;
  const double disc = B * B - 4.0 * A * C;
  const double root = disc >= 0.0 ? (-B + std::sqrt(disc)) / (2.0 * A) : -1.0;
  if (!(disc >= 0.0) || !(root > 0.0)) {
    std::ostringstream os;
    os << "seed infeasible: no p_s > 0 with H = 1/2 at (psi, p_psi) = (" << seed.psi0 << ", " << seed.p_psi0 << ")";
    throw Error(ErrorKind::SeedInfeasible, os.str());
  }
  return root;
}

SectionResult section(const InducedMetric2D& metric, const SectionConfig& config) {
  const double L = config.section_period > 0.0 ? config.section_period : metric.s_period();
  if (!(L > 0.0)) {
    throw Error(ErrorKind::Config, "section needs a periodic metric or an explicit section period");
  }
  if (config.n_crossings < 1) {
    throw Error(ErrorKind::Config, "section.n_crossings must be >= 1");
  }
  if (config.direction != 1 && config.direction != -1) {
    throw Error(ErrorKind::Config, "section.direction must be +1 or -1");
  }
  const int n_seeds = static_cast<int>(config.seeds.size());
  std::vector<double> p_s0(config.seeds.size());
  for (int i = 0; i < n_seeds; ++i) {
    p_s0[static_cast<std::size_t>(i)] = seed_momentum(metric, config.seeds[static_cast<std::size_t>(i)]);
  }
  std::vector<std::vector<SectionPoint>> per_seed(config.seeds.size());
  std::vector<SeedOutcome> outcomes(config.seeds.size());

  detail::run_parallel(n_seeds, config.threads, [&](int idx) {
    const auto ui = static_cast<std::size_t>(idx);
    const SectionSeed& seed = config.seeds[ui];
    SeedOutcome& outcome = outcomes[ui];
    outcome.seed_index = idx;
    outcome.p_s0 = p_s0[ui];
    std::vector<SectionPoint>& pts = per_seed[ui];
    GeodesicFlow flow(metric);
    ode::Vector y0(4);
    y0 << 0.0, seed.psi0, p_s0[ui], seed.p_psi0;
    const ode::Tolerances tol = flow_tolerances(metric, config.flow_tol);
    try {
      ode::Dop853 solver([&flow](double t, const ode::Vector& y, ode::Vector& dy) { flow(t, y, dy); }, 0.0, y0,
                         config.max_length, tol);
      double next_level = L;
      while (static_cast<int>(pts.size()) < config.n_crossings && solver.step()) {
        const double s_new = solver.y()(0);
        outcome.max_ps_drift = std::max(outcome.max_ps_drift, std::abs(solver.y()(2) - p_s0[ui]));
        while (s_new >= next_level && static_cast<int>(pts.size()) < config.n_crossings) {
          const ode::DenseSegment& dense = solver.dense_output();
          const double level = next_level;
          auto f = [&](double tau) { return dense.component(tau, 0) - level; };
          double tau = solver.t();
          if (s_new != level) {
            const double fa = f(solver.t_old());
            const double fb = s_new - level;
            boost::uintmax_t iters = 200;
            const auto bracket = boost::math::tools::toms748_solve(
                f, solver.t_old(), solver.t(), fa, fb, boost::math::tools::eps_tolerance<double>(52), iters);
            tau = 0.5 * (bracket.first + bracket.second);
          }
          const ode::Vector y = (tau == solver.t()) ? solver.y() : dense(tau);
          if (std::abs(y(0) - level) > config.crossing_tol) {
            throw Error(ErrorKind::StepFailure, "crossing refinement did not reach crossing_tol");
          }
          if (config.direction * y(2) > 0.0) {
            SectionPoint pt;
            pt.psi = wrap_periodic(y(1), kTwoPi);
            pt.p_psi = y(3);
            pt.p_s = y(2);
            pt.s = y(0);
            pt.H = hamiltonian(metric, FlowState{tau, Vec2(y(0), y(1)), Vec2(y(2), y(3))});
            pt.seed_index = idx;
            pt.crossing_index = static_cast<int>(pts.size());
            pts.push_back(pt);
          }
          next_level += L;
        }
        next_level = L * (std::floor(s_new / L) + 1.0);
      }
    } catch (const Error& e) {
      outcome.message = e.what();
    }
    outcome.crossings = static_cast<int>(pts.size());
    outcome.complete = outcome.crossings == config.n_crossings;
    if (!outcome.complete && outcome.message.empty()) {
      outcome.message = "flow length budget exhausted";
    }
  });

  SectionResult result;
  result.seeds = std::move(outcomes);
  for (auto& pts : per_seed) {
    result.points.insert(result.points.end(), pts.begin(), pts.end());
  }
  return result;
}

std::vector<SectionSeed> figure_seed_grid() {
  std::vector<SectionSeed> seeds;
  for (int k = 0; k < 10; ++k) seeds.push_back({0.0, -0.9 + 0.2 * k});
  return seeds;
}

std::vector<SectionSeed> near_separatrix_seeds() {
  return {{0.05, 0.02}, {0.05, -0.02}, {0.05, 0.05}, {0.05, -0.05}};
}

std::vector<OrbitRegularity> regularity_score(const std::vector<SectionPoint>& points,
                                              const RegularityOptions& options) {
  std::map<int, std::vector<Vec2>> orbits;
  for (const auto& p : points) orbits[p.seed_index].emplace_back(p.psi, p.p_psi);
  std::vector<OrbitRegularity> out;
  for (const auto& [seed, pts] : orbits) {
    const int n = static_cast<int>(pts.size());
    if (n < options.min_points) {
      throw Error(ErrorKind::InsufficientPoints, "insufficient points: seed " + std::to_string(seed) + " has " +
                                                     std::to_string(n) + " section points, need " +
                                                     std::to_string(options.min_points));
    }
    const int order = std::max(1, std::min(options.order, (n - 1) / 4));
    OrbitRegularity r;
    r.seed_index = seed;
    r.points = n;
    const bool all_pos = std::all_of(pts.begin(), pts.end(), [](const Vec2& p) { return p(1) > 0.0; });
    const bool all_neg = std::all_of(pts.begin(), pts.end(), [](const Vec2& p) { return p(1) < 0.0; });
    r.rotational = all_pos || all_neg;
    if (r.rotational) {
      std::vector<double> x, y;
      for (const auto& p : pts) {
        x.push_back(p(0));
        y.push_back(p(1) * p(1));
      }
      const FourierSeries fit = FourierSeries::fit(x, y, order, kTwoPi);
      const double sign = all_pos ? 1.0 : -1.0;
      r.residual = rms_distance(pts, [&](double u) { return Vec2(u, sign * std::sqrt(std::max(0.0, fit(u)))); });
    } else {
      double sc = 0.0, ss = 0.0, mp = 0.0;
      for (const auto& p : pts) {
        sc += std::cos(p(0));
        ss += std::sin(p(0));
        mp += p(1);
      }
      const Vec2 center(std::atan2(ss, sc), mp / n);
      std::vector<double> theta, inv_r2;
      double r_max = 0.0;
      for (const auto& p : pts) {
        const double dx = std::remainder(p(0) - center(0), kTwoPi);
        const double dy = p(1) - center(1);
        const double r2 = dx * dx + dy * dy;
        if (r2 > 0.0) {
          theta.push_back(std::atan2(dy, dx));
          inv_r2.push_back(1.0 / r2);
          r_max = std::max(r_max, std::sqrt(r2));
        }
      }
      const FourierSeries fit = FourierSeries::fit(theta, inv_r2, order, kTwoPi);
      // A scattered orbit can drive the fit negative; cap the radius so the misfit stays finite.
      const double floor = 1.0 / (4.0 * r_max * r_max);
      r.residual = rms_distance(pts, [&](double u) {
        const double rho = 1.0 / std::sqrt(std::max(fit(u), floor));
        return Vec2(center(0) + rho * std::cos(u), center(1) + rho * std::sin(u));
      });
    }
    r.regular = r.residual < options.threshold * options.momentum_scale;
    out.push_back(r);
  }
  return out;
}

}  // namespace geotubes
