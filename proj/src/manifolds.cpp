#include "geotubes/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "geotubes/errors.hpp"

namespace geotubes {

namespace {

MetricJet zero_jet() {
  MetricJet jet;
  jet.g = Mat3::Identity();
  for (auto& m : jet.dg) m.setZero();
  for (auto& row : jet.ddg) {
    for (auto& m : row) m.setZero();
  }
  return jet;
}

std::string point_string(const Vec3& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << x(0) << ", " << x(1) << ", " << x(2) << ")";
  return os.str();
}

constexpr double kHopfMargin = 1e-9;

// Metric of the degenerate ellipsoid in Hopf-type coordinates; a = b = 1 is the round S^3.
MetricJet ellipsoid_jet(double a, double b, const Vec3& x) {
  const double eta = x(0);
  const double s = std::sin(eta);
  const double c = std::cos(eta);
  const double s2 = std::sin(2.0 * eta);
  const double c2 = std::cos(2.0 * eta);
  const double a2 = a * a;
  const double b2 = b * b;
  MetricJet jet = zero_jet();
  jet.g = Mat3::Zero();
  jet.g(0, 0) = a2 * c * c + b2 * s * s;
  jet.g(1, 1) = a2 * s * s;
  jet.g(2, 2) = b2 * c * c;
  jet.dg[0](0, 0) = (b2 - a2) * s2;
  jet.dg[0](1, 1) = a2 * s2;
  jet.dg[0](2, 2) = -b2 * s2;
  jet.ddg[0][0](0, 0) = 2.0 * (b2 - a2) * c2;
  jet.ddg[0][0](1, 1) = 2.0 * a2 * c2;
  jet.ddg[0][0](2, 2) = -2.0 * b2 * c2;
  return jet;
}

bool hopf_domain(const Vec3& x) {
  return std::isfinite(x(1)) && std::isfinite(x(2)) && x(0) > kHopfMargin &&
         x(0) < std::numbers::pi / 2.0 - kHopfMargin;
}

}  // namespace

SpaceForm space_form_from_int(int k0) {
  switch (k0) {
    case -1:
      return SpaceForm::Hyperbolic;
    case 0:
      return SpaceForm::Flat;
    case 1:
      return SpaceForm::Spherical;
    default:
      throw Error(ErrorKind::Config, "space form curvature must be -1, 0 or 1, got " + std::to_string(k0));
  }
}

ChartMetric ChartMetric::euclidean3() {
  ChartMetric c;
  c.name_ = "euclidean3";
  c.kind_ = ChartKind::Euclidean3;
  c.mode_ = ChristoffelMode::Analytic;
  c.space_form_ = SpaceForm::Flat;
  c.coordinate_names_ = {"x", "y", "z"};
  c.metric_ = [](const Vec3&) { return Mat3::Identity().eval(); };
  c.jet_ = [](const Vec3&) { return zero_jet(); };
  c.domain_ = [](const Vec3& x) { return x.allFinite(); };
  return c;
}

ChartMetric ChartMetric::euclidean3_cylindrical() {
  ChartMetric c;
  c.name_ = "euclidean3_cylindrical";
  c.kind_ = ChartKind::Euclidean3Cylindrical;
  c.mode_ = ChristoffelMode::Analytic;
  c.space_form_ = SpaceForm::Flat;
  c.coordinate_names_ = {"r", "theta", "z"};
  c.essential_ = {0};
  c.periods_ = Vec3(0.0, 2.0 * std::numbers::pi, 0.0);
  c.metric_ = [](const Vec3& x) {
    Mat3 g = Mat3::Identity();
    g(1, 1) = x(0) * x(0);
    return g;
  };
  c.jet_ = [](const Vec3& x) {
    MetricJet jet = zero_jet();
    jet.g(1, 1) = x(0) * x(0);
    jet.dg[0](1, 1) = 2.0 * x(0);
    jet.ddg[0][0](1, 1) = 2.0;
    return jet;
  };
  c.domain_ = [](const Vec3& x) { return x.allFinite() && x(0) > 0.0; };
  return c;
}

ChartMetric ChartMetric::sphere3_hopf() {
  ChartMetric c;
  c.name_ = "sphere3_hopf";
  c.kind_ = ChartKind::Sphere3Hopf;
  c.mode_ = ChristoffelMode::Analytic;
  c.space_form_ = SpaceForm::Spherical;
  c.coordinate_names_ = {"eta", "theta", "phi"};
  c.essential_ = {0};
  c.periods_ = Vec3(0.0, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
  c.metric_ = [](const Vec3& x) { return ellipsoid_jet(1.0, 1.0, x).g; };
  c.jet_ = [](const Vec3& x) { return ellipsoid_jet(1.0, 1.0, x); };
  c.domain_ = hopf_domain;
  return c;
}

ChartMetric ChartMetric::hyperbolic3_halfspace() {
  ChartMetric c;
  c.name_ = "hyperbolic3_halfspace";
  c.kind_ = ChartKind::Hyperbolic3HalfSpace;
  c.mode_ = ChristoffelMode::Analytic;
  c.space_form_ = SpaceForm::Hyperbolic;
  c.coordinate_names_ = {"x", "y", "z"};
  c.essential_ = {2};
  c.metric_ = [](const Vec3& x) { return (Mat3::Identity() / (x(2) * x(2))).eval(); };
  c.jet_ = [](const Vec3& x) {
    MetricJet jet = zero_jet();
    const double z = x(2);
    jet.g = Mat3::Identity() / (z * z);
    jet.dg[2] = Mat3::Identity() * (-2.0 / (z * z * z));
    jet.ddg[2][2] = Mat3::Identity() * (6.0 / (z * z * z * z));
    return jet;
  };
  c.domain_ = [](const Vec3& x) { return x.allFinite() && x(2) > 1e-12; };
  return c;
}

ChartMetric ChartMetric::ellipsoid3_degenerate(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw Error(ErrorKind::Config, "ellipsoid semi-axes must be positive");
  }
  ChartMetric c;
  c.name_ = "ellipsoid3_degenerate";
  c.kind_ = ChartKind::Ellipsoid3Degenerate;
  c.mode_ = ChristoffelMode::Analytic;
  if (a == 1.0 && b == 1.0) {
    c.space_form_ = SpaceForm::Spherical;
  }
  c.params_ = {{"a", a}, {"b", b}};
  c.coordinate_names_ = {"eta", "theta", "phi"};
  c.essential_ = {0};
  c.periods_ = Vec3(0.0, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
  c.metric_ = [a, b](const Vec3& x) { return ellipsoid_jet(a, b, x).g; };
  c.jet_ = [a, b](const Vec3& x) { return ellipsoid_jet(a, b, x); };
  c.domain_ = hopf_domain;
  return c;
}

ChartMetric ChartMetric::user(std::string name, MetricFn metric, DomainFn domain,
                              std::vector<std::string> coordinate_names) {
  ChartMetric c;
  c.name_ = std::move(name);
  c.kind_ = ChartKind::User;
  c.mode_ = ChristoffelMode::FiniteDifference;
  c.coordinate_names_ = std::move(coordinate_names);
  c.essential_ = {0, 1, 2};
  c.metric_ = [m = std::move(metric)](const Vec3& x) {
    const Mat3 g = m(x);
    return (0.5 * (g + g.transpose())).eval();
  };
  c.domain_ = domain ? std::move(domain) : DomainFn([](const Vec3& x) { return x.allFinite(); });
  return c;
}

bool ChartMetric::in_domain(const Vec3& x) const { return domain_(x); }

void ChartMetric::require_domain(const Vec3& x) const {
  if (!domain_(x)) {
    throw Error(ErrorKind::ChartDomain, "left chart domain: point " + point_string(x) + " outside " + name_);
  }
}

bool ChartMetric::same_point(const Vec3& x, const Vec3& y, double tol) const {
  for (int i = 0; i < 3; ++i) {
    double d = x(i) - y(i);
    if (periods_(i) > 0.0) {
      d = std::remainder(d, periods_(i));
    }
    if (std::abs(d) > tol * std::max(1.0, std::abs(x(i)))) {
      return false;
    }
  }
  return true;
}

Mat3 ChartMetric::metric(const Vec3& x) const { return metric_(x); }

MetricJet ChartMetric::jet(const Vec3& x) const {
  if (mode_ == ChristoffelMode::Analytic && jet_) {
    return jet_(x);
  }
  return finite_difference_jet(x);
}

MetricJet ChartMetric::finite_difference_jet(const Vec3& x) const {
  MetricJet jet;
  jet.g = metric_(x);
  std::array<double, 3> h1{};
  std::array<double, 3> h2{};
  for (int i = 0; i < 3; ++i) {
    h1[i] = 1e-5 * std::max(1.0, std::abs(x(i)));
    h2[i] = 1e-4 * std::max(1.0, std::abs(x(i)));
  }
  for (int m = 0; m < 3; ++m) {
    Vec3 xp = x;
    Vec3 xm = x;
    xp(m) += h1[m];
    xm(m) -= h1[m];
    jet.dg[m] = (metric_(xp) - metric_(xm)) / (2.0 * h1[m]);
  }
  // Nested central differences; the stencil is symmetric in (m, n).
  for (int m = 0; m < 3; ++m) {
    for (int n = m; n < 3; ++n) {
      auto at = [&](double sm, double sn) {
        Vec3 y = x;
        y(m) += sm * h2[m];
        y(n) += sn * h2[n];
        return metric_(y);
      };
      const Mat3 d = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h2[m] * h2[n]);
      jet.ddg[m][n] = d;
      jet.ddg[n][m] = d;
    }
  }
  return jet;
}

Vec3 Christoffel::contract(const Vec3& u, const Vec3& v) const {
  return {u.dot(gamma[0] * v), u.dot(gamma[1] * v), u.dot(gamma[2] * v)};
}

Vec3 ChristoffelJet::contract_derivative(const Vec3& w, const Vec3& u, const Vec3& v) const {
  Vec3 out = Vec3::Zero();
  for (int m = 0; m < 3; ++m) {
    if (w(m) == 0.0) continue;
    for (int i = 0; i < 3; ++i) {
      out(i) += w(m) * u.dot(d[m][i] * v);
    }
  }
  return out;
}

Mat3 Riemann::jacobi_operator(const Vec3& v) const {
  Mat3 m = Mat3::Zero();
  for (int a = 0; a < 3; ++a) {
    for (int c = 0; c < 3; ++c) {
      double sum = 0.0;
      for (int b = 0; b < 3; ++b) {
        for (int d = 0; d < 3; ++d) {
          sum += up[index(a, b, c, d)] * v(b) * v(d);
        }
      }
      m(a, c) = sum;
    }
  }
  return m;
}

MetricAt invert_metric(const Mat3& g) {
  Eigen::LLT<Mat3> llt(g);
  if (llt.info() != Eigen::Success || !g.allFinite()) {
    throw Error(ErrorKind::DegenerateMetric, "degenerate metric at point");
  }
  const double scale = g.diagonal().cwiseAbs().maxCoeff();
  if (llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 1e-14 * std::sqrt(scale)) {
    throw Error(ErrorKind::DegenerateMetric, "degenerate metric at point");
  }
  MetricAt out;
  out.g = g;
  out.g_inv = llt.solve(Mat3::Identity());
  out.g_inv = 0.5 * (out.g_inv + out.g_inv.transpose()).eval();
  return out;
}

ChristoffelJet christoffel_from_jet(const MetricJet& jet, const MetricAt& metric) {
  // First kind: S_l,jk = d_j g_lk + d_k g_lj - d_l g_jk
  std::array<Mat3, 3> first{};
  for (int l = 0; l < 3; ++l) {
    for (int j = 0; j < 3; ++j) {
      for (int k = j; k < 3; ++k) {
        const double v = jet.dg[j](l, k) + jet.dg[k](l, j) - jet.dg[l](j, k);
        first[l](j, k) = v;
        first[l](k, j) = v;
      }
    }
  }
  ChristoffelJet out;
  for (int i = 0; i < 3; ++i) {
    out.gamma[i].setZero();
    for (int l = 0; l < 3; ++l) {
      out.gamma[i] += 0.5 * metric.g_inv(i, l) * first[l];
    }
  }
  // d_m Gamma^i_jk = 1/2 d_m g^il S_l,jk + 1/2 g^il d_m S_l,jk
  for (int m = 0; m < 3; ++m) {
    const Mat3 dginv = -metric.g_inv * jet.dg[m] * metric.g_inv;
    std::array<Mat3, 3> dfirst{};
    for (int l = 0; l < 3; ++l) {
      for (int j = 0; j < 3; ++j) {
        for (int k = j; k < 3; ++k) {
          const double v = jet.ddg[m][j](l, k) + jet.ddg[m][k](l, j) - jet.ddg[m][l](j, k);
          dfirst[l](j, k) = v;
          dfirst[l](k, j) = v;
        }
      }
    }
    for (int i = 0; i < 3; ++i) {
      Mat3 acc = Mat3::Zero();
      for (int l = 0; l < 3; ++l) {
        acc += 0.5 * (dginv(i, l) * first[l] + metric.g_inv(i, l) * dfirst[l]);
      }
      out.d[m][i] = acc;
    }
  }
  return out;
}

Riemann riemann_from_jet(const MetricJet& jet, const MetricAt& metric, const Christoffel& gamma) {
  // R_abcd = 1/2 (g_ad,bc + g_bc,ad - g_bd,ac - g_ac,bd) + g_ef (G^e_bc G^f_ad - G^e_bd G^f_ac)
  // Lowered Christoffels Gl[f](a, d) = g_fe G^e_ad make the quadratic term a dot product.
  std::array<Mat3, 3> lowered{};
  for (int f = 0; f < 3; ++f) {
    lowered[f].setZero();
    for (int e = 0; e < 3; ++e) {
      lowered[f] += metric.g(f, e) * gamma.gamma[e];
    }
  }
  Riemann r;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        for (int d = 0; d < 3; ++d) {
          double v = 0.5 * (jet.ddg[b][c](a, d) + jet.ddg[a][d](b, c) - jet.ddg[a][c](b, d) -
                            jet.ddg[b][d](a, c));
          for (int e = 0; e < 3; ++e) {
            v += gamma.gamma[e](b, c) * lowered[e](a, d) - gamma.gamma[e](b, d) * lowered[e](a, c);
          }
          r.down[Riemann::index(a, b, c, d)] = v;
        }
      }
    }
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        for (int d = 0; d < 3; ++d) {
          double v = 0.0;
          for (int e = 0; e < 3; ++e) {
            v += metric.g_inv(a, e) * r.down[Riemann::index(e, b, c, d)];
          }
          r.up[Riemann::index(a, b, c, d)] = v;
        }
      }
    }
  }
  return r;
}

MetricAt metric_at(const ChartMetric& chart, const Vec3& x) {
  chart.require_domain(x);
  return invert_metric(chart.metric(x));
}

Christoffel christoffel_at(const ChartMetric& chart, const Vec3& x) {
  return christoffel_jet_at(chart, x);
}

ChristoffelJet christoffel_jet_at(const ChartMetric& chart, const Vec3& x) {
  chart.require_domain(x);
  const MetricJet jet = chart.jet(x);
  return christoffel_from_jet(jet, invert_metric(jet.g));
}

Riemann riemann_at(const ChartMetric& chart, const Vec3& x) { return local_geometry(chart, x).riemann; }

LocalGeometry local_geometry(const ChartMetric& chart, const Vec3& x) {
  chart.require_domain(x);
  const MetricJet jet = chart.jet(x);
  LocalGeometry geo;
  geo.metric = invert_metric(jet.g);
  geo.christoffel = christoffel_from_jet(jet, geo.metric);
  geo.riemann = riemann_from_jet(jet, geo.metric, geo.christoffel);
  return geo;
}

double sectional_curvature(const LocalGeometry& geo, const Vec3& u, const Vec3& v) {
  const Mat3& g = geo.metric.g;
  const double uu = inner(g, u, u);
  const double vv = inner(g, v, v);
  const double uv = inner(g, u, v);
  const double area2 = uu * vv - uv * uv;
  if (area2 < 1e-12) {
    throw Error(ErrorKind::DegeneratePlane, "degenerate plane: vectors are (nearly) linearly dependent");
  }
  double num = 0.0;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        for (int d = 0; d < 3; ++d) {
          num += geo.riemann.down[Riemann::index(a, b, c, d)] * u(a) * v(b) * u(c) * v(d);
        }
      }
    }
  }
  return num / area2;
}

double sectional_curvature(const ChartMetric& chart, const Vec3& x, const Vec3& u, const Vec3& v) {
  return sectional_curvature(local_geometry(chart, x), u, v);
}

double sectional_curvature(const ChartMetric& chart, const TangentVector& u, const TangentVector& v) {
  if ((u.base - v.base).cwiseAbs().maxCoeff() > 0.0) {
    throw Error(ErrorKind::DegeneratePlane, "degenerate plane: tangent vectors have different base points");
  }
  return sectional_curvature(chart, u.base, u.components, v.components);
}

Vec3 cross(const MetricAt& metric, const Vec3& u, const Vec3& v) {
  const double vol = std::sqrt(metric.g.determinant());
  return vol * (metric.g_inv * u.cross(v));
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateMetric:
      return "degenerate metric";
    case ErrorKind::DegeneratePlane:
      return "degenerate plane";
    case ErrorKind::ChartDomain:
      return "left chart domain";
    case ErrorKind::IrregularCurve:
      return "irregular curve";
    case ErrorKind::VanishingCurvature:
      return "vanishing geodesic curvature";
    case ErrorKind::TubeDegenerate:
      return "tube degenerate";
    case ErrorKind::ProfileNotSimple:
      return "profile not simple";
    case ErrorKind::StepFailure:
      return "step failure";
    case ErrorKind::LeftDomain:
      return "left domain";
    case ErrorKind::SeedInfeasible:
      return "seed infeasible";
    case ErrorKind::InsufficientPoints:
      return "insufficient points";
    case ErrorKind::PoleSingularity:
      return "pole singularity";
    case ErrorKind::Parse:
      return "parse error";
    case ErrorKind::Config:
      return "config error";
    case ErrorKind::Io:
      return "i/o error";
  }
  return "error";
}

}  // namespace geotubes
