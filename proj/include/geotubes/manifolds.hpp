#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace geotubes {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class ChristoffelMode { Analytic, FiniteDifference };

// Normalized constant sectional curvature of a space form.
enum class SpaceForm : int { Hyperbolic = -1, Flat = 0, Spherical = 1 };

SpaceForm space_form_from_int(int k0);
inline int curvature_of(SpaceForm k) { return static_cast<int>(k); }

// Metric and its first and second coordinate derivatives at a point.
// dg[m] = d g / d x^m, ddg[m][n] = d^2 g / d x^m d x^n.
struct MetricJet {
  Mat3 g;
  std::array<Mat3, 3> dg;
  std::array<std::array<Mat3, 3>, 3> ddg;
};

enum class ChartKind {
  Euclidean3,
  Euclidean3Cylindrical,
  Sphere3Hopf,
  Hyperbolic3HalfSpace,
  Ellipsoid3Degenerate,
  User,
};

// A single coordinate chart on a 3-manifold. Built-ins carry closed-form metric
// derivatives; user charts are differentiated by central finite differences.
class ChartMetric {
 public:
  using MetricFn = std::function<Mat3(const Vec3&)>;
  using JetFn = std::function<MetricJet(const Vec3&)>;
  using DomainFn = std::function<bool(const Vec3&)>;

  static ChartMetric euclidean3();
  // (r, theta, z) with metric diag(1, r^2, 1); r > 0.
  static ChartMetric euclidean3_cylindrical();
  // Hopf coordinates (eta, theta, phi) on the unit 3-sphere, eta in (0, pi/2).
  static ChartMetric sphere3_hopf();
  // Upper half-space (x, y, z), z > 0, metric z^-2 diag(1, 1, 1).
  static ChartMetric hyperbolic3_halfspace();
  // Hopf-type chart on x1^2/a^2 + x2^2/a^2 + x3^2/b^2 + x4^2/b^2 = 1.
  static ChartMetric ellipsoid3_degenerate(double a, double b);
  // Arbitrary metric; Christoffels and curvature by finite differences.
  static ChartMetric user(std::string name, MetricFn metric, DomainFn domain = {},
                          std::vector<std::string> coordinate_names = {"x1", "x2", "x3"});

  const std::string& name() const { return name_; }
  ChartKind kind() const { return kind_; }
  ChristoffelMode christoffel_mode() const { return mode_; }
  std::optional<SpaceForm> space_form() const { return space_form_; }
  const std::map<std::string, double>& params() const { return params_; }
  const std::vector<std::string>& coordinate_names() const { return coordinate_names_; }
  // Coordinates the metric actually depends on (all three for user charts).
  const std::vector<int>& essential_coordinates() const { return essential_; }
  // Period of each coordinate, 0 for non-angular ones.
  const Vec3& coordinate_periods() const { return periods_; }
  // Equality of chart points up to angular wrap.
  bool same_point(const Vec3& x, const Vec3& y, double tol) const;

  bool in_domain(const Vec3& x) const;
  // Throws Error(ChartDomain) when x is outside the chart.
  void require_domain(const Vec3& x) const;

  // Raw symmetric metric components, no validation.
  Mat3 metric(const Vec3& x) const;
  MetricJet jet(const Vec3& x) const;

  // Finite-difference jet regardless of mode; used to cross-check built-ins.
  MetricJet finite_difference_jet(const Vec3& x) const;

 private:
  ChartMetric() = default;

  std::string name_;
  ChartKind kind_ = ChartKind::User;
  ChristoffelMode mode_ = ChristoffelMode::FiniteDifference;
  std::optional<SpaceForm> space_form_;
  std::map<std::string, double> params_;
  std::vector<std::string> coordinate_names_;
  std::vector<int> essential_;
  Vec3 periods_ = Vec3::Zero();
  MetricFn metric_;
  JetFn jet_;
  DomainFn domain_;
};

struct MetricAt {
  Mat3 g;
  Mat3 g_inv;
};

// Gamma^i_jk stored as gamma[i](j, k); symmetric in j, k.
struct Christoffel {
  std::array<Mat3, 3> gamma;

  double operator()(int i, int j, int k) const { return gamma[i](j, k); }
  // Gamma^i_jk u^j v^k
  Vec3 contract(const Vec3& u, const Vec3& v) const;
};

// Christoffel symbols with their coordinate derivatives d[m][i](j, k) = d_m Gamma^i_jk.
struct ChristoffelJet : Christoffel {
  std::array<std::array<Mat3, 3>, 3> d;

  // (d_m Gamma^i_jk) w^m u^j v^k
  Vec3 contract_derivative(const Vec3& w, const Vec3& u, const Vec3& v) const;
};

// Curvature with the convention R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,
// R(d_c, d_d) d_b = R^a_bcd d_a and R_abcd = <R(d_c, d_d) d_b, d_a>.
// With this convention K(u,v) = R_abcd u^a v^b u^c v^d / (|u|^2|v|^2 - <u,v>^2).
struct Riemann {
  std::array<double, 81> up{};    // R^a_bcd
  std::array<double, 81> down{};  // R_abcd

  static constexpr int index(int a, int b, int c, int d) { return ((a * 3 + b) * 3 + c) * 3 + d; }
  double mixed(int a, int b, int c, int d) const { return up[index(a, b, c, d)]; }
  double lowered(int a, int b, int c, int d) const { return down[index(a, b, c, d)]; }

  // Matrix M with (M J)^a = R^a_bcd v^b J^c v^d, i.e. M J = R(J, v) v.
  Mat3 jacobi_operator(const Vec3& v) const;
};

struct TangentVector {
  Vec3 base;
  Vec3 components;
};

// Everything the integrators need at one point, computed from a single jet.
struct LocalGeometry {
  MetricAt metric;
  ChristoffelJet christoffel;
  Riemann riemann;
};

MetricAt metric_at(const ChartMetric& chart, const Vec3& x);
Christoffel christoffel_at(const ChartMetric& chart, const Vec3& x);
ChristoffelJet christoffel_jet_at(const ChartMetric& chart, const Vec3& x);
Riemann riemann_at(const ChartMetric& chart, const Vec3& x);
LocalGeometry local_geometry(const ChartMetric& chart, const Vec3& x);

double sectional_curvature(const ChartMetric& chart, const Vec3& x, const Vec3& u, const Vec3& v);
double sectional_curvature(const ChartMetric& chart, const TangentVector& u, const TangentVector& v);
// Same quantity from an already evaluated geometry.
double sectional_curvature(const LocalGeometry& geo, const Vec3& u, const Vec3& v);

// Building blocks on precomputed jets, exposed for the finite-difference cross-checks.
MetricAt invert_metric(const Mat3& g);
ChristoffelJet christoffel_from_jet(const MetricJet& jet, const MetricAt& metric);
Riemann riemann_from_jet(const MetricJet& jet, const MetricAt& metric, const Christoffel& gamma);

inline double inner(const Mat3& g, const Vec3& u, const Vec3& v) { return u.dot(g * v); }
inline double norm(const Mat3& g, const Vec3& u) { return std::sqrt(inner(g, u, u)); }
// Metric cross product (u x v)^i = sqrt(det g) g^il eps_ljk u^j v^k, right-handed in chart orientation.
Vec3 cross(const MetricAt& metric, const Vec3& u, const Vec3& v);

}  // namespace geotubes
