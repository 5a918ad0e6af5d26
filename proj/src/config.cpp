#include "geotubes/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include "geotubes/errors.hpp"
#include "geotubes/export.hpp"
#include "geotubes/expression.hpp"
#include "geotubes/flow.hpp"
#include "geotubes/numeric_tubes.hpp"
#include "geotubes/poincare.hpp"

namespace geotubes {

using json = nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void fail(const std::string& key, const std::string& message) {
  throw Error(ErrorKind::Config, "config key '" + key + "': " + message);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
    if (!known) throw Error(ErrorKind::Config, "unknown config key '" + join(path, item.key()) + "'");
  }
}

double to_number(const json& v, const std::string& key, const std::map<std::string, double>& constants = {}) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return evaluate_constant(v.get<std::string>(), constants);
    } catch (const Error& e) {
      fail(key, e.what());
    }
  }
  fail(key, "expected a number or an expression string");
}

double number(const json& obj, const std::string& path, const char* key, std::optional<double> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    fail(join(path, key), "missing required value");
  }
  const double x = to_number(obj.at(key), join(path, key));
  if (!std::isfinite(x)) fail(join(path, key), "value is not finite");
  return x;
}

double positive(const json& obj, const std::string& path, const char* key, std::optional<double> fallback = {}) {
  const double x = number(obj, path, key, fallback);
  if (!(x > 0.0)) fail(join(path, key), "must be positive");
  return x;
}

int integer(const json& obj, const std::string& path, const char* key, std::optional<int> fallback = {}) {
  const double x = number(obj, path, key, fallback ? std::optional<double>(*fallback) : std::nullopt);
  if (x != std::round(x) || std::abs(x) > 1e9) fail(join(path, key), "expected an integer");
  return static_cast<int>(x);
}

bool boolean(const json& obj, const std::string& path, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) fail(join(path, key), "expected true or false");
  return obj.at(key).get<bool>();
}

std::string text(const json& obj, const std::string& path, const char* key,
                 std::optional<std::string> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    fail(join(path, key), "missing required value");
  }
  if (!obj.at(key).is_string()) fail(join(path, key), "expected a string");
  return obj.at(key).get<std::string>();
}

const json& section_of(const json& tree, const char* key) {
  static const json empty = json::object();
  return tree.contains(key) ? tree.at(key) : empty;
}

std::map<std::string, double> read_constants(const json& obj, const std::string& path) {
  std::map<std::string, double> out;
  if (!obj.contains("constants")) return out;
  const json& c = obj.at("constants");
  const std::string cpath = join(path, "constants");
  if (!c.is_object()) fail(cpath, "expected an object of name: value pairs");
  for (const auto& item : c.items()) {
    out[item.key()] = to_number(item.value(), join(cpath, item.key()), out);
  }
  return out;
}

Expression parse_expression(const json& v, const std::string& key, const std::vector<std::string>& variables,
                            const std::map<std::string, double>& constants) {
  std::string src;
  if (v.is_number()) {
    std::ostringstream os;
    os << std::setprecision(17) << v.get<double>();
    src = os.str();
  } else if (v.is_string()) {
    src = v.get<std::string>();
  } else {
    fail(key, "expected an expression string or a number");
  }
  try {
    return Expression::parse(src, variables, constants);
  } catch (const Error& e) {
    fail(key, e.what());
  }
}

std::string compact(const json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch); }), s.end());
  return s;
}

std::shared_ptr<const ChartMetric> user_chart(const json& m) {
  const std::string path = "manifold";
  check_keys(m, path, {"kind", "name", "coordinates", "constants", "metric", "domain"});
  std::vector<std::string> coords = {"x1", "x2", "x3"};
  if (m.contains("coordinates")) {
    const json& c = m.at("coordinates");
    if (!c.is_array() || c.size() != 3 || !std::all_of(c.begin(), c.end(), [](const json& e) { return e.is_string(); })) {
      fail(join(path, "coordinates"), "expected three coordinate names");
    }
    coords = {c[0].get<std::string>(), c[1].get<std::string>(), c[2].get<std::string>()};
  }
  const auto constants = read_constants(m, path);
  if (!m.contains("metric")) fail(join(path, "metric"), "missing required value");
  const json& g = m.at("metric");
  if (!g.is_array() || g.size() != 3) fail(join(path, "metric"), "expected a 3 x 3 array");
  std::vector<Expression> entries;
  for (int i = 0; i < 3; ++i) {
    const std::string row = join(path, "metric") + "[" + std::to_string(i) + "]";
    if (!g[i].is_array() || g[i].size() != 3) fail(row, "expected three entries");
    for (int j = 0; j < 3; ++j) {
      const std::string key = row + "[" + std::to_string(j) + "]";
      if (j < i && compact(g[i][j]) != compact(g[j][i])) fail(key, "metric must be symmetric");
      entries.push_back(parse_expression(g[i][j], key, coords, constants));
    }
  }
  std::vector<Expression> domain;
  if (m.contains("domain")) {
    const json& d = m.at("domain");
    if (!d.is_array()) fail(join(path, "domain"), "expected an array of expressions that must be positive");
    for (std::size_t k = 0; k < d.size(); ++k) {
      domain.push_back(parse_expression(d[k], join(path, "domain") + "[" + std::to_string(k) + "]", coords, constants));
    }
  }
  auto metric = [entries](const Vec3& x) {
    Mat3 out;
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        out(i, j) = out(j, i) = entries[static_cast<std::size_t>(3 * i + j)].evaluate({x.data(), 3});
      }
    }
    return out;
  };
  ChartMetric::DomainFn in_domain;
  if (!domain.empty()) {
    in_domain = [domain](const Vec3& x) {
      return std::all_of(domain.begin(), domain.end(),
                         [&](const Expression& e) { return e.evaluate({x.data(), 3}) > 0.0; });
    };
  }
  return std::make_shared<const ChartMetric>(
      ChartMetric::user(text(m, path, "name", std::string("user")), metric, in_domain, coords));
}

void require_chart(const ChartMetric& chart, ChartKind kind, const std::string& curve_kind) {
  if (chart.kind() != kind) {
    fail("curve.kind", "curve '" + curve_kind + "' is not defined on manifold '" + chart.name() + "'");
  }
}

FourierSeries series_from(const json& obj, const std::string& path) {
  check_keys(obj, path, {"a0", "a", "b"});
  std::vector<double> a;
  std::vector<double> b;
  auto read = [&](const char* key, std::vector<double>& out) {
    if (!obj.contains(key)) return;
    const json& arr = obj.at(key);
    if (!arr.is_array()) fail(join(path, key), "expected an array of coefficients");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      out.push_back(to_number(arr[k], join(path, key) + "[" + std::to_string(k) + "]"));
    }
  };
  read("a", a);
  read("b", b);
  const std::size_t n = std::max(a.size(), b.size());
  a.resize(n, 0.0);
  b.resize(n, 0.0);
  return FourierSeries(kTwoPi, number(obj, path, "a0", 0.0), a, b);
}

std::string fmt(double x, int precision = 6) {
  std::ostringstream os;
  if (x != 0.0 && (std::abs(x) < 1e-3 || std::abs(x) >= 1e6)) {
    os << std::scientific << std::setprecision(precision - 1) << x;
  } else {
    os << std::setprecision(precision) << x;
  }
  return os.str();
}

// Everything a run needs, validated up front.
struct Plan {
  std::string kind;
  std::shared_ptr<const ChartMetric> chart;
  ParamCurve curve;
  std::string curve_kind;
  double ellipse_a = 0.0;
  double ellipse_b = 0.0;
  std::optional<TubeProfile> profile;

  std::string tube_method = "auto";
  std::string tube_csv;
  bool tube_compare = false;
  double s_independence_tol = 1e-8;
  double radial_tol = 1e-10;

  int n_s = 64;
  int n_psi = 64;

  FrenetOptions frenet;
  int frenet_samples = 16;
  double constancy_tol = 1e-9;

  double flow_tol = 1e-11;
  double flow_length = 500.0;
  double flow_max_step = std::numeric_limits<double>::infinity();
  double flow_sample_interval = 0.0;
  std::vector<json> flow_seeds;

  SectionConfig section;
  RegularityOptions regularity;

  double certify_rho0 = 0.0;
  int certify_samples = 2;
  CertificateOptions certificate;

  bool mesh_project = true;

  std::string out_dir = ".";
  std::string prefix;
  unsigned threads = 0;
};

std::vector<SectionSeed> section_seeds(const json& v, const std::string& key) {
  if (v.is_string()) {
    const std::string name = v.get<std::string>();
    if (name == "figure") return figure_seed_grid();
    if (name == "separatrix") return near_separatrix_seeds();
    if (name == "figure+separatrix") {
      auto seeds = figure_seed_grid();
      const auto extra = near_separatrix_seeds();
      seeds.insert(seeds.end(), extra.begin(), extra.end());
      return seeds;
    }
    fail(key, "unknown seed set '" + name + "' (figure, separatrix, figure+separatrix)");
  }
  if (!v.is_array() || v.empty()) fail(key, "expected a seed set name or a non-empty array of [psi, p_psi] pairs");
  std::vector<SectionSeed> seeds;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::string item = key + "[" + std::to_string(k) + "]";
    if (!v[k].is_array() || v[k].size() != 2) fail(item, "expected [psi, p_psi]");
    seeds.push_back({to_number(v[k][0], item + "[0]"), to_number(v[k][1], item + "[1]")});
  }
  return seeds;
}

Plan make_plan(const json& tree) {
  if (!tree.is_object()) throw Error(ErrorKind::Config, "config must be a JSON object");
  check_keys(tree, "", {"kind", "description", "threads", "manifold", "curve", "profile", "tube", "grid", "frenet",
                        "flow", "section", "certify", "mesh", "output"});
  Plan p;
  p.kind = canonical_kind(text(tree, "", "kind"));
  const int threads = integer(tree, "", "threads", 0);
  if (threads < 0) fail("threads", "must be non-negative");
  p.threads = static_cast<unsigned>(threads);
  if (tree.contains("description")) text(tree, "", "description");

  if (!tree.contains("manifold")) fail("manifold", "missing required section");
  p.chart = build_chart(tree.at("manifold"));
  if (!tree.contains("curve")) fail("curve", "missing required section");
  p.curve = build_curve(tree.at("curve"), p.chart);
  p.curve_kind = tree.at("curve").at("kind").get<std::string>();
  if (p.curve_kind == "ellipse") {
    p.ellipse_a = number(tree.at("curve"), "curve", "a");
    p.ellipse_b = number(tree.at("curve"), "curve", "b");
  }
  if (tree.contains("profile")) {
    p.profile = build_profile(tree.at("profile"));
  } else if (p.kind != "frenet" && p.kind != "certify-s-independence") {
    fail("profile", "missing required section");
  }

  const json& tube = section_of(tree, "tube");
  check_keys(tube, "tube", {"method", "csv", "compare", "s_independence_tol", "radial_tol"});
  p.tube_method = text(tube, "tube", "method", std::string("auto"));
  static const std::set<std::string> methods = {"auto", "closed_form", "numeric", "csv"};
  if (!methods.count(p.tube_method)) fail("tube.method", "expected auto, closed_form, numeric or csv");
  if (p.tube_method == "csv") p.tube_csv = text(tube, "tube", "csv");
  p.tube_compare = boolean(tube, "tube", "compare", false);
  p.s_independence_tol = positive(tube, "tube", "s_independence_tol", 1e-8);
  p.radial_tol = positive(tube, "tube", "radial_tol", 1e-10);

  const json& grid = section_of(tree, "grid");
  check_keys(grid, "grid", {"n_s", "n_psi"});
  p.n_s = integer(grid, "grid", "n_s", 64);
  p.n_psi = integer(grid, "grid", "n_psi", 64);
  if (p.n_s < 8) fail("grid.n_s", "must be at least 8");
  if (p.n_psi < 8) fail("grid.n_psi", "must be at least 8");

  const json& fr = section_of(tree, "frenet");
  check_keys(fr, "frenet", {"k1_min", "normal_hint", "samples", "arclength_samples", "constancy_tol"});
  p.frenet.k1_min = positive(fr, "frenet", "k1_min", 1e-8);
  p.frenet.allow_normal_hint = boolean(fr, "frenet", "normal_hint", static_cast<bool>(p.curve.normal_hint));
  p.frenet.arclength_samples = integer(fr, "frenet", "arclength_samples", 64);
  if (p.frenet.arclength_samples < 16) fail("frenet.arclength_samples", "must be at least 16");
  p.frenet_samples = integer(fr, "frenet", "samples", 16);
  if (p.frenet_samples < 2) fail("frenet.samples", "must be at least 2");
  // Finite-difference Christoffels put a ~1e-9 floor under the scalars of user charts.
  const bool fd_chart = p.chart->christoffel_mode() == ChristoffelMode::FiniteDifference;
  p.constancy_tol = positive(fr, "frenet", "constancy_tol", fd_chart ? 1e-7 : 1e-9);

  const json& flow = section_of(tree, "flow");
  check_keys(flow, "flow", {"tol", "length", "max_step", "sample_interval", "seeds"});
  p.flow_tol = positive(flow, "flow", "tol", 1e-11);
  p.flow_length = number(flow, "flow", "length", 500.0);
  p.flow_max_step = positive(flow, "flow", "max_step", std::numeric_limits<double>::infinity());
  p.flow_sample_interval = number(flow, "flow", "sample_interval", 0.0);
  if (p.flow_sample_interval < 0.0) fail("flow.sample_interval", "must be non-negative");
  if (flow.contains("seeds")) {
    const json& seeds = flow.at("seeds");
    if (!seeds.is_array() || seeds.empty()) fail("flow.seeds", "expected a non-empty array");
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const std::string key = "flow.seeds[" + std::to_string(k) + "]";
      check_keys(seeds[k], key, {"s", "psi", "angle", "p_s", "p_psi"});
      number(seeds[k], key, "s", 0.0);
      number(seeds[k], key, "psi", 0.0);
      const bool has_angle = seeds[k].contains("angle");
      const bool has_p = seeds[k].contains("p_s") || seeds[k].contains("p_psi");
      if (has_angle == has_p) fail(key, "give either angle or (p_s, p_psi)");
      if (has_angle) number(seeds[k], key, "angle");
      if (has_p) {
        number(seeds[k], key, "p_s");
        number(seeds[k], key, "p_psi");
      }
      p.flow_seeds.push_back(seeds[k]);
    }
  } else {
    p.flow_seeds.push_back(json{{"s", 0.0}, {"psi", 0.3}, {"angle", 0.7}});
  }

  const json& sec = section_of(tree, "section");
  check_keys(sec, "section", {"seeds", "n_crossings", "period", "direction", "crossing_tol", "max_length",
                              "regularity"});
  p.section.seeds = sec.contains("seeds") ? section_seeds(sec.at("seeds"), "section.seeds") : figure_seed_grid();
  p.section.n_crossings = integer(sec, "section", "n_crossings", 400);
  if (p.section.n_crossings < 1) fail("section.n_crossings", "must be positive");
  p.section.section_period = number(sec, "section", "period", 0.0);
  if (p.section.section_period < 0.0) fail("section.period", "must be non-negative");
  p.section.direction = integer(sec, "section", "direction", 1);
  if (p.section.direction != 1 && p.section.direction != -1) fail("section.direction", "expected 1 or -1");
  p.section.crossing_tol = positive(sec, "section", "crossing_tol", 1e-10);
  p.section.max_length = positive(sec, "section", "max_length", 1e7);
  const json& reg = section_of(sec, "regularity");
  check_keys(reg, "section.regularity", {"order", "threshold", "min_points", "momentum_scale"});
  p.regularity.order = integer(reg, "section.regularity", "order", 16);
  p.regularity.threshold = positive(reg, "section.regularity", "threshold", 1e-3);
  p.regularity.min_points = integer(reg, "section.regularity", "min_points", 50);
  p.regularity.momentum_scale = positive(reg, "section.regularity", "momentum_scale", 1.0);

  const json& cert = section_of(tree, "certify");
  check_keys(cert, "certify", {"rho0", "samples", "tolerance", "step_fraction", "n_psi", "n_rho"});
  const std::optional<double> rho_default =
      p.profile ? std::optional<double>(p.profile->rho0()) : std::optional<double>();
  if (p.kind == "certify-s-independence" || cert.contains("rho0")) {
    p.certify_rho0 = positive(cert, "certify", "rho0", rho_default);
  }
  p.certify_samples = integer(cert, "certify", "samples", 2);
  if (p.certify_samples < 1) fail("certify.samples", "must be positive");
  p.certificate.tolerance = positive(cert, "certify", "tolerance", 1e-7);
  p.certificate.step_fraction = positive(cert, "certify", "step_fraction", 1e-3);
  p.certificate.n_psi = integer(cert, "certify", "n_psi", 4);
  p.certificate.n_rho = integer(cert, "certify", "n_rho", 4);
  if (p.certificate.n_psi < 1) fail("certify.n_psi", "must be positive");
  if (p.certificate.n_rho < 1) fail("certify.n_rho", "must be positive");

  const json& mesh = section_of(tree, "mesh");
  check_keys(mesh, "mesh", {"project"});
  p.mesh_project = boolean(mesh, "mesh", "project", true);

  const json& out = section_of(tree, "output");
  check_keys(out, "output", {"dir", "prefix"});
  p.out_dir = text(out, "output", "dir", std::string("."));
  std::string default_prefix = p.kind;
  std::replace(default_prefix.begin(), default_prefix.end(), '-', '_');
  p.prefix = text(out, "output", "prefix", default_prefix);
  if (p.prefix.empty() || p.prefix.find('/') != std::string::npos) fail("output.prefix", "must be a plain file stem");
  return p;
}

struct BuiltTube {
  std::optional<InducedMetric2D> metric;
  std::optional<MetricGrid> grid;
  std::string method;
};

NumericTubeOptions numeric_options(const Plan& p) {
  NumericTubeOptions o;
  o.n_s = p.n_s;
  o.n_psi = p.n_psi;
  o.radial.tolerances.rtol = p.radial_tol;
  o.radial.tolerances.atol = p.radial_tol * 1e-2;
  o.frenet = p.frenet;
  o.arclength_samples = p.frenet.arclength_samples;
  o.s_independence_tol = p.s_independence_tol;
  o.threads = p.threads;
  return o;
}

InducedMetric2D closed_form_tube(const Plan& p, RunSummary& summary) {
  const auto k0 = p.chart->space_form();
  if (!k0) fail("tube.method", "closed_form needs a space-form manifold");
  const TubeProfile& profile = *p.profile;
  if (p.curve_kind == "ellipse" && profile.kind() == TubeProfile::Kind::Circular) {
    return ellipse_tube_metric(p.ellipse_a, p.ellipse_b, profile.rho0());
  }
  const ArcLengthTable table(p.curve, p.frenet.arclength_samples);
  const double L = table.length();
  const auto check = constancy_check(p.curve, 16, p.constancy_tol, p.frenet);
  if (check.constant) {
    const auto k = curvature_scalars(p.curve, 0.0, p.frenet);
    CurvatureFunctions cf = CurvatureFunctions::constants(k.k1, k.k2, p.curve.closed ? L : 0.0);
    cf.s_length = L;
    return generalized_tube_metric(*k0, cf, profile);
  }
  if (!p.curve.closed) {
    fail("tube.method", "closed_form needs constant curvature scalars or a closed curve; use numeric");
  }
  constexpr int kNodes = 256;
  std::vector<double> s_nodes(kNodes);
  for (int i = 0; i < kNodes; ++i) s_nodes[static_cast<std::size_t>(i)] = L * i / kNodes;
  const auto frames = frenet_evolve(p.curve, table, s_nodes, p.frenet);
  std::vector<double> k1(kNodes);
  std::vector<double> k2(kNodes);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    k1[i] = frames[i].k1;
    k2[i] = frames[i].k2;
  }
  const auto f1 = std::make_shared<FourierSeries>(FourierSeries::interpolate(k1, L));
  const auto f2 = std::make_shared<FourierSeries>(FourierSeries::interpolate(k2, L));
  const double tail = std::max(f1->tail(8), f2->tail(8));
  if (tail > 1e-10) {
    summary.warnings.push_back("curvature series truncation estimate " + fmt(tail));
  }
  CurvatureFunctions cf;
  cf.k1 = [f1](double s) { return (*f1)(s); };
  cf.k2 = [f2](double s) { return (*f2)(s); };
  cf.dk1 = [f1](double s) {
    double v, d1, d2;
    f1->evaluate(s, v, d1, d2);
    return d1;
  };
  cf.dk2 = [f2](double s) {
    double v, d1, d2;
    f2->evaluate(s, v, d1, d2);
    return d1;
  };
  cf.s_period = L;
  cf.s_length = L;
  return generalized_tube_metric(*k0, cf, profile);
}

BuiltTube build_tube(const Plan& p, RunSummary& summary) {
  BuiltTube out;
  std::string method = p.tube_method;
  if (method == "auto") method = p.chart->space_form() ? "closed_form" : "numeric";
  out.method = method;
  if (method == "csv") {
    out.grid = read_metric_csv(p.tube_csv);
    out.metric = interpolate_metric(*out.grid, p.s_independence_tol);
  } else if (method == "closed_form") {
    out.metric = closed_form_tube(p, summary);
  } else {
    out.grid = sample_tube_metric(*p.chart, p.curve, *p.profile, numeric_options(p));
    out.metric = interpolate_metric(*out.grid, p.s_independence_tol);
  }
  return out;
}

MetricGrid grid_from_metric(const InducedMetric2D& metric, int n_s, int n_psi) {
  MetricGrid g;
  g.n_s = n_s;
  g.n_psi = n_psi;
  g.s_closed = metric.s_closed();
  g.s_length = metric.s_closed() ? metric.s_period() : metric.s_length();
  g.E.resize(n_s, n_psi);
  g.F.resize(n_s, n_psi);
  g.G.resize(n_s, n_psi);
  for (int i = 0; i < n_s; ++i) {
    for (int j = 0; j < n_psi; ++j) {
      const MetricSample m = metric(g.s_at(i), g.psi_at(j));
      g.E(i, j) = m.E;
      g.F(i, j) = m.F;
      g.G(i, j) = m.G;
    }
  }
  return g;
}

std::string path_in(const Plan& p, const std::string& suffix) {
  return (std::filesystem::path(p.out_dir) / (p.prefix + suffix)).string();
}

std::vector<std::string> header_for(const ExperimentConfig& config, const std::string& what) {
  std::vector<std::string> h = {"geotubes " + config.kind + ": " + what};
  const auto echo = config_header(config);
  h.insert(h.end(), echo.begin(), echo.end());
  return h;
}

void run_frenet(const ExperimentConfig& config, const Plan& p, RunSummary& summary) {
  const ArcLengthTable table(p.curve, p.frenet.arclength_samples);
  const double L = table.length();
  const int n = p.frenet_samples;
  std::vector<double> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = p.curve.closed ? L * i / n : L * i / (n - 1);
  const auto frames = frenet_evolve(p.curve, table, s, p.frenet);
  CsvTable t;
  t.columns = {"s", "t", "x1", "x2", "x3", "T1", "T2", "T3", "N1", "N2", "N3", "B1", "B2", "B3", "k1", "k2"};
  double k1_min = std::numeric_limits<double>::infinity();
  double k1_max = -k1_min;
  double k2_min = k1_min;
  double k2_max = -k1_min;
  int hinted = 0;
  for (const auto& f : frames) {
    t.rows.push_back({f.s, f.t, f.x(0), f.x(1), f.x(2), f.T(0), f.T(1), f.T(2), f.N(0), f.N(1), f.N(2), f.B(0),
                      f.B(1), f.B(2), f.k1, f.k2});
    k1_min = std::min(k1_min, f.k1);
    k1_max = std::max(k1_max, f.k1);
    k2_min = std::min(k2_min, f.k2);
    k2_max = std::max(k2_max, f.k2);
    hinted += f.from_normal_hint ? 1 : 0;
  }
  const std::string file = path_in(p, "_frenet.csv");
  write_csv(file, t, header_for(config, "Frenet frame samples"));
  summary.files.push_back(file);
  const auto constancy = constancy_check(p.curve, std::max(16, n), p.constancy_tol, p.frenet);
  summary.rows.push_back({"length", fmt(L, 15)});
  summary.rows.push_back({"k1 range", fmt(k1_min, 12) + " .. " + fmt(k1_max, 12)});
  summary.rows.push_back({"k2 range", fmt(k2_min, 12) + " .. " + fmt(k2_max, 12)});
  summary.rows.push_back({"constant scalars", constancy.constant ? "yes" : "no"});
  summary.rows.push_back({"max deviation", fmt(constancy.max_deviation)});
  if (hinted > 0) summary.rows.push_back({"normal-hint frames", std::to_string(hinted)});
}

void run_tube_metric(const ExperimentConfig& config, const Plan& p, RunSummary& summary) {
  BuiltTube tube = build_tube(p, summary);
  MetricGrid grid = tube.grid ? *tube.grid : grid_from_metric(*tube.metric, p.n_s, p.n_psi);
  std::vector<std::string> header = header_for(config, "induced metric (" + tube.method + ")");
  header.insert(header.end(), grid.header.begin(), grid.header.end());
  grid.header = header;
  const std::string file = path_in(p, "_metric.csv");
  write_metric_csv(file, grid);
  summary.files.push_back(file);
  double min_det = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.n_s; ++i) {
    for (int j = 0; j < grid.n_psi; ++j) {
      min_det = std::min(min_det, grid.E(i, j) * grid.G(i, j) - grid.F(i, j) * grid.F(i, j));
    }
  }
  summary.rows.push_back({"method", tube.method});
  summary.rows.push_back({"grid", std::to_string(grid.n_s) + " x " + std::to_string(grid.n_psi)});
  summary.rows.push_back({"s length", fmt(grid.s_length, 15)});
  summary.rows.push_back({"min EG - F^2", fmt(min_det)});
  summary.rows.push_back({"s variation", fmt(grid.s_variation())});
  summary.rows.push_back({"s independent", tube.metric->s_independent() ? "yes" : "no"});
  if (p.tube_compare) {
    if (!p.chart->space_form()) fail("tube.compare", "comparison needs a space-form manifold");
    const InducedMetric2D exact = closed_form_tube(p, summary);
    MetricGrid numeric = tube.method == "numeric" ? grid
                                                  : sample_tube_metric(*p.chart, p.curve, *p.profile,
                                                                       numeric_options(p));
    double err = 0.0;
    for (int i = 0; i < numeric.n_s; ++i) {
      for (int j = 0; j < numeric.n_psi; ++j) {
        const MetricSample m = exact(numeric.s_at(i), numeric.psi_at(j));
        err = std::max({err, std::abs(m.E - numeric.E(i, j)), std::abs(m.F - numeric.F(i, j)),
                        std::abs(m.G - numeric.G(i, j))});
      }
    }
    summary.rows.push_back({"numeric vs closed form", fmt(err)});
  }
}

FlowState flow_seed(const InducedMetric2D& metric, const json& seed) {
  const Vec2 q(number(seed, "", "s", 0.0), number(seed, "", "psi", 0.0));
  if (seed.contains("angle")) return unit_speed_seed(metric, q, number(seed, "", "angle"));
  FlowState st;
  st.q = q;
  st.p = Vec2(number(seed, "", "p_s"), number(seed, "", "p_psi"));
  return st;
}

void run_geodesic(const ExperimentConfig& config, const Plan& p, RunSummary& summary) {
  const BuiltTube tube = build_tube(p, summary);
  const InducedMetric2D& metric = *tube.metric;
  std::vector<FlowState> seeds;
  for (const auto& s : p.flow_seeds) seeds.push_back(flow_seed(metric, s));
  FlowOptions fo;
  fo.tol = p.flow_tol;
  fo.max_step = p.flow_max_step;
  fo.sample_interval = p.flow_sample_interval;
  const auto trajectories = integrate_batch(metric, seeds, p.flow_length, fo, p.threads);
  summary.rows.push_back({"method", tube.method});
  summary.rows.push_back({"length", fmt(p.flow_length)});
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const std::string file = path_in(p, "_geodesic_" + std::to_string(k) + ".csv");
    write_trajectory_csv(file, trajectories[k], metric, header_for(config, "geodesic " + std::to_string(k)));
    summary.files.push_back(file);
    const std::string tag = "seed " + std::to_string(k);
    summary.rows.push_back({tag + " H drift", fmt(trajectories[k].max_energy_error)});
    summary.rows.push_back({tag + " p_s drift", fmt(trajectories[k].max_ps_drift)});
  }
}

void run_poincare(const ExperimentConfig& config, const Plan& p, RunSummary& summary) {
  const BuiltTube tube = build_tube(p, summary);
  SectionConfig sc = p.section;
  sc.flow_tol = p.flow_tol;
  sc.threads = p.threads;
  const SectionResult result = section(*tube.metric, sc);
  CsvTable t;
  t.columns = {"seed", "crossing", "psi", "p_psi", "p_s", "H", "s"};
  std::vector<ScatterPoint> scatter;
  for (const auto& pt : result.points) {
    t.rows.push_back({static_cast<double>(pt.seed_index), static_cast<double>(pt.crossing_index), pt.psi, pt.p_psi,
                      pt.p_s, pt.H, pt.s});
    scatter.push_back({pt.psi, pt.p_psi, pt.seed_index});
  }
  const std::string csv = path_in(p, "_section.csv");
  const std::string svg = path_in(p, "_section.svg");
  write_csv(csv, t, header_for(config, "Poincare section points"));
  write_svg_scatter(svg, scatter, ScatterAxes{}, header_for(config, "Poincare section plot"));
  summary.files.push_back(csv);
  summary.files.push_back(svg);
  summary.rows.push_back({"method", tube.method});
  summary.rows.push_back({"seeds", std::to_string(result.seeds.size())});
  summary.rows.push_back({"points", std::to_string(result.points.size())});
  std::vector<SectionPoint> complete_points;
  for (const auto& pt : result.points) {
    if (result.seeds[static_cast<std::size_t>(pt.seed_index)].complete) complete_points.push_back(pt);
  }
  const auto reg = regularity_score(complete_points, p.regularity);
  for (const auto& o : result.seeds) {
    std::ostringstream row;
    row << o.crossings << " crossings, p_s drift " << fmt(o.max_ps_drift);
    for (const auto& r : reg) {
      if (r.seed_index == o.seed_index) {
        row << ", residual " << fmt(r.residual) << (r.regular ? " regular" : " irregular")
            << (r.rotational ? " (rotational)" : " (librational)");
      }
    }
    if (!o.complete) {
      row << ", incomplete: " << o.message;
      summary.verdict = false;
    }
    summary.rows.push_back({"seed " + std::to_string(o.seed_index), row.str()});
  }
}

void run_mesh(const ExperimentConfig& config, const Plan& p, RunSummary& summary) {
  MeshOptions mo;
  mo.radial.tolerances.rtol = p.radial_tol;
  mo.radial.tolerances.atol = p.radial_tol * 1e-2;
  mo.frenet = p.frenet;
  mo.arclength_samples = p.frenet.arclength_samples;
  mo.threads = p.threads;
  const SurfaceMesh raw = sample_tube_mesh(*p.chart, p.curve, *p.profile, p.n_s, p.n_psi, mo);
  ProjectionReport report;
  const SurfaceMesh mesh = p.mesh_project ? project_mesh_to_r3(*p.chart, raw, &report) : raw;
  const std::string file = path_in(p, "_mesh.obj");
  write_obj(file, mesh, header_for(config, p.mesh_project ? "tube mesh in R^3" : "tube mesh in chart coordinates"));
  summary.files.push_back(file);
  summary.rows.push_back({"vertices", std::to_string(mesh.vertices.size())});
  summary.rows.push_back({"triangles", std::to_string(2 * mesh.quads.size())});
  summary.rows.push_back({"min triangle area", fmt(min_triangle_area(mesh))});
  if (p.mesh_project && (p.chart->kind() == ChartKind::Sphere3Hopf ||
                         p.chart->kind() == ChartKind::Ellipsoid3Degenerate)) {
    summary.rows.push_back({"max | |sigma| - 1 |", fmt(report.max_sphere_error)});
  }
  if (report.near_pole > 0) {
    summary.warnings.push_back(std::to_string(report.near_pole) + " vertices within 1e-3 of the projection pole");
  }
}

void run_certify(const ExperimentConfig& config, const Plan& p, RunSummary& summary) {
  CertificateOptions co = p.certificate;
  co.radial.tolerances.rtol = p.radial_tol;
  co.radial.tolerances.atol = p.radial_tol * 1e-2;
  co.frenet = p.frenet;
  co.arclength_samples = p.frenet.arclength_samples;
  const auto report = s_independence_certificate(*p.chart, p.curve, p.certify_rho0, p.certify_samples, co);
  CsvTable t;
  t.columns = {"sample", "sectional_derivative", "coordinate_derivative"};
  for (std::size_t k = 0; k < report.sectional_derivative.size(); ++k) {
    t.rows.push_back({static_cast<double>(k), report.sectional_derivative[k], report.coordinate_derivative[k]});
  }
  const std::string file = path_in(p, "_certificate.csv");
  write_csv(file, t, header_for(config, "s-independence certificate"));
  summary.files.push_back(file);
  summary.rows.push_back({"rho0", fmt(p.certify_rho0)});
  summary.rows.push_back({"s step", fmt(report.step)});
  summary.rows.push_back({"max sectional derivative", fmt(report.max_sectional_derivative)});
  summary.rows.push_back({"max coordinate derivative", fmt(report.max_coordinate_derivative)});
  summary.rows.push_back({"tolerance", fmt(report.tolerance)});
  summary.rows.push_back({"verdict", report.verdict ? "true" : "false"});
  summary.verdict = report.verdict;
}

}  // namespace

std::string canonical_kind(const std::string& kind) {
  if (kind == "certify") return "certify-s-independence";
  static const std::set<std::string> kinds = {"frenet", "tube-metric", "geodesic",
                                              "poincare", "mesh", "certify-s-independence"};
  if (!kinds.count(kind)) {
    fail("kind", "unknown experiment kind '" + kind +
                     "' (frenet, tube-metric, geodesic, poincare, mesh, certify-s-independence)");
  }
  return kind;
}

std::shared_ptr<const ChartMetric> build_chart(const json& m) {
  const std::string path = "manifold";
  if (!m.is_object()) fail(path, "expected an object");
  const std::string kind = text(m, path, "kind");
  if (kind == "user") return user_chart(m);
  if (kind == "ellipsoid3_degenerate") {
    check_keys(m, path, {"kind", "a", "b"});
    return std::make_shared<const ChartMetric>(
        ChartMetric::ellipsoid3_degenerate(positive(m, path, "a"), positive(m, path, "b")));
  }
  check_keys(m, path, {"kind"});
  if (kind == "euclidean3") return std::make_shared<const ChartMetric>(ChartMetric::euclidean3());
  if (kind == "euclidean3_cylindrical") {
    return std::make_shared<const ChartMetric>(ChartMetric::euclidean3_cylindrical());
  }
  if (kind == "sphere3_hopf") return std::make_shared<const ChartMetric>(ChartMetric::sphere3_hopf());
  if (kind == "hyperbolic3_halfspace") {
    return std::make_shared<const ChartMetric>(ChartMetric::hyperbolic3_halfspace());
  }
  fail(join(path, "kind"), "unknown manifold '" + kind +
                               "' (euclidean3, euclidean3_cylindrical, sphere3_hopf, hyperbolic3_halfspace, "
                               "ellipsoid3_degenerate, user)");
}

ParamCurve build_curve(const json& c, const std::shared_ptr<const ChartMetric>& chart) {
  const std::string path = "curve";
  if (!c.is_object()) fail(path, "expected an object");
  const std::string kind = text(c, path, "kind");
  ParamCurve curve;
  if (kind == "circle") {
    check_keys(c, path, {"kind", "radius"});
    require_chart(*chart, ChartKind::Euclidean3, kind);
    curve = catalog::circle(positive(c, path, "radius"));
  } else if (kind == "helix" || kind == "helix_cylindrical") {
    check_keys(c, path, {"kind", "a", "c"});
    const bool cyl = kind == "helix_cylindrical";
    require_chart(*chart, cyl ? ChartKind::Euclidean3Cylindrical : ChartKind::Euclidean3, kind);
    const double a = positive(c, path, "a");
    const double pitch = number(c, path, "c");
    curve = cyl ? catalog::helix_cylindrical(a, pitch) : catalog::helix(a, pitch);
  } else if (kind == "ellipse") {
    check_keys(c, path, {"kind", "a", "b"});
    require_chart(*chart, ChartKind::Euclidean3, kind);
    curve = catalog::ellipse(positive(c, path, "a"), positive(c, path, "b"));
  } else if (kind == "straight_line") {
    check_keys(c, path, {"kind", "length"});
    require_chart(*chart, ChartKind::Euclidean3, kind);
    curve = catalog::straight_line(positive(c, path, "length"));
  } else if (kind == "hopf") {
    check_keys(c, path, {"kind", "alpha", "beta", "eta0"});
    require_chart(*chart, ChartKind::Sphere3Hopf, kind);
    curve = catalog::hopf_curve(number(c, path, "alpha"), number(c, path, "beta"), number(c, path, "eta0"));
  } else if (kind == "ellipsoid") {
    check_keys(c, path, {"kind", "alpha", "beta", "eta0", "eta_amplitude"});
    require_chart(*chart, ChartKind::Ellipsoid3Degenerate, kind);
    curve = catalog::ellipsoid_curve(chart->params().at("a"), chart->params().at("b"), number(c, path, "alpha"),
                                     number(c, path, "beta"), number(c, path, "eta0"),
                                     number(c, path, "eta_amplitude", 0.0));
  } else if (kind == "expression") {
    check_keys(c, path, {"kind", "name", "x", "t_min", "t_max", "closed", "constants", "normal_hint"});
    const auto constants = read_constants(c, path);
    auto components = [&](const char* key) {
      const json& arr = c.at(key);
      if (!arr.is_array() || arr.size() != 3) fail(join(path, key), "expected three expressions in t");
      std::vector<Expression> e;
      for (int i = 0; i < 3; ++i) {
        e.push_back(parse_expression(arr[i], join(path, key) + "[" + std::to_string(i) + "]", {"t"}, constants));
      }
      return [e](double t) {
        const double arg[1] = {t};
        return Vec3(e[0].evaluate(arg), e[1].evaluate(arg), e[2].evaluate(arg));
      };
    };
    if (!c.contains("x")) fail(join(path, "x"), "missing required value");
    curve.name = text(c, path, "name", std::string("expression curve"));
    curve.pos = components("x");
    curve.t_min = number(c, path, "t_min", 0.0);
    curve.t_max = number(c, path, "t_max", kTwoPi);
    if (!(curve.t_max > curve.t_min)) fail(join(path, "t_max"), "must exceed t_min");
    curve.closed = boolean(c, path, "closed", false);
    curve.period = curve.closed ? curve.t_max - curve.t_min : 0.0;
    if (c.contains("normal_hint")) curve.normal_hint = components("normal_hint");
  } else {
    fail(join(path, "kind"), "unknown curve '" + kind +
                                 "' (circle, helix, helix_cylindrical, ellipse, straight_line, hopf, ellipsoid, "
                                 "expression)");
  }
  curve.chart = chart;
  return curve;
}

TubeProfile build_profile(const json& pr) {
  const std::string path = "profile";
  if (!pr.is_object()) fail(path, "expected an object");
  const std::string kind = text(pr, path, "kind");
  TubeProfile profile = TubeProfile::circular(1.0);
  if (kind == "circular") {
    check_keys(pr, path, {"kind", "rho0"});
    profile = TubeProfile::circular(positive(pr, path, "rho0"));
  } else if (kind == "lobed") {
    check_keys(pr, path, {"kind", "rho0", "amp", "lobes"});
    const int lobes = integer(pr, path, "lobes");
    if (lobes < 1) fail(join(path, "lobes"), "must be at least 1");
    profile = TubeProfile::lobed(positive(pr, path, "rho0"), number(pr, path, "amp"), lobes);
  } else if (kind == "fourier") {
    check_keys(pr, path, {"kind", "rho0", "f", "g"});
    if (!pr.contains("f")) fail(join(path, "f"), "missing required value");
    if (!pr.contains("g")) fail(join(path, "g"), "missing required value");
    profile = TubeProfile::fourier(positive(pr, path, "rho0"), series_from(pr.at("f"), join(path, "f")),
                                   series_from(pr.at("g"), join(path, "g")));
  } else {
    fail(join(path, "kind"), "unknown profile '" + kind + "' (circular, lobed, fourier)");
  }
  try {
    profile.validate();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ProfileNotSimple) fail(path, e.what());
    throw;
  }
  return profile;
}

ExperimentConfig parse_config(const std::string& source) {
  json tree;
  try {
    tree = json::parse(source);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("config is not valid JSON: ") + e.what());
  }
  const Plan plan = make_plan(tree);
  tree["kind"] = plan.kind;
  return {plan.kind, tree};
}

std::string extract_config_block(const std::string& file_text) {
  std::istringstream in(file_text);
  std::string line;
  std::string block;
  bool inside = false;
  bool done = false;
  while (std::getline(in, line)) {
    std::string body = line;
    if (body.rfind("# ", 0) == 0) {
      body = body.substr(2);
    } else if (body == "#") {
      body.clear();
    } else if (inside) {
      break;
    }
    if (!inside) {
      if (body == "config-begin") inside = true;
      continue;
    }
    if (body == "config-end") {
      done = true;
      break;
    }
    block += body + "\n";
  }
  if (!done) throw Error(ErrorKind::Config, "no echoed config block found");
  return block;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();
  const auto first = content.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && content[first] == '{') return parse_config(content);
  try {
    return parse_config(extract_config_block(content));
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void apply_overrides(ExperimentConfig& config, const ConfigOverrides& o) {
  json& t = config.tree;
  if (o.kind) {
    const std::string k = canonical_kind(*o.kind);
    if (t.contains("kind") && t["kind"].is_string() && canonical_kind(t["kind"].get<std::string>()) != k) {
      fail("kind", "config describes '" + t["kind"].get<std::string>() + "' but the subcommand is '" + k + "'");
    }
    t["kind"] = k;
  }
  if (o.out_dir) t["output"]["dir"] = *o.out_dir;
  if (o.seed_grid) t["section"]["seeds"] = "figure";
  if (o.grid) {
    t["grid"]["n_s"] = o.grid->first;
    t["grid"]["n_psi"] = o.grid->second;
  }
  if (o.tol) t["flow"]["tol"] = *o.tol;
  const Plan plan = make_plan(t);
  config.kind = plan.kind;
}

std::vector<std::string> config_header(const ExperimentConfig& config) {
  std::vector<std::string> lines = {"config-begin"};
  std::istringstream in(config.tree.dump(2));
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  lines.push_back("config-end");
  return lines;
}

RunSummary run_experiment(const ExperimentConfig& config) {
  const Plan plan = make_plan(config.tree);
  RunSummary summary;
  summary.kind = plan.kind;
  std::error_code ec;
  std::filesystem::create_directories(plan.out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + plan.out_dir + ": " + ec.message());
  if (plan.kind == "frenet") {
    run_frenet(config, plan, summary);
  } else if (plan.kind == "tube-metric") {
    run_tube_metric(config, plan, summary);
  } else if (plan.kind == "geodesic") {
    run_geodesic(config, plan, summary);
  } else if (plan.kind == "poincare") {
    run_poincare(config, plan, summary);
  } else if (plan.kind == "mesh") {
    run_mesh(config, plan, summary);
  } else {
    run_certify(config, plan, summary);
  }
  return summary;
}

std::string format_summary(const RunSummary& s) {
  std::size_t width = 0;
  for (const auto& [k, v] : s.rows) width = std::max(width, k.size());
  std::ostringstream os;
  os << s.kind << "\n";
  for (const auto& [k, v] : s.rows) os << "  " << std::left << std::setw(static_cast<int>(width)) << k << "  " << v << "\n";
  for (const auto& w : s.warnings) os << "  warning: " << w << "\n";
  for (const auto& f : s.files) os << "  wrote " << f << "\n";
  return os.str();
}

}  // namespace geotubes
