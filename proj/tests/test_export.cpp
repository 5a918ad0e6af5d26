#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "geotubes/config.hpp"
#include "geotubes/errors.hpp"
#include "geotubes/export.hpp"

using namespace geotubes;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Lines that are not '#' comments.
std::string data_lines(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line, out;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') out += line + "\n";
  }
  return out;
}

int count_prefix(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) n += line.rfind(prefix, 0) == 0 ? 1 : 0;
  return n;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("geotubes_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ErrorKind config_error_kind(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

std::string config_error_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

const char* kTorusFrenet = R"({
  "kind": "frenet",
  "manifold": {"kind": "euclidean3"},
  "curve": {"kind": "circle", "radius": 2},
  "frenet": {"samples": 8}
})";

}  // namespace

TEST(Projection, Examples) {
  EXPECT_LT((embed_and_project_s3(Vec3(kPi / 2, 0, 0)) - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((embed_and_project_s3(Vec3(0, 0, kPi)) - Vec3(0, 0, -1)).norm(), 1e-15);
  EXPECT_LT((hopf_embedding(Vec3(0, 0, kPi)) - Vec4(0, 0, -1, 0)).norm(), 1e-15);
}

TEST(Projection, PoleSingularity) {
  try {
    embed_and_project_s3(Vec3(0, 0, kPi / 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PoleSingularity);
  }
}

TEST(Projection, EmbeddingLandsOnTheUnitSphere) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 h(kPi / 2 * u(rng), 2 * kPi * u(rng), 2 * kPi * u(rng));
    EXPECT_NEAR(hopf_embedding(h).norm(), 1.0, 1e-12);
  }
}

TEST(Projection, StereographicIsInvertible) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Vec4 x = hopf_embedding(Vec3(0.1 + 1.3 * u(rng), 2 * kPi * u(rng), 2 * kPi * u(rng)));
    const Vec3 y = stereographic_projection(x);
    const double n2 = y.squaredNorm();
    const Vec4 back(2 * y(0) / (n2 + 1), 2 * y(1) / (n2 + 1), 2 * y(2) / (n2 + 1), (n2 - 1) / (n2 + 1));
    EXPECT_LT((back - x).norm(), 1e-12);
  }
}

TEST(Mesh, TorusVerticesLieOnTheImplicitTorus) {
  const ParamCurve curve = catalog::circle(2.0);
  const SurfaceMesh mesh = sample_tube_mesh(*curve.chart, curve, TubeProfile::circular(1.0), 24, 16);
  ASSERT_EQ(mesh.vertices.size(), 24u * 16u);
  EXPECT_EQ(mesh.quads.size(), 24u * 16u);
  EXPECT_TRUE(mesh.wrap_s);
  EXPECT_TRUE(mesh.wrap_psi);
  for (const auto& v : mesh.vertices) {
    EXPECT_NEAR(std::pow(std::hypot(v(0), v(1)) - 2.0, 2) + v(2) * v(2), 1.0, 1e-8);
  }
  for (const auto& q : mesh.quads) {
    for (int idx : q) {
      EXPECT_GE(idx, 0);
      EXPECT_LT(idx, static_cast<int>(mesh.vertices.size()));
    }
  }
}

TEST(Mesh, SegmentGivesARightCylinder) {
  ParamCurve line = catalog::straight_line(3.0);
  line.normal_hint = [](double) { return Vec3(0, 1, 0); };
  MeshOptions o;
  o.frenet.allow_normal_hint = true;
  const SurfaceMesh mesh = sample_tube_mesh(*line.chart, line, TubeProfile::circular(0.5), 8, 12, o);
  EXPECT_FALSE(mesh.wrap_s);
  EXPECT_EQ(mesh.quads.size(), 7u * 12u);
  for (int i = 0; i < mesh.n_s; ++i) {
    for (int j = 0; j < mesh.n_psi; ++j) {
      const Vec3& v = mesh.vertices[static_cast<std::size_t>(i * mesh.n_psi + j)];
      EXPECT_NEAR(std::hypot(v(1), v(2)), 0.5, 1e-10);
      EXPECT_NEAR(v(0), 3.0 * i / 7.0, 1e-10);
    }
  }
}

TEST(Mesh, HopfKnotMeshProjects) {
  const ParamCurve curve = catalog::hopf_curve(5, 2, kPi / 4);
  const SurfaceMesh raw = sample_tube_mesh(*curve.chart, curve, TubeProfile::lobed(0.2, 0.3, 3), 64, 12);
  ProjectionReport report;
  const SurfaceMesh mesh = project_mesh_to_r3(*curve.chart, raw, &report);
  EXPECT_LT(report.max_sphere_error, 1e-12);
  EXPECT_GT(min_triangle_area(mesh), 0.0);
  for (const auto& v : mesh.vertices) EXPECT_TRUE(v.allFinite());
}

TEST(Writers, UnitQuadObj) {
  SurfaceMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
  m.quads = {{0, 1, 2, 3}};
  const fs::path p = fresh_dir("obj") / "quad.obj";
  write_obj(p.string(), m, {"unit quad"});
  const std::string text = slurp(p);
  EXPECT_EQ(count_prefix(text, "v "), 4);
  EXPECT_EQ(count_prefix(text, "f "), 2);
  EXPECT_EQ(count_prefix(text, "# "), 1);
  EXPECT_NE(text.find("f 1 2 3"), std::string::npos);
  EXPECT_NE(text.find("f 1 3 4"), std::string::npos);
}

TEST(Writers, DoublyClosedObjCounts) {
  const ParamCurve curve = catalog::circle(2.0);
  const SurfaceMesh mesh = sample_tube_mesh(*curve.chart, curve, TubeProfile::circular(0.5), 10, 8);
  const fs::path p = fresh_dir("torus_obj") / "torus.obj";
  write_obj(p.string(), mesh);
  const std::string text = slurp(p);
  EXPECT_EQ(count_prefix(text, "v "), 80);
  EXPECT_EQ(count_prefix(text, "f "), 160);
}

TEST(Writers, NonFiniteVertexIsRefused) {
  SurfaceMesh m;
  m.vertices = {Vec3(std::nan(""), 0, 0)};
  EXPECT_THROW(write_obj((fresh_dir("nan") / "x.obj").string(), m), Error);
}

TEST(Writers, EmptySvgHasAxesOnly) {
  const fs::path p = fresh_dir("svg") / "empty.svg";
  write_svg_scatter(p.string(), {});
  const std::string text = slurp(p);
  EXPECT_NE(text.find("<svg"), std::string::npos);
  EXPECT_NE(text.find("id=\"axes\""), std::string::npos);
  EXPECT_NE(text.find("</svg>"), std::string::npos);
  EXPECT_EQ(text.find("<circle"), std::string::npos);
}

TEST(Writers, SvgMappingIsAffineAndCentered) {
  const ScatterAxes axes;
  const auto c = svg_map(axes, kPi, 0.0);
  EXPECT_NEAR(c(0), axes.width / 2.0, 1e-12);
  EXPECT_NEAR(c(1), axes.height / 2.0, 1e-12);
  const auto a = svg_map(axes, 0.0, -1.0);
  const auto b = svg_map(axes, 2 * kPi, 1.0);
  EXPECT_NEAR(a(0), axes.margin, 1e-12);
  EXPECT_NEAR(b(0), axes.width - axes.margin, 1e-12);
  EXPECT_NEAR(a(1), axes.height - axes.margin, 1e-12);
  EXPECT_NEAR(b(1), axes.margin, 1e-12);
  const auto mid = svg_map(axes, kPi / 2, 0.5);
  EXPECT_NEAR(mid(0), 0.5 * (a(0) + c(0)), 1e-12);
  EXPECT_NEAR(mid(1), 0.5 * (b(1) + c(1)), 1e-12);
}

TEST(Writers, UnwritablePathNamesThePath) {
  try {
    write_csv("/nonexistent-dir/x.csv", CsvTable{{"a"}, {{1.0}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x.csv"), std::string::npos);
  }
}

TEST(Config, UnknownKeysAreNamed) {
  EXPECT_EQ(config_error_kind(R"({"kind": "frenet", "manifold": {"kind": "euclidean3"},
                                  "curve": {"kind": "circle", "radius": 2, "radus": 3}})"),
            ErrorKind::Config);
  EXPECT_NE(config_error_message(R"({"kind": "frenet", "manifold": {"kind": "euclidean3"},
                                    "curve": {"kind": "circle", "radius": 2, "radus": 3}})")
                .find("curve.radus"),
            std::string::npos);
  EXPECT_NE(config_error_message(R"({"kind": "frenet", "manifold": {"kind": "euclidean3"},
                                    "curve": {"kind": "circle", "radius": 2}, "flow": {"tolerance": 1}})")
                .find("flow.tolerance"),
            std::string::npos);
}

TEST(Config, ValidationErrors) {
  EXPECT_NE(config_error_message(R"({"kind": "mesh", "manifold": {"kind": "euclidean3"},
                                    "curve": {"kind": "circle", "radius": 2}})")
                .find("profile"),
            std::string::npos);
  EXPECT_NE(config_error_message(R"({"kind": "nope"})").find("kind"), std::string::npos);
  EXPECT_NE(config_error_message(R"({"kind": "frenet", "manifold": {"kind": "sphere3_hopf"},
                                    "curve": {"kind": "circle", "radius": 2}})")
                .find("curve.kind"),
            std::string::npos);
  EXPECT_NE(config_error_message(R"({"kind": "frenet", "manifold": {"kind": "euclidean3"},
                                    "curve": {"kind": "circle", "radius": "2 *"}})")
                .find("curve.radius"),
            std::string::npos);
  EXPECT_NE(config_error_message(R"({"kind": "poincare", "manifold": {"kind": "euclidean3"},
                                    "curve": {"kind": "circle", "radius": 2},
                                    "profile": {"kind": "circular", "rho0": 1}, "grid": {"n_s": 4}})")
                .find("grid.n_s"),
            std::string::npos);
  EXPECT_EQ(config_error_kind("{not json"), ErrorKind::Parse);
}

TEST(Config, ExpressionValuesAndAliases) {
  const ExperimentConfig c = parse_config(R"({"kind": "certify", "manifold": {"kind": "ellipsoid3_degenerate",
      "a": 1, "b": "3/2"}, "curve": {"kind": "ellipsoid", "alpha": 5, "beta": 2, "eta0": "pi/4"},
      "certify": {"rho0": 0.5}})");
  EXPECT_EQ(c.kind, "certify-s-independence");
  const auto chart = build_chart(c.tree.at("manifold"));
  EXPECT_EQ(chart->params().at("b"), 1.5);
}

TEST(Config, UserMetricBuildsTheRoundSphere) {
  const ExperimentConfig c = load_config(std::string(GEOTUBES_CONFIG_DIR) + "/user_metric_frenet.json");
  const auto chart = build_chart(c.tree.at("manifold"));
  EXPECT_EQ(chart->christoffel_mode(), ChristoffelMode::FiniteDifference);
  EXPECT_NEAR(sectional_curvature(*chart, Vec3(0.7, 0.2, 1.0), Vec3(1, 0.3, 0), Vec3(0, 1, 2)), 1.0, 1e-6);
  EXPECT_FALSE(chart->in_domain(Vec3(-0.1, 0, 0)));
  const ParamCurve curve = build_curve(c.tree.at("curve"), chart);
  const auto k = curvature_scalars(curve, 1.0);
  EXPECT_NEAR(k.k1, 21.0 / 29.0, 1e-6);
  EXPECT_NEAR(k.k2, 20.0 / 29.0, 1e-6);
}

TEST(Config, AsymmetricUserMetricIsRejected) {
  EXPECT_NE(config_error_message(R"({"kind": "frenet", "manifold": {"kind": "user",
      "metric": [["1", "x1", "0"], ["0", "1", "0"], ["0", "0", "1"]]},
      "curve": {"kind": "expression", "x": ["t", "0", "0"]}})")
                .find("manifold.metric[1][0]"),
            std::string::npos);
}

TEST(Config, OverridesAndKindMismatch) {
  ExperimentConfig c = parse_config(kTorusFrenet);
  ConfigOverrides o;
  o.kind = "poincare";
  EXPECT_THROW(apply_overrides(c, o), Error);
  ConfigOverrides g;
  g.grid = std::make_pair(12, 10);
  g.tol = 1e-9;
  g.out_dir = "somewhere";
  apply_overrides(c, g);
  EXPECT_EQ(c.tree["grid"]["n_s"], 12);
  EXPECT_EQ(c.tree["flow"]["tol"], 1e-9);
  EXPECT_EQ(c.tree["output"]["dir"], "somewhere");
}

TEST(Config, ReplayFromOutputHeaderReproducesData) {
  const fs::path first = fresh_dir("replay_a");
  const fs::path second = fresh_dir("replay_b");
  ExperimentConfig c = parse_config(R"({
    "kind": "poincare",
    "manifold": {"kind": "euclidean3"},
    "curve": {"kind": "ellipse", "a": 2, "b": 2.5},
    "profile": {"kind": "circular", "rho0": 1},
    "section": {"seeds": [[0.0, 0.5], [0.5, -0.2]], "n_crossings": 60,
                "regularity": {"min_points": 20}},
    "output": {"prefix": "run"}
  })");
  ConfigOverrides o;
  o.out_dir = first.string();
  apply_overrides(c, o);
  const RunSummary s1 = run_experiment(c);
  ASSERT_EQ(s1.files.size(), 2u);
  for (const auto& f : s1.files) {
    const std::string text = slurp(f);
    EXPECT_NE(text.find("config-begin"), std::string::npos) << f;
  }
  ExperimentConfig replay = load_config((first / "run_section.svg").string());
  EXPECT_EQ(replay.tree, c.tree);
  ConfigOverrides o2;
  o2.out_dir = second.string();
  apply_overrides(replay, o2);
  run_experiment(replay);
  EXPECT_EQ(data_lines(first / "run_section.csv"), data_lines(second / "run_section.csv"));
  EXPECT_FALSE(data_lines(first / "run_section.csv").empty());
}

TEST(Config, EveryPipelineWritesEchoedHeaders) {
  const fs::path dir = fresh_dir("pipelines");
  const std::vector<std::string> configs = {
      R"({"kind": "frenet", "manifold": {"kind": "sphere3_hopf"},
          "curve": {"kind": "hopf", "alpha": 5, "beta": 2, "eta0": "pi/4"}})",
      R"({"kind": "tube-metric", "manifold": {"kind": "sphere3_hopf"},
          "curve": {"kind": "hopf", "alpha": 5, "beta": 2, "eta0": "pi/4"},
          "profile": {"kind": "circular", "rho0": 0.2}, "grid": {"n_s": 8, "n_psi": 8},
          "tube": {"method": "numeric", "compare": true}})",
      R"({"kind": "geodesic", "manifold": {"kind": "sphere3_hopf"},
          "curve": {"kind": "hopf", "alpha": 5, "beta": 2, "eta0": "pi/4"},
          "profile": {"kind": "lobed", "rho0": 0.2, "amp": 0.3, "lobes": 3},
          "flow": {"length": 20, "sample_interval": 1}})",
      R"({"kind": "mesh", "manifold": {"kind": "sphere3_hopf"},
          "curve": {"kind": "hopf", "alpha": 5, "beta": 2, "eta0": "pi/4"},
          "profile": {"kind": "lobed", "rho0": 0.2, "amp": 0.3, "lobes": 3}, "grid": {"n_s": 16, "n_psi": 8}})",
      R"({"kind": "certify", "manifold": {"kind": "ellipsoid3_degenerate", "a": 1, "b": 1.5},
          "curve": {"kind": "ellipsoid", "alpha": 5, "beta": 2, "eta0": "pi/4"},
          "certify": {"rho0": 0.3, "samples": 1, "n_psi": 2, "n_rho": 2}})"};
  for (const auto& text : configs) {
    ExperimentConfig c = parse_config(text);
    ConfigOverrides o;
    o.out_dir = dir.string();
    apply_overrides(c, o);
    const RunSummary s = run_experiment(c);
    EXPECT_TRUE(s.verdict) << c.kind;
    ASSERT_FALSE(s.files.empty()) << c.kind;
    for (const auto& f : s.files) {
      const ExperimentConfig back = load_config(f);
      EXPECT_EQ(back.tree, c.tree) << f;
    }
    EXPECT_FALSE(format_summary(s).empty());
  }
}

TEST(Config, TubeMetricCsvFeedsBackIn) {
  const fs::path dir = fresh_dir("metric_csv");
  ExperimentConfig c = parse_config(R"({"kind": "tube-metric", "manifold": {"kind": "sphere3_hopf"},
      "curve": {"kind": "hopf", "alpha": 5, "beta": 2, "eta0": "pi/4"},
      "profile": {"kind": "circular", "rho0": 0.2}, "grid": {"n_s": 8, "n_psi": 16},
      "tube": {"method": "numeric"}})");
  ConfigOverrides o;
  o.out_dir = dir.string();
  apply_overrides(c, o);
  const RunSummary s = run_experiment(c);
  const MetricGrid grid = read_metric_csv(s.files.front());
  EXPECT_EQ(grid.n_s, 8);
  EXPECT_EQ(grid.n_psi, 16);
  ExperimentConfig g = parse_config(R"({"kind": "geodesic", "manifold": {"kind": "sphere3_hopf"},
      "curve": {"kind": "hopf", "alpha": 5, "beta": 2, "eta0": "pi/4"},
      "profile": {"kind": "circular", "rho0": 0.2},
      "tube": {"method": "csv", "csv": ")" + s.files.front() + R"("}, "flow": {"length": 50}})");
  ConfigOverrides o2;
  o2.out_dir = dir.string();
  apply_overrides(g, o2);
  const RunSummary gs = run_experiment(g);
  bool saw_zero_drift = false;
  for (const auto& [k, v] : gs.rows) saw_zero_drift |= (k == "seed 0 p_s drift" && v == "0");
  EXPECT_TRUE(saw_zero_drift);
}
