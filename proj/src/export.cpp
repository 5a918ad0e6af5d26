#include "geotubes/export.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "geotubes/errors.hpp"
#include "parallel.hpp"

namespace geotubes {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  }
  out.precision(17);
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) {
    throw Error(ErrorKind::Io, "write failed for " + path);
  }
}

bool hopf_type(const ChartMetric& chart) {
  return chart.kind() == ChartKind::Sphere3Hopf || chart.kind() == ChartKind::Ellipsoid3Degenerate;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) { return 0.5 * (b - a).cross(c - a).norm(); }

}  // namespace

SurfaceMesh sample_tube_mesh(const ChartMetric& chart, const ParamCurve& curve, const TubeProfile& profile, int n_s,
                             int n_psi, const MeshOptions& options) {
  if (n_s < 8 || n_psi < 8) {
    throw Error(ErrorKind::Config, "mesh grid must be at least 8 x 8");
  }
  profile.validate();
  const ArcLengthTable table(curve, options.arclength_samples);
  const double L = table.length();
  SurfaceMesh mesh;
  mesh.n_s = n_s;
  mesh.n_psi = n_psi;
  mesh.wrap_s = curve.closed;
  mesh.wrap_psi = true;
  std::vector<double> s_nodes;
  for (int i = 0; i < n_s; ++i) s_nodes.push_back(curve.closed ? L * i / n_s : L * i / (n_s - 1));
  const auto frames = frenet_evolve(curve, table, s_nodes, options.frenet);
  mesh.vertices.resize(static_cast<std::size_t>(n_s * n_psi));
  RadialOptions radial = options.radial;
  detail::run_parallel(n_s * n_psi, options.threads, [&](int node) {
    const int i = node / n_psi;
    const int j = node % n_psi;
    const TubeProfile::Polar p = profile.polar(kTwoPi * j / n_psi);
    RadialOptions o = radial;
    o.output_rho = {p.r};
    const auto states = radial_geodesic(chart, frames[static_cast<std::size_t>(i)], p.phi, p.r, o);
    mesh.vertices[static_cast<std::size_t>(node)] = states.back().x;
  });
  const int rows = mesh.wrap_s ? n_s : n_s - 1;
  for (int i = 0; i < rows; ++i) {
    const int i1 = (i + 1) % n_s;
    for (int j = 0; j < n_psi; ++j) {
      const int j1 = (j + 1) % n_psi;
      mesh.quads.push_back({i * n_psi + j, i1 * n_psi + j, i1 * n_psi + j1, i * n_psi + j1});
    }
  }
  return mesh;
}

Vec4 hopf_embedding(const Vec3& h) {
  const double se = std::sin(h(0));
  const double ce = std::cos(h(0));
  return Vec4(se * std::cos(h(1)), se * std::sin(h(1)), ce * std::cos(h(2)), ce * std::sin(h(2)));
}

Vec3 stereographic_projection(const Vec4& x) {
  const double d = 1.0 - x(3);
  if (std::abs(d) < 1e-9) {
    std::ostringstream os;
    os << "pole singularity: |1 - x4| = " << std::abs(d) << " < 1e-9";
    throw Error(ErrorKind::PoleSingularity, os.str());
  }
  return x.head<3>() / d;
}

Vec3 embed_and_project_s3(const Vec3& hopf_point) { return stereographic_projection(hopf_embedding(hopf_point)); }

SurfaceMesh project_mesh_to_r3(const ChartMetric& chart, const SurfaceMesh& mesh, ProjectionReport* report) {
  SurfaceMesh out = mesh;
  ProjectionReport rep;
  for (auto& v : out.vertices) {
    switch (chart.kind()) {
      case ChartKind::Sphere3Hopf:
      case ChartKind::Ellipsoid3Degenerate: {
        const Vec4 sigma = hopf_embedding(v);
        rep.max_sphere_error = std::max(rep.max_sphere_error, std::abs(sigma.norm() - 1.0));
        if (std::abs(1.0 - sigma(3)) < 1e-3) ++rep.near_pole;
        v = stereographic_projection(sigma);
        break;
      }
      case ChartKind::Euclidean3Cylindrical:
        v = Vec3(v(0) * std::cos(v(1)), v(0) * std::sin(v(1)), v(2));
        break;
      default:
        break;
    }
  }
  if (!hopf_type(chart)) rep.max_sphere_error = 0.0;
  if (report) *report = rep;
  return out;
}

double min_triangle_area(const SurfaceMesh& mesh) {
  double area = std::numeric_limits<double>::infinity();
  for (const auto& q : mesh.quads) {
    const auto& v = mesh.vertices;
    const auto at = [&](int k) { return v[static_cast<std::size_t>(q[static_cast<std::size_t>(k)])]; };
    area = std::min({area, triangle_area(at(0), at(1), at(2)), triangle_area(at(0), at(2), at(3))});
  }
  return area;
}

void write_obj(const std::string& path, const SurfaceMesh& mesh, const std::vector<std::string>& header) {
  for (const auto& v : mesh.vertices) {
    if (!v.allFinite()) {
      throw Error(ErrorKind::Io, path + ": refusing to write a non-finite vertex");
    }
  }
  auto out = open_for_write(path);
  for (const auto& line : header) out << "# " << line << "\n";
  for (const auto& v : mesh.vertices) out << "v " << v(0) << " " << v(1) << " " << v(2) << "\n";
  for (const auto& q : mesh.quads) {
    out << "f " << q[0] + 1 << " " << q[1] + 1 << " " << q[2] + 1 << "\n";
    out << "f " << q[0] + 1 << " " << q[2] + 1 << " " << q[3] + 1 << "\n";
  }
  finish(out, path);
}

Eigen::Vector2d svg_map(const ScatterAxes& a, double x, double y) {
  const double w = a.width - 2.0 * a.margin;
  const double h = a.height - 2.0 * a.margin;
  return {a.margin + w * (x - a.x_min) / (a.x_max - a.x_min), a.margin + h * (a.y_max - y) / (a.y_max - a.y_min)};
}

void write_svg_scatter(const std::string& path, const std::vector<ScatterPoint>& points, const ScatterAxes& axes,
                       const std::vector<std::string>& header) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  auto out = open_for_write(path);
  out.precision(8);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!header.empty()) {
    out << "<!--\n";
    for (const auto& line : header) {
      std::string safe = line;
      for (std::size_t k = safe.find("--"); k != std::string::npos; k = safe.find("--", k)) safe.replace(k, 2, "- ");
      out << "# " << safe << "\n";
    }
    out << "-->\n";
  }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << axes.width << "\" height=\""
      << axes.height << "\" viewBox=\"0 0 " << axes.width << " " << axes.height << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << axes.width << "\" height=\"" << axes.height << "\" fill=\"white\"/>\n";
  const auto lo = svg_map(axes, axes.x_min, axes.y_min);
  const auto hi = svg_map(axes, axes.x_max, axes.y_max);
  out << "<g id=\"axes\" stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
  out << "<rect x=\"" << lo(0) << "\" y=\"" << hi(1) << "\" width=\"" << hi(0) - lo(0) << "\" height=\""
      << lo(1) - hi(1) << "\"/>\n";
  const double ymid = 0.5 * (axes.y_min + axes.y_max);
  const auto m0 = svg_map(axes, axes.x_min, ymid);
  const auto m1 = svg_map(axes, axes.x_max, ymid);
  out << "<line x1=\"" << m0(0) << "\" y1=\"" << m0(1) << "\" x2=\"" << m1(0) << "\" y2=\"" << m1(1)
      << "\" stroke-dasharray=\"4 4\" stroke=\"#999999\"/>\n";
  out << "</g>\n";
  out << "<g id=\"labels\" font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">\n";
  out << "<text x=\"" << 0.5 * (lo(0) + hi(0)) << "\" y=\"" << axes.height - 8 << "\" text-anchor=\"middle\">"
      << axes.x_label << "</text>\n";
  out << "<text x=\"12\" y=\"" << 0.5 * (lo(1) + hi(1)) << "\" text-anchor=\"middle\" transform=\"rotate(-90 12 "
      << 0.5 * (lo(1) + hi(1)) << ")\">" << axes.y_label << "</text>\n";
  out << "<text x=\"" << lo(0) << "\" y=\"" << lo(1) + 14 << "\" text-anchor=\"middle\">" << axes.x_min << "</text>\n";
  out << "<text x=\"" << hi(0) << "\" y=\"" << lo(1) + 14 << "\" text-anchor=\"middle\">" << axes.x_max << "</text>\n";
  out << "<text x=\"" << lo(0) - 4 << "\" y=\"" << lo(1) << "\" text-anchor=\"end\">" << axes.y_min << "</text>\n";
  out << "<text x=\"" << lo(0) - 4 << "\" y=\"" << hi(1) + 4 << "\" text-anchor=\"end\">" << axes.y_max << "</text>\n";
  out << "</g>\n";
  out << "<g id=\"points\" stroke=\"none\">\n";
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorKind::Io, path + ": refusing to write a non-finite point");
    }
    const auto v = svg_map(axes, p.x, p.y);
    const int color = ((p.group % 10) + 10) % 10;
    out << "<circle cx=\"" << v(0) << "\" cy=\"" << v(1) << "\" r=\"1.2\" fill=\"" << palette[color] << "\"/>\n";
  }
  out << "</g>\n</svg>\n";
  finish(out, path);
}

void write_csv(const std::string& path, const CsvTable& table, const std::vector<std::string>& header) {
  auto out = open_for_write(path);
  for (const auto& line : header) out << "# " << line << "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
  out << "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) {
      throw Error(ErrorKind::Io, path + ": row width does not match the column count");
    }
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
  finish(out, path);
}

}  // namespace geotubes
