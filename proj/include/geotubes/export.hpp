#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "geotubes/numeric_tubes.hpp"
#include "geotubes/poincare.hpp"

namespace geotubes {

using Vec4 = Eigen::Vector4d;

struct SurfaceMesh {
  std::vector<Vec3> vertices;  // index i * n_psi + j
  std::vector<std::array<int, 4>> quads;
  int n_s = 0;
  int n_psi = 0;
  bool wrap_s = false;
  bool wrap_psi = true;
};

struct MeshOptions {
  RadialOptions radial;
  FrenetOptions frenet;
  int arclength_samples = 64;
  unsigned threads = 0;
};

// Vertex (i, j) is the endpoint of the radial geodesic from gamma(s_i) at angle phi(psi_j), length r(psi_j).
SurfaceMesh sample_tube_mesh(const ChartMetric& chart, const ParamCurve& curve, const TubeProfile& profile, int n_s,
                             int n_psi, const MeshOptions& options = {});

// (sin eta cos theta, sin eta sin theta, cos eta cos phi, cos eta sin phi)
Vec4 hopf_embedding(const Vec3& hopf_point);
// Stereographic projection from (0, 0, 0, 1); throws PoleSingularity if |1 - x4| < 1e-9.
Vec3 stereographic_projection(const Vec4& x);
Vec3 embed_and_project_s3(const Vec3& hopf_point);

struct ProjectionReport {
  int near_pole = 0;  // vertices with |1 - x4| < 1e-3
  double max_sphere_error = 0.0;  // max | |sigma| - 1 | before projection, Hopf-type charts only
};

// Maps chart coordinates to R^3 for display: identity for Cartesian-like charts, polar-to-Cartesian
// for cylindrical, Hopf embedding plus stereographic projection for the 3-sphere and the ellipsoid
// (rescaled to the round sphere).
SurfaceMesh project_mesh_to_r3(const ChartMetric& chart, const SurfaceMesh& mesh, ProjectionReport* report = nullptr);

// Smallest triangle area after splitting quads.
double min_triangle_area(const SurfaceMesh& mesh);

void write_obj(const std::string& path, const SurfaceMesh& mesh, const std::vector<std::string>& header = {});

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  int group = 0;
};

struct ScatterAxes {
  double x_min = 0.0;
  double x_max = 2.0 * 3.14159265358979323846;
  double y_min = -1.0;
  double y_max = 1.0;
  std::string x_label = "psi";
  std::string y_label = "p_psi";
  int width = 800;
  int height = 400;
  int margin = 40;
};

// Affine map from data to viewport coordinates.
Eigen::Vector2d svg_map(const ScatterAxes& axes, double x, double y);

void write_svg_scatter(const std::string& path, const std::vector<ScatterPoint>& points, const ScatterAxes& axes = {},
                       const std::vector<std::string>& header = {});

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const CsvTable& table, const std::vector<std::string>& header = {});

}  // namespace geotubes
