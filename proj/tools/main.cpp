#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geotubes/config.hpp"
#include "geotubes/errors.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string config;
  std::string out;
  bool seed_grid = false;
  std::vector<int> grid;
  std::optional<double> tol;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "experiment config (JSON, or any output file with an echoed config)")
      ->required();
  sub->add_option("--out", o.out, "output directory");
  sub->add_flag("--seed-grid", o.seed_grid, "use the standard Poincare seed grid");
  sub->add_option("--grid", o.grid, "grid size N M over (s, psi)")->expected(2);
  sub->add_option("--tol", o.tol, "geodesic flow tolerance");
}

int exit_code_for(const geotubes::Error& e) {
  if (e.is_config_error()) return kExitConfig;
  if (e.kind() == geotubes::ErrorKind::Io) return kExitOther;
  return kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tubes around curves in 3-manifolds: induced metrics, geodesic flow, Poincare sections, meshes"};
  app.require_subcommand(1);
  Options options;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"frenet", "Frenet frame and curvature scalars along the curve"},
      {"tube-metric", "induced metric of the tube on an (s, psi) grid"},
      {"geodesic", "geodesics of the tube metric"},
      {"poincare", "Poincare section of the tube geodesic flow"},
      {"mesh", "OBJ mesh of the tube"},
      {"certify", "check that the tube geometry does not depend on s"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), options);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    geotubes::ExperimentConfig config = geotubes::load_config(options.config);
    geotubes::ConfigOverrides overrides;
    overrides.kind = app.get_subcommands().front()->get_name();
    if (!options.out.empty()) overrides.out_dir = options.out;
    overrides.seed_grid = options.seed_grid;
    if (options.grid.size() == 2) overrides.grid = std::make_pair(options.grid[0], options.grid[1]);
    overrides.tol = options.tol;
    geotubes::apply_overrides(config, overrides);
    const geotubes::RunSummary summary = geotubes::run_experiment(config);
    std::cout << geotubes::format_summary(summary);
    for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
    return kExitOk;
  } catch (const geotubes::Error& e) {
    std::cerr << "error (" << geotubes::to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
}
