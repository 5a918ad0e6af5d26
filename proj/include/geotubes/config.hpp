#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "geotubes/curves.hpp"
#include "geotubes/manifolds.hpp"
#include "geotubes/spaceform_tubes.hpp"

namespace geotubes {

// An experiment description as a JSON tree. Numbers may also be given as expression
// strings ("pi/4", "2*sqrt(2)"). Unknown keys are rejected. See README for the schema.
struct ExperimentConfig {
  std::string kind;  // frenet | tube-metric | geodesic | poincare | mesh | certify-s-independence
  nlohmann::json tree;
};

// Parses and validates; throws Error(Config) or Error(Parse) naming the offending key.
ExperimentConfig parse_config(const std::string& text);
// Accepts a JSON config file or any output file carrying an echoed config header.
ExperimentConfig load_config(const std::string& path);
// Config block from an output file's '#' header.
std::string extract_config_block(const std::string& file_text);

// Command-line adjustments merged into the tree before a run.
struct ConfigOverrides {
  std::optional<std::string> kind;
  std::optional<std::string> out_dir;
  bool seed_grid = false;
  std::optional<std::pair<int, int>> grid;
  std::optional<double> tol;
};
void apply_overrides(ExperimentConfig& config, const ConfigOverrides& overrides);

// Header lines (without '#') echoing the full config between config-begin / config-end markers.
std::vector<std::string> config_header(const ExperimentConfig& config);

// Canonical kind name; "certify" is accepted as an alias. Throws Error(Config) for unknown kinds.
std::string canonical_kind(const std::string& kind);

std::shared_ptr<const ChartMetric> build_chart(const nlohmann::json& manifold);
ParamCurve build_curve(const nlohmann::json& curve, const std::shared_ptr<const ChartMetric>& chart);
TubeProfile build_profile(const nlohmann::json& profile);

struct RunSummary {
  std::string kind;
  std::vector<std::string> files;
  std::vector<std::pair<std::string, std::string>> rows;
  std::vector<std::string> warnings;
  // False when a verdict-style run fails its check (certificate false, incomplete section).
  bool verdict = true;
};

RunSummary run_experiment(const ExperimentConfig& config);
std::string format_summary(const RunSummary& summary);

}  // namespace geotubes
