#pragma once

#include <stdexcept>
#include <string>

namespace geotubes {

enum class ErrorKind {
  DegenerateMetric,
  DegeneratePlane,
  ChartDomain,
  IrregularCurve,
  VanishingCurvature,
  TubeDegenerate,
  ProfileNotSimple,
  StepFailure,
  LeftDomain,
  SeedInfeasible,
  InsufficientPoints,
  PoleSingularity,
  Parse,
  Config,
  Io,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so that callers (and the
// CLI exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Configuration and parse problems are user errors; everything else is a
  // numerical or I/O failure.
  bool is_config_error() const noexcept {
    return kind_ == ErrorKind::Config || kind_ == ErrorKind::Parse;
  }

 private:
  ErrorKind kind_;
};

}  // namespace geotubes
