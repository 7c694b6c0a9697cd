#pragma once

#include <optional>
#include <string>
#include <vector>

#include "osclab/correlations.hpp"
#include "osclab/experiments.hpp"

namespace osclab {

/// One closed-form state to compare against the Fock oracle.
struct OracleState {
  std::string label;
  StateSpec state;
};

struct OracleCheckSpec {
  int cutoff = 25;
  double tolerance = 1e-6;
  std::vector<double> times{0.0};
  std::size_t n_samples = 1;
  std::vector<OracleState> states;
};

struct FitRange {
  int d_min = 1;
  int d_max = 0;  // 0 means the box diameter
};

/// Parsed run configuration. Every key is checked; unknown keys are a
/// ConfigError, as are out-of-range values.
struct RunConfig {
  ExperimentSpec experiment;
  std::vector<std::vector<int>> cuts;
  FitRange fit;
  std::string output_dir = ".";
  std::optional<OracleCheckSpec> oracle;
  /// Canonical dump of the parsed document, echoed into run_meta.json.
  std::string echo;
};

RunConfig parse_config(const std::string& text);
/// Throws IoError when the file cannot be read.
RunConfig load_config(const std::string& path);

}  // namespace osclab
