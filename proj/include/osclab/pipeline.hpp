#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "osclab/config.hpp"
#include "osclab/error.hpp"
#include "osclab/experiments.hpp"

namespace osclab {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int oracle_mismatch = 1;
inline constexpr int config = 2;
inline constexpr int numerical = 3;
inline constexpr int io = 4;
}  // namespace exit_code

int exit_code_for(ErrorKind kind);

/// Shortest round-trip decimal form.
std::string format_number(double v);

std::string moments_csv(const MomentTable& table);
std::vector<PairMoment> parse_moments_csv(const std::string& text);
std::string fit_json(const DecayFit& fit);

/// Loads the config, runs the disorder average and writes moments.csv,
/// profile.csv, fit.json (when the fit range has enough data) and
/// run_meta.json into output_dir. On failure writes error.json there (when the
/// directory is known) and prints the same record to `err`. Returns the exit
/// status.
int run_scenario(const std::string& config_path, std::ostream& out, std::ostream& err);

/// Compares closed-form correlations against the Fock oracle for the states,
/// samples and times in the config's "oracle" section and writes
/// oracle_report.json. Exit 0 iff every deviation is within tolerance.
int oracle_check(const std::string& config_path, std::ostream& out, std::ostream& err);

struct OracleEntry {
  std::uint64_t sample = 0;
  std::string state;
  double t = 0.0;
  double max_abs_dev = 0.0;
  bool passed = false;
};

/// Library form of oracle_check for one sample.
std::vector<OracleEntry> oracle_compare(const KField& kf, const OracleCheckSpec& spec);

}  // namespace osclab
