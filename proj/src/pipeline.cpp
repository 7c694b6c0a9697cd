#include "osclab/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "osclab/fock_oracle.hpp"
#include "osclab/spectral.hpp"

#ifndef OSCLAB_VERSION
#define OSCLAB_VERSION "unknown"
#endif
#ifndef OSCLAB_GIT_REV
#define OSCLAB_GIT_REV "unknown"
#endif

namespace osclab {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::EmptyInterval:
    case ErrorKind::ZeroDim:
    case ErrorKind::BadCut:
      return exit_code::config;
    case ErrorKind::IoError:
      return exit_code::io;
    default:
      return exit_code::numerical;
  }
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string moments_csv(const MomentTable& table) {
  std::string out = "scenario_id,x_index,y_index,dist,n_samples,n_rejected,s,moment_mean,moment_stderr\n";
  for (const auto& r : table.rows) {
    out += table.scenario_id;
    out += ',' + std::to_string(r.x) + ',' + std::to_string(r.y) + ',' + std::to_string(r.dist) + ',' +
           std::to_string(r.n_samples) + ',' + std::to_string(r.n_rejected) + ',' + format_number(r.s) + ',' +
           format_number(r.mean) + ',' + format_number(r.stderr_) + '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <class T>
T parse_cell(const std::string& cell, std::size_t line_no) {
  T v{};
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw Error(ErrorKind::ConfigError, "moments.csv line " + std::to_string(line_no) + ": bad value \"" +
                                            cell + "\"");
  }
  return v;
}

ordered_json fit_object(const DecayFit& fit) {
  ordered_json j;
  j["eta_hat"] = fit.eta_hat;
  j["logC_hat"] = fit.logC_hat;
  j["r2"] = fit.r2;
  j["d_min"] = fit.d_min;
  j["d_max"] = fit.d_max;
  j["n_pairs"] = fit.n_pairs;
  return j;
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  f << contents;
  f.flush();
  if (!f) throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::IoError, "cannot create output directory " + dir.string());
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string error_record(const std::string& command, ErrorKind kind, const std::string& message) {
  ordered_json j;
  j["command"] = command;
  j["error"] = std::string(to_string(kind));
  j["message"] = message;
  j["exit_code"] = exit_code_for(kind);
  return j.dump();
}

/// Shared error handling for the two config-driven commands.
template <class Body>
int guarded(const std::string& command, const std::string& config_path, std::ostream& err, Body&& body) {
  std::optional<fs::path> out_dir;
  auto report = [&](ErrorKind kind, const std::string& msg) {
    const std::string rec = error_record(command, kind, msg);
    err << rec << '\n';
    if (out_dir) {
      try {
        ensure_dir(*out_dir);
        write_file(*out_dir / "error.json", rec + '\n');
      } catch (const Error&) {
        // already reported on err
      }
    }
    return exit_code_for(kind);
  };
  try {
    // Best effort, so a config that fails validation still leaves error.json behind.
    try {
      std::ifstream in(config_path);
      const auto raw = nlohmann::json::parse(in, nullptr, false);
      if (raw.is_object() && raw.contains("output_dir") && raw["output_dir"].is_string())
        out_dir = fs::path(raw["output_dir"].get<std::string>());
    } catch (...) {
    }
    const RunConfig cfg = load_config(config_path);
    out_dir = fs::path(cfg.output_dir);
    std::error_code ec;
    fs::remove(*out_dir / "error.json", ec);
    return body(cfg, *out_dir);
  } catch (const Error& e) {
    return report(e.kind(), e.what());
  } catch (const std::bad_alloc&) {
    return report(ErrorKind::TooLarge, "out of memory");
  }
}

}  // namespace

std::vector<PairMoment> parse_moments_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::InsufficientData, "moments.csv is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected{"scenario_id", "x_index", "y_index", "dist",         "n_samples",
                                          "n_rejected",  "s",       "moment_mean", "moment_stderr"};
  if (header != expected) throw Error(ErrorKind::ConfigError, "moments.csv: unexpected header");
  std::vector<PairMoment> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != expected.size()) {
      throw Error(ErrorKind::ConfigError, "moments.csv line " + std::to_string(line_no) + ": wrong column count");
    }
    PairMoment r;
    r.x = parse_cell<std::size_t>(c[1], line_no);
    r.y = parse_cell<std::size_t>(c[2], line_no);
    r.dist = parse_cell<int>(c[3], line_no);
    r.n_samples = parse_cell<std::size_t>(c[4], line_no);
    r.n_rejected = parse_cell<std::size_t>(c[5], line_no);
    r.s = parse_cell<double>(c[6], line_no);
    r.mean = parse_cell<double>(c[7], line_no);
    r.stderr_ = parse_cell<double>(c[8], line_no);
    rows.push_back(r);
  }
  return rows;
}

std::string fit_json(const DecayFit& fit) { return fit_object(fit).dump(2) + '\n'; }

int run_scenario(const std::string& config_path, std::ostream& out, std::ostream& err) {
  return guarded("run", config_path, err, [&](const RunConfig& cfg, const fs::path& dir) {
    const auto started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    const MomentTable table = run_disorder_average(cfg.experiment);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    ensure_dir(dir);
    write_file(dir / "moments.csv", moments_csv(table));
    std::string profile = "dist,n_pairs,mean,stderr\n";
    for (const auto& b : table.profile) {
      profile += std::to_string(b.dist) + ',' + std::to_string(b.n_pairs) + ',' + format_number(b.mean) + ',' +
                 format_number(b.stderr_) + '\n';
    }
    write_file(dir / "profile.csv", profile);

    ordered_json fit_meta;
    std::error_code ec;
    fs::remove(dir / "fit.json", ec);
    try {
      const DecayFit fit = fit_decay(table, cfg.fit.d_min, cfg.fit.d_max);
      write_file(dir / "fit.json", fit_json(fit));
      fit_meta["written"] = true;
      fit_meta["n_distances"] = fit.n_distances;
      fit_meta["skipped_distances"] = fit.skipped_distances;
      if (!fit.skipped_distances.empty()) {
        err << "warning: " << fit.skipped_distances.size()
            << " distance bin(s) with nonpositive mean excluded from the fit\n";
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InsufficientData) throw;
      fit_meta["written"] = false;
      fit_meta["reason"] = e.what();
    }

    ordered_json meta;
    meta["config"] = ordered_json::parse(cfg.echo);
    meta["version"] = OSCLAB_VERSION;
    meta["git_rev"] = OSCLAB_GIT_REV;
    meta["scenario_kind"] = table.scenario_kind;
    meta["distribution"] = cfg.experiment.disorder.describe();
    meta["conforming"] = table.conforming;
    meta["moment_exponent"] = table.s;
    meta["n_requested"] = table.n_requested;
    meta["n_samples"] = table.n_samples;
    meta["n_rejected"] = table.n_rejected;
    meta["rejected_indices"] = table.rejected_indices;
    meta["n_pairs"] = table.rows.size();
    meta["fit"] = fit_meta;
    meta["timing"] = {{"started_utc", started}, {"elapsed_s", elapsed},
                      {"workers", cfg.experiment.threads ? cfg.experiment.threads : worker_count()}};
    write_file(dir / "run_meta.json", meta.dump(2) + '\n');
    out << "wrote " << table.rows.size() << " rows to " << (dir / "moments.csv").string() << " ("
        << table.n_samples << " samples, " << table.n_rejected << " rejected)\n";
    return exit_code::ok;
  });
}

std::vector<OracleEntry> oracle_compare(const KField& kf, const OracleCheckSpec& spec) {
  const TruncatedHamiltonian h = build_truncated_H(kf, spec.cutoff);
  const SpectralData sd = diagonalize(build_h(kf));
  std::vector<OracleEntry> entries;
  for (const auto& st : spec.states) {
    MixedState rho;
    bool heisenberg = false;
    CorrelationMatrix gamma0 = std::visit(
        [&](const auto& s) -> CorrelationMatrix {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, EigenstateSpec>) {
            const auto alpha = ExcitationVector::from_sparse(sd.n(), s.alpha);
            rho = MixedState::pure(find_eigenstate(h, sd, alpha).template cast<Complex>());
            heisenberg = true;
            return eigenstate_corr(sd, alpha, 0.0);
          } else if constexpr (std::is_same_v<T, ThermalSpec>) {
            rho = thermal_density(h, s.beta);
            return thermal_corr(sd, s.beta);
          } else {
            rho = product_state(kf, h.space(), s.dec, s.blocks);
            return static_corr(kf, StateSpec{s});
          }
        },
        st.state);
    for (double t : spec.times) {
      const CorrelationMatrix exact =
          heisenberg ? eigenstate_corr(sd, ExcitationVector::from_sparse(
                                               sd.n(), std::get<EigenstateSpec>(st.state).alpha),
                                       t)
                     : evolve_correlations(sd, gamma0, t);
      const CorrelationMatrix brute =
          oracle_corr(h, rho, t, heisenberg ? OracleTiming::Heisenberg : OracleTiming::Schrodinger);
      OracleEntry e;
      e.sample = kf.sample_index;
      e.state = st.label;
      e.t = t;
      e.max_abs_dev = (exact.data() - brute.data()).cwiseAbs().maxCoeff();
      e.passed = e.max_abs_dev <= spec.tolerance;
      entries.push_back(e);
    }
  }
  return entries;
}

int oracle_check(const std::string& config_path, std::ostream& out, std::ostream& err) {
  return guarded("oracle", config_path, err, [&](const RunConfig& cfg, const fs::path& dir) {
    if (!cfg.oracle) throw Error(ErrorKind::ConfigError, "config has no \"oracle\" section");
    if (cfg.experiment.box.n_sites() > 3) throw Error(ErrorKind::ConfigError, "oracle needs a box of at most 3 sites");
    const auto& spec = *cfg.oracle;
    std::vector<OracleEntry> all;
    for (std::uint64_t i = 0; i < spec.n_samples; ++i) {
      const KField kf = sample_kfield(cfg.experiment.disorder, cfg.experiment.box, i);
      auto part = oracle_compare(kf, spec);
      all.insert(all.end(), part.begin(), part.end());
    }
    ordered_json rep;
    rep["cutoff"] = spec.cutoff;
    rep["tolerance"] = spec.tolerance;
    double worst = 0.0;
    bool passed = true;
    ordered_json rows = ordered_json::array();
    for (const auto& e : all) {
      worst = std::max(worst, e.max_abs_dev);
      passed = passed && e.passed;
      rows.push_back({{"sample", e.sample},
                      {"state", e.state},
                      {"t", e.t},
                      {"max_abs_dev", e.max_abs_dev},
                      {"pass", e.passed}});
    }
    rep["entries"] = rows;
    rep["max_abs_dev"] = worst;
    rep["passed"] = passed;
    ensure_dir(dir);
    write_file(dir / "oracle_report.json", rep.dump(2) + '\n');
    out << (passed ? "oracle: PASS" : "oracle: FAIL") << " max |dev| = " << format_number(worst) << " over "
        << all.size() << " comparisons\n";
    return passed ? exit_code::ok : exit_code::oracle_mismatch;
  });
}

}  // namespace osclab
