#include "osclab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "osclab/error.hpp"

namespace osclab {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

void only_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) fail(std::string(where) + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) fail(std::string(where) + ": unknown key \"" + key + "\"");
  }
}

const json& need(const json& obj, const char* key, std::string_view where) {
  if (!obj.contains(key)) fail(std::string(where) + ": missing \"" + key + "\"");
  return obj.at(key);
}

double as_real(const json& v, std::string_view what) {
  if (!v.is_number()) fail(std::string(what) + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(std::string(what) + ": must be finite");
  return d;
}

long long as_int(const json& v, std::string_view what) {
  if (!v.is_number_integer()) fail(std::string(what) + ": expected an integer");
  return v.get<long long>();
}

std::uint64_t as_count(const json& v, std::string_view what) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const long long i = as_int(v, what);
  if (i < 0) fail(std::string(what) + ": must be nonnegative");
  return static_cast<std::uint64_t>(i);
}

double real_or(const json& obj, const char* key, double fallback, std::string_view where) {
  return obj.contains(key) ? as_real(obj.at(key), std::string(where) + "." + key) : fallback;
}

std::vector<std::pair<std::size_t, std::uint32_t>> parse_alpha(const json& v) {
  if (!v.is_array()) fail("alpha: expected [[mode, count], ...]");
  std::vector<std::pair<std::size_t, std::uint32_t>> out;
  for (const auto& e : v) {
    if (!e.is_array() || e.size() != 2) fail("alpha: each entry must be [mode, count]");
    const auto mode = as_count(e[0], "alpha mode");
    const auto count = as_count(e[1], "alpha count");
    if (count > std::numeric_limits<std::uint32_t>::max()) fail("alpha: count too large");
    out.emplace_back(static_cast<std::size_t>(mode), static_cast<std::uint32_t>(count));
  }
  return out;
}

TimeGrid parse_times(const json& v) {
  if (v.is_array()) {
    TimeGrid g;
    for (const auto& t : v) {
      const double x = as_real(t, "times");
      if (x < 0.0) fail("times: must be nonnegative");
      g.times.push_back(x);
    }
    if (g.times.empty()) fail("times: empty grid");
    return g;
  }
  only_keys(v, "times", {"t_max", "dt"});
  return TimeGrid::uniform(as_real(need(v, "t_max", "times"), "times.t_max"),
                           as_real(need(v, "dt", "times"), "times.dt"));
}

LocalStateSpec parse_local_state(const json& v, std::string_view where) {
  const auto kind = need(v, "kind", where);
  if (!kind.is_string()) fail(std::string(where) + ".kind: expected a string");
  const auto k = kind.get<std::string>();
  if (k == "ground") {
    only_keys(v, where, {"kind"});
    return EigenstateSpec{};
  }
  if (k == "eigenstate") {
    only_keys(v, where, {"kind", "alpha"});
    return EigenstateSpec{v.contains("alpha") ? parse_alpha(v.at("alpha"))
                                             : std::vector<std::pair<std::size_t, std::uint32_t>>{}};
  }
  if (k == "thermal") {
    only_keys(v, where, {"kind", "beta"});
    return ThermalSpec{as_real(need(v, "beta", where), "beta")};
  }
  fail(std::string(where) + ".kind: expected ground, eigenstate or thermal");
}

std::vector<LocalStateSpec> parse_blocks(const json& v) {
  if (!v.is_array() || v.empty()) fail("blocks: expected a nonempty list of states");
  std::vector<LocalStateSpec> out;
  for (const auto& b : v) out.push_back(parse_local_state(b, "block state"));
  return out;
}

Scenario parse_scenario(const json& v, const std::vector<std::vector<int>>& cuts) {
  const auto& kind = need(v, "kind", "scenario");
  if (!kind.is_string()) fail("scenario.kind: expected a string");
  const auto k = kind.get<std::string>();
  if (k == "eigencorr") {
    only_keys(v, "scenario", {"kind", "power"});
    return EigencorrScenario{real_or(v, "power", -0.5, "scenario")};
  }
  if (k == "eigenstate") {
    only_keys(v, "scenario", {"kind", "alpha", "time_mode", "times"});
    EigenstateScenario sc;
    if (v.contains("alpha")) sc.alpha = parse_alpha(v.at("alpha"));
    if (v.contains("time_mode")) {
      const auto m = v.at("time_mode");
      if (m == "envelope") {
        sc.mode = TimeMode::Envelope;
      } else if (m == "grid") {
        sc.mode = TimeMode::Grid;
      } else {
        fail("scenario.time_mode: expected envelope or grid");
      }
    }
    if (v.contains("times")) sc.grid = parse_times(v.at("times"));
    return sc;
  }
  if (k == "thermal") {
    only_keys(v, "scenario", {"kind", "beta"});
    return ThermalScenario{as_real(need(v, "beta", "scenario"), "scenario.beta")};
  }
  if (k == "quench") {
    only_keys(v, "scenario", {"kind", "blocks", "times"});
    QuenchScenario sc;
    sc.cuts = cuts;
    sc.block_states = parse_blocks(need(v, "blocks", "scenario"));
    sc.grid = parse_times(need(v, "times", "scenario"));
    return sc;
  }
  fail("scenario.kind: expected eigencorr, eigenstate, thermal or quench");
}

DisorderConfig parse_distribution(const json& v) {
  only_keys(v, "distribution", {"kind", "k_max", "p", "k_floor"});
  DisorderConfig d;
  const auto& kind = need(v, "kind", "distribution");
  if (kind == "uniform") {
    d.kind = DistributionKind::Uniform;
  } else if (kind == "truncated-power") {
    d.kind = DistributionKind::TruncatedPower;
  } else if (kind == "point-mass") {
    d.kind = DistributionKind::PointMass;
  } else {
    fail("distribution.kind: expected uniform, truncated-power or point-mass");
  }
  d.k_max = real_or(v, "k_max", d.k_max, "distribution");
  d.p = real_or(v, "p", d.p, "distribution");
  d.k_floor = real_or(v, "k_floor", d.k_floor, "distribution");
  return d;
}

OracleState oracle_state(const json& v, const RunConfig& cfg) {
  const auto& kind = need(v, "kind", "oracle state");
  if (kind == "product") {
    only_keys(v, "oracle state", {"kind", "blocks"});
    const Decomposition dec = decompose(cfg.experiment.box, cfg.cuts);
    auto blocks = parse_blocks(need(v, "blocks", "oracle state"));
    if (blocks.size() == 1 && dec.size() > 1) blocks.assign(dec.size(), blocks.front());
    return {"product", ProductSpec{dec, blocks}};
  }
  const LocalStateSpec local = parse_local_state(v, "oracle state");
  if (const auto* e = std::get_if<EigenstateSpec>(&local)) return {"eigenstate", *e};
  return {"thermal", std::get<ThermalSpec>(local)};
}

/// Oracle states implied by the scenario when none are listed.
std::vector<OracleState> default_oracle_states(const RunConfig& cfg) {
  return std::visit(
      [&](const auto& sc) -> std::vector<OracleState> {
        using T = std::decay_t<decltype(sc)>;
        if constexpr (std::is_same_v<T, EigenstateScenario>) {
          return {{"eigenstate", EigenstateSpec{sc.alpha}}};
        } else if constexpr (std::is_same_v<T, ThermalScenario>) {
          return {{"thermal", ThermalSpec{sc.beta}}};
        } else if constexpr (std::is_same_v<T, QuenchScenario>) {
          const Decomposition dec = decompose(cfg.experiment.box, sc.cuts);
          std::vector<LocalStateSpec> blocks(dec.size(), sc.block_states.front());
          if (sc.block_states.size() == dec.size()) blocks = sc.block_states;
          return {{"product", ProductSpec{dec, blocks}}};
        } else {
          fail("oracle: eigencorr scenarios have no state; list oracle.states");
        }
      },
      cfg.experiment.scenario);
}

OracleCheckSpec parse_oracle(const json& v, const RunConfig& cfg) {
  only_keys(v, "oracle", {"cutoff", "tolerance", "times", "samples", "states"});
  OracleCheckSpec o;
  if (v.contains("cutoff")) {
    const auto c = as_int(v.at("cutoff"), "oracle.cutoff");
    if (c < 0 || c > 10000) fail("oracle.cutoff: out of range");
    o.cutoff = static_cast<int>(c);
  }
  o.tolerance = real_or(v, "tolerance", o.tolerance, "oracle");
  if (!(o.tolerance > 0.0)) fail("oracle.tolerance: must be positive");
  if (v.contains("times")) o.times = parse_times(v.at("times")).times;
  if (v.contains("samples")) o.n_samples = as_count(v.at("samples"), "oracle.samples");
  if (o.n_samples < 1) fail("oracle.samples: must be >= 1");
  if (v.contains("states")) {
    if (!v.at("states").is_array() || v.at("states").empty()) fail("oracle.states: expected a nonempty list");
    for (const auto& s : v.at("states")) o.states.push_back(oracle_state(s, cfg));
  } else {
    o.states = default_oracle_states(cfg);
  }
  for (const auto& s : o.states) validate(s.state);
  return o;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  try {
    only_keys(doc, "config",
              {"scenario_id", "box", "cuts", "distribution", "lambda", "seed", "n_samples", "s",
               "scenario", "pairs", "bulk_margin", "threads", "fit", "output_dir", "oracle"});
    RunConfig cfg;
    auto& ex = cfg.experiment;
    if (doc.contains("scenario_id")) {
      if (!doc.at("scenario_id").is_string()) fail("scenario_id: expected a string");
      ex.scenario_id = doc.at("scenario_id").get<std::string>();
    }

    const auto& box = need(doc, "box", "config");
    if (!box.is_array()) fail("box: expected [[lo, hi], ...]");
    std::vector<std::pair<int, int>> iv;
    for (const auto& e : box) {
      if (!e.is_array() || e.size() != 2) fail("box: each interval must be [lo, hi]");
      iv.emplace_back(static_cast<int>(as_int(e[0], "box")), static_cast<int>(as_int(e[1], "box")));
    }
    ex.box = LatticeBox::make(iv);

    if (doc.contains("cuts")) {
      const auto& c = doc.at("cuts");
      if (!c.is_array() || c.size() != iv.size()) fail("cuts: expected one list per axis");
      for (const auto& axis : c) {
        if (!axis.is_array()) fail("cuts: expected one list per axis");
        std::vector<int> a;
        for (const auto& x : axis) a.push_back(static_cast<int>(as_int(x, "cuts")));
        cfg.cuts.push_back(a);
      }
      decompose(ex.box, cfg.cuts);
    }

    ex.disorder = parse_distribution(need(doc, "distribution", "config"));
    ex.disorder.lambda = real_or(doc, "lambda", 1.0, "config");
    ex.disorder.master_seed = as_count(need(doc, "seed", "config"), "seed");
    ex.disorder.validate();

    if (doc.contains("n_samples")) ex.n_samples = as_count(doc.at("n_samples"), "n_samples");
    ex.s = real_or(doc, "s", ex.s, "config");
    if (!(ex.s > 0.0 && ex.s <= 1.0)) fail("s out of (0,1]");
    ex.scenario = parse_scenario(need(doc, "scenario", "config"), cfg.cuts);

    if (doc.contains("pairs")) {
      const auto& p = doc.at("pairs");
      if (!p.is_array()) fail("pairs: expected [[x, y], ...]");
      for (const auto& e : p) {
        if (!e.is_array() || e.size() != 2) fail("pairs: each entry must be [x, y] site indices");
        ex.pairs.listed.emplace_back(as_count(e[0], "pairs"), as_count(e[1], "pairs"));
      }
    }
    if (doc.contains("bulk_margin")) {
      const auto m = as_int(doc.at("bulk_margin"), "bulk_margin");
      if (m < 0) fail("bulk_margin: must be nonnegative");
      ex.pairs.bulk_margin = static_cast<int>(m);
    }
    if (doc.contains("threads")) ex.threads = static_cast<unsigned>(as_count(doc.at("threads"), "threads"));

    if (doc.contains("fit")) {
      const auto& f = doc.at("fit");
      only_keys(f, "fit", {"d_min", "d_max"});
      if (f.contains("d_min")) cfg.fit.d_min = static_cast<int>(as_int(f.at("d_min"), "fit.d_min"));
      if (f.contains("d_max")) cfg.fit.d_max = static_cast<int>(as_int(f.at("d_max"), "fit.d_max"));
    }
    if (cfg.fit.d_max == 0) cfg.fit.d_max = std::max(cfg.fit.d_min, ex.box.max_distance());
    if (cfg.fit.d_min < 0 || cfg.fit.d_max < cfg.fit.d_min) fail("fit: need 0 <= d_min <= d_max");

    if (doc.contains("output_dir")) {
      if (!doc.at("output_dir").is_string()) fail("output_dir: expected a string");
      cfg.output_dir = doc.at("output_dir").get<std::string>();
    }
    ex.validate();
    if (doc.contains("oracle")) cfg.oracle = parse_oracle(doc.at("oracle"), cfg);
    cfg.echo = doc.dump();
    return cfg;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    // Structural problems found while validating (bad cuts, empty intervals) are config errors.
    throw Error(ErrorKind::ConfigError, std::string(to_string(e.kind())) + ": " + e.what());
  } catch (const json::exception& e) {
    fail(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace osclab
