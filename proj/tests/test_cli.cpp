#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "osclab/config.hpp"
#include "osclab/error.hpp"
#include "osclab/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path tmp_dir(const std::string& name) {
  const fs::path p = fs::path(OSCLAB_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, json cfg) {
  cfg["output_dir"] = (dir / "out").string();
  const fs::path p = dir / "config.json";
  std::ofstream(p) << cfg.dump(2);
  return p;
}

int cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + OSCLAB_CLI_PATH + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string cli_stdout(const std::string& args) {
  const std::string cmd = std::string(OSCLAB_CLI_PATH) + " " + args + " 2>/dev/null";
  std::string out;
  if (FILE* f = popen(cmd.c_str(), "r")) {
    char buf[256];
    while (std::fgets(buf, sizeof buf, f)) out += buf;
    pclose(f);
  }
  return out;
}

json base_config() {
  return json{{"box", {{0, 0}}},
              {"distribution", {{"kind", "uniform"}, {"k_max", 4}}},
              {"seed", 1},
              {"n_samples", 200},
              {"s", 0.5},
              {"scenario", {{"kind", "eigencorr"}, {"power", -0.5}}}};
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("cli run: minimal single-site config") {
  const auto dir = tmp_dir("minimal");
  const auto cfg = write_config(dir, base_config());
  CHECK(cli("run " + cfg.string()) == 0);
  const auto csv = slurp(dir / "out" / "moments.csv");
  CHECK(count_lines(csv) == 2);
  CHECK(csv.rfind("scenario_id,x_index,y_index,dist,n_samples,n_rejected,s,moment_mean,moment_stderr\n", 0) == 0);
  CHECK_FALSE(fs::exists(dir / "out" / "fit.json"));
  const auto meta = json::parse(slurp(dir / "out" / "run_meta.json"));
  CHECK(meta["n_rejected"] == 0);
  CHECK(meta["n_samples"] == 200);
  CHECK(meta["conforming"] == true);
  CHECK(meta["config"]["seed"] == 1);
  CHECK(meta.contains("git_rev"));
  CHECK(meta.contains("version"));
}

TEST_CASE("cli run: L=100 chain writes a positive decay fit, reproducibly") {
  const auto dir = tmp_dir("chain");
  auto c = base_config();
  c["box"] = {{0, 99}};
  c["n_samples"] = 40;
  c["fit"] = {{"d_min", 2}, {"d_max", 20}};
  const auto cfg = write_config(dir, c);
  REQUIRE(cli("run " + cfg.string(), "OSCLAB_THREADS=1") == 0);
  const auto fit = json::parse(slurp(dir / "out" / "fit.json"));
  CHECK(fit["eta_hat"].get<double>() > 0.0);
  for (const char* k : {"eta_hat", "logC_hat", "r2", "d_min", "d_max", "n_pairs"}) CHECK(fit.contains(k));
  const auto csv = slurp(dir / "out" / "moments.csv");
  const auto fit_text = slurp(dir / "out" / "fit.json");
  CHECK(count_lines(csv) == 1 + 100 * 100);

  // Every row's dist equals the 1-norm distance.
  const auto rows = osclab::parse_moments_csv(csv);
  for (const auto& r : rows) CHECK(r.dist == std::abs(static_cast<int>(r.x) - static_cast<int>(r.y)));

  REQUIRE(cli("run " + cfg.string(), "OSCLAB_THREADS=3") == 0);
  CHECK(slurp(dir / "out" / "moments.csv") == csv);
  CHECK(slurp(dir / "out" / "fit.json") == fit_text);

  // The fit subcommand reproduces fit.json from the CSV.
  const auto refit = json::parse(cli_stdout("fit " + (dir / "out" / "moments.csv").string() + " --dmin 2 --dmax 20"));
  CHECK(refit == fit);
}

TEST_CASE("cli run: validation errors exit 2 with a record") {
  const auto dir = tmp_dir("bad_s");
  auto c = base_config();
  c["s"] = 1.5;
  CHECK(cli("run " + write_config(dir, c).string()) == 2);
  const auto err = json::parse(slurp(dir / "out" / "error.json"));
  CHECK(err["error"] == "ConfigError");
  CHECK(err["message"] == "s out of (0,1]");
  CHECK(err["exit_code"] == 2);

  const auto dir2 = tmp_dir("unknown_key");
  c = base_config();
  c["sample_count"] = 3;
  CHECK(cli("run " + write_config(dir2, c).string()) == 2);

  const auto dir3 = tmp_dir("bad_nested");
  c = base_config();
  c["distribution"]["width"] = 2;
  CHECK(cli("run " + write_config(dir3, c).string()) == 2);

  const auto dir4 = tmp_dir("bad_json");
  std::ofstream(dir4 / "c.json") << "{\"box\": [[0, 1]";
  CHECK(cli("run " + (dir4 / "c.json").string()) == 2);
  CHECK(cli("run") == 2);
}

TEST_CASE("cli run: io and numerical failures") {
  CHECK(cli("run /nonexistent/config.json") == 4);

  const auto dir = tmp_dir("io");
  std::ofstream(dir / "blocker") << "x";
  auto c = base_config();
  c["output_dir"] = (dir / "blocker" / "sub").string();
  std::ofstream(dir / "c.json") << c.dump();
  CHECK(cli("run " + (dir / "c.json").string()) == 4);

  const auto dir2 = tmp_dir("rejected");
  c = base_config();
  c["box"] = {{0, 1}, {0, 1}};
  c["n_samples"] = 3;
  c["distribution"] = {{"kind", "point-mass"}, {"k_max", 2}};
  CHECK(cli("run " + write_config(dir2, c).string()) == 3);
  CHECK(json::parse(slurp(dir2 / "out" / "error.json"))["error"] == "AllSamplesRejected");
}

TEST_CASE("cli oracle: spec scenarios") {
  const auto dir = tmp_dir("oracle_ground");
  auto c = base_config();
  c["distribution"] = {{"kind", "point-mass"}, {"k_max", 2}};
  c["scenario"] = {{"kind", "eigenstate"}};
  c["oracle"] = {{"cutoff", 40}, {"tolerance", 1e-8}, {"times", {0.0}}};
  CHECK(cli("oracle " + write_config(dir, c).string()) == 0);
  const auto rep = json::parse(slurp(dir / "out" / "oracle_report.json"));
  CHECK(rep["passed"] == true);
  CHECK(rep["max_abs_dev"].get<double>() <= 1e-8);

  const auto dir2 = tmp_dir("oracle_quench");
  c = base_config();
  c["box"] = {{0, 1}};
  c["cuts"] = {{1}};
  c["distribution"] = {{"kind", "uniform"}, {"k_max", 4}, {"k_floor", 0.5}};
  c["scenario"] = {{"kind", "quench"}, {"blocks", {{{"kind", "ground"}}}}, {"times", {0, 0.3, 1.0}}};
  c["oracle"] = {{"cutoff", 25}, {"tolerance", 1e-6}, {"times", {0, 0.3, 1.0}}, {"samples", 2}};
  CHECK(cli("oracle " + write_config(dir2, c).string()) == 0);
  const auto rep2 = json::parse(slurp(dir2 / "out" / "oracle_report.json"));
  CHECK(rep2["entries"].size() == 6);

  const auto dir3 = tmp_dir("oracle_cutoff");
  c = base_config();
  c["distribution"] = {{"kind", "point-mass"}, {"k_max", 2}};
  c["scenario"] = {{"kind", "thermal"}, {"beta", 0.1}};
  c["oracle"] = {{"cutoff", 3}};
  CHECK(cli("oracle " + write_config(dir3, c).string()) == 3);
  CHECK(json::parse(slurp(dir3 / "out" / "error.json"))["error"] == "CutoffTooSmall");

  const auto dir4 = tmp_dir("oracle_big");
  c = base_config();
  c["box"] = {{0, 3}};
  c["scenario"] = {{"kind", "thermal"}, {"beta", 1.0}};
  c["oracle"] = {{"cutoff", 5}};
  CHECK(cli("oracle " + write_config(dir4, c).string()) == 2);

  // A tolerance below the achievable accuracy fails the comparison.
  const auto dir5 = tmp_dir("oracle_tight");
  c = base_config();
  c["box"] = {{0, 1}};
  c["distribution"] = {{"kind", "uniform"}, {"k_max", 4}, {"k_floor", 0.5}};
  c["scenario"] = {{"kind", "eigenstate"}, {"alpha", {{0, 2}}}};
  c["oracle"] = {{"cutoff", 25}, {"tolerance", 1e-15}, {"times", {0.3}}};
  CHECK(cli("oracle " + write_config(dir5, c).string()) == 1);
}

TEST_CASE("cli bound-const and fit errors") {
  CHECK(cli_stdout("bound-const --ctilde 1 --cprime 1 --eta 0.6931471805599453 --dim 1") == "16\n");
  CHECK(cli("bound-const --ctilde 0 --cprime 1 --eta 1 --dim 1") == 2);
  CHECK(cli("fit /nonexistent.csv --dmin 1 --dmax 3") == 4);
}

TEST_CASE("config parser details") {
  auto c = base_config();
  c["scenario"] = {{"kind", "quench"},
                   {"blocks", {{{"kind", "thermal"}, {"beta", 1.0}}, {{"kind", "eigenstate"}, {"alpha", {{0, 1}}}}}},
                   {"times", {{"t_max", 2.0}, {"dt", 0.5}}}};
  c["box"] = {{0, 9}};
  c["cuts"] = {{5}};
  c["seed"] = 18446744073709551615ULL;
  const auto cfg = osclab::parse_config(c.dump());
  CHECK(cfg.experiment.disorder.master_seed == 18446744073709551615ULL);
  const auto& q = std::get<osclab::QuenchScenario>(cfg.experiment.scenario);
  CHECK(q.grid.times.size() == 5);
  CHECK(q.block_states.size() == 2);
  CHECK(cfg.fit.d_max == 9);

  c["cuts"] = {{0}};
  try {
    osclab::parse_config(c.dump());
    FAIL("expected ConfigError");
  } catch (const osclab::Error& e) {
    CHECK(e.kind() == osclab::ErrorKind::ConfigError);
  }
  c = base_config();
  c["seed"] = -1;
  CHECK_THROWS_AS(osclab::parse_config(c.dump()), osclab::Error);
  c = base_config();
  c["scenario"]["kind"] = "mystery";
  CHECK_THROWS_AS(osclab::parse_config(c.dump()), osclab::Error);
}
