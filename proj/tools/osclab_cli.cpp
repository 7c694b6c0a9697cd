#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "osclab/experiments.hpp"
#include "osclab/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Disordered harmonic oscillator lattices: correlation decay experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run a scenario config, write moments.csv, fit.json, run_meta.json");
  run->add_option("config", config_path, "JSON config")->required();

  auto* oracle = app.add_subcommand("oracle", "compare closed forms with the truncated Fock oracle");
  oracle->add_option("config", config_path, "JSON config")->required();

  std::string csv_path;
  int d_min = 0;
  int d_max = 0;
  auto* fit = app.add_subcommand("fit", "fit ln(moment) against distance");
  fit->add_option("moments", csv_path, "moments.csv")->required();
  fit->add_option("--dmin", d_min, "smallest distance")->required();
  fit->add_option("--dmax", d_max, "largest distance")->required();

  double c_tilde = 0.0, c_prime = 0.0, eta = 0.0;
  int dim = 1;
  auto* bound = app.add_subcommand("bound-const", "C'' = C~^(2/3) C'^(1/3) (2/(1-e^-eta))^(2d)");
  bound->add_option("--ctilde", c_tilde)->required();
  bound->add_option("--cprime", c_prime)->required();
  bound->add_option("--eta", eta)->required();
  bound->add_option("--dim", dim)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : osclab::exit_code::config;
  }

  if (*run) return osclab::run_scenario(config_path, std::cout, std::cerr);
  if (*oracle) return osclab::oracle_check(config_path, std::cout, std::cerr);

  try {
    if (*fit) {
      std::ifstream in(csv_path, std::ios::binary);
      if (!in) throw osclab::Error(osclab::ErrorKind::IoError, "cannot read " + csv_path);
      std::ostringstream ss;
      ss << in.rdbuf();
      const auto rows = osclab::parse_moments_csv(ss.str());
      std::cout << osclab::fit_json(osclab::fit_decay(rows, d_min, d_max));
      return 0;
    }
    std::cout << osclab::format_number(osclab::bound_constant(c_tilde, c_prime, eta, dim)) << '\n';
    return 0;
  } catch (const osclab::Error& e) {
    std::cerr << "error: " << osclab::to_string(e.kind()) << ": " << e.what() << '\n';
    return osclab::exit_code_for(e.kind());
  }
}
