#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "osclab/correlations.hpp"
#include "osclab/disorder.hpp"
#include "osclab/lattice.hpp"

namespace osclab {

enum class TimeMode {
  Envelope,  // rigorous upper bound on sup_t
  Grid,      // max over a finite time grid (a lower bound on sup_t)
};

struct TimeGrid {
  std::vector<double> times;

  /// {0, dt, 2 dt, ..., t_max}, each point computed as i * dt.
  static TimeGrid uniform(double t_max, double dt);
};

/// sup_g |<delta_x, h^power g(h) delta_y>|.
struct EigencorrScenario {
  double power = -0.5;
};

/// sup_t ||(Gamma_alpha(t))_xy||.
struct EigenstateScenario {
  std::vector<std::pair<std::size_t, std::uint32_t>> alpha;
  TimeMode mode = TimeMode::Envelope;
  TimeGrid grid;
};

/// ||(Gamma_beta)_xy||.
struct ThermalScenario {
  double beta = 1.0;
};

/// max over the grid of ||(V_t Gamma_rho V_t^T)_xy|| for a product state of
/// sub-box states; the moment exponent is s/3.
struct QuenchScenario {
  std::vector<std::vector<int>> cuts;
  /// One state per block, or a single state applied to every block.
  std::vector<LocalStateSpec> block_states;
  TimeGrid grid;
};

using Scenario = std::variant<EigencorrScenario, EigenstateScenario, ThermalScenario, QuenchScenario>;

std::string scenario_kind(const Scenario& scenario);

struct PairSelection {
  /// Empty means all ordered pairs (x, y).
  std::vector<std::pair<std::size_t, std::size_t>> listed;
  /// Drop pairs with a site closer than this to the box boundary (diagnostics).
  int bulk_margin = 0;
};

struct ExperimentSpec {
  std::string scenario_id = "scenario";
  LatticeBox box = LatticeBox::make({{0, 0}});
  DisorderConfig disorder;
  Scenario scenario = EigencorrScenario{};
  double s = 0.5;
  std::size_t n_samples = 100;
  PairSelection pairs;
  /// 0 selects worker_count().
  unsigned threads = 0;
  double reject_cap = 0.01;

  void validate() const;
  /// Exponent actually applied to each sample (s, or s/3 for quenches).
  double moment_exponent() const;
};

struct PairMoment {
  std::size_t x = 0;
  std::size_t y = 0;
  int dist = 0;
  std::size_t n_samples = 0;
  std::size_t n_rejected = 0;
  double s = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Per-distance average over every selected pair at that 1-norm distance; the
/// standard error is taken across samples of the per-sample bin average.
struct DistanceBin {
  int dist = 0;
  std::size_t n_pairs = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct MomentTable {
  std::string scenario_id;
  std::string scenario_kind;
  std::vector<PairMoment> rows;
  std::vector<DistanceBin> profile;
  std::size_t n_requested = 0;
  std::size_t n_samples = 0;
  std::size_t n_rejected = 0;
  std::vector<std::uint64_t> rejected_indices;
  double s = 0.0;
  bool conforming = true;
};

/// Worker cap from OSCLAB_THREADS, else the hardware concurrency.
unsigned worker_count();

/// Monte Carlo estimate of E[X_xy^s] over disorder samples 0..n_samples-1.
/// Samples whose spectrum is near-singular or degenerate are skipped and
/// counted. Results are reduced in ascending sample order, so the table does
/// not depend on the number of threads.
MomentTable run_disorder_average(const ExperimentSpec& spec);

/// Per-sample raw quantities (before the fractional power) for the selected
/// pairs. Exposed for tests; throws on rejection.
std::vector<double> sample_quantities(const ExperimentSpec& spec, std::uint64_t sample_index,
                                      const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

std::vector<std::pair<std::size_t, std::size_t>> select_pairs(const LatticeBox& box,
                                                              const PairSelection& sel);

struct DecayFit {
  double eta_hat = 0.0;
  double logC_hat = 0.0;
  double r2 = 0.0;
  int d_min = 0;
  int d_max = 0;
  std::size_t n_pairs = 0;
  std::size_t n_distances = 0;
  std::vector<int> skipped_distances;  // bins with nonpositive mean
};

/// Least squares of ln(mean) against distance after averaging all pairs at
/// equal distance. Needs >= 4 distinct distances with positive means.
DecayFit fit_decay(const std::vector<PairMoment>& rows, int d_min, int d_max);
DecayFit fit_decay(const MomentTable& table, int d_min, int d_max);

/// C'' = C~^(2/3) C'^(1/3) (2 / (1 - e^(-eta~)))^(2d).
double bound_constant(double c_tilde, double c_prime, double eta_tilde, int dim);

struct SingleSiteLevel {
  std::uint32_t n = 0;
  double mean_norm = 0.0;
  double stderr_ = 0.0;
  double ratio = 0.0;  // mean_norm / (1 + 2n)
  double upper = 0.0;  // slope + 1/(2(1+2n))
};

struct SingleSiteReport {
  std::size_t n_samples = 0;
  /// E[max(k^{-1/2}/sqrt2, k^{1/2}/(2 sqrt2))], the asymptotic slope in (1+2n).
  double slope = 0.0;
  /// slope + 1/2 bounds the ratio for every n.
  double c_prime = 0.0;
  std::vector<SingleSiteLevel> levels;
  bool sandwich_ok = false;
  bool monotone_ok = false;
  bool passed = false;
};

/// E||Gamma_n(0)|| for one decoupled oscillator, n = 0..max_n, checked against
/// slope (1+2n) <= E||Gamma_n|| <= slope (1+2n) + 1/2.
SingleSiteReport single_site_moment_bound_check(const DisorderConfig& cfg, std::uint32_t max_n,
                                                std::size_t n_samples);

}  // namespace osclab
