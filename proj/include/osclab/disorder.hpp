#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "osclab/lattice.hpp"

namespace osclab {

enum class DistributionKind {
  Uniform,         // density 1/k_max on [0, k_max]
  TruncatedPower,  // density (p+1) k^p / k_max^(p+1) on [0, k_max]
  PointMass,       // test hook: k = k_max almost surely (no density)
};

/// Spring-constant distribution plus coupling and seed. `k_floor > 0`
/// conditions every draw on k >= k_floor (used for oracle runs and the
/// shifted-support test hook).
struct DisorderConfig {
  DistributionKind kind = DistributionKind::Uniform;
  double k_max = 4.0;
  double p = 0.0;
  double k_floor = 0.0;
  double lambda = 1.0;
  std::uint64_t master_seed = 0;

  void validate() const;
  /// True when the distribution has a bounded density supported on exactly
  /// [0, k_max].
  bool conforming() const;
  double cdf(double k) const;
  double inverse_cdf(double u) const;
  double mean() const;
  std::string describe() const;
};

/// One disorder realisation on a box.
struct KField {
  LatticeBox box;
  std::vector<double> k;
  double lambda = 1.0;
  double k_max = 0.0;  // support bound of the generating distribution
  std::uint64_t sample_index = 0;

  double min_k() const;
  /// Restriction to a sub-box, keeping the parent's values.
  KField restrict_to(const LatticeBox& block, const std::vector<std::size_t>& members) const;
};

/// Independent engine for (master_seed, sample_index); a pure function of the
/// pair, so samples can be drawn in any order on any thread.
std::mt19937_64 substream(std::uint64_t master_seed, std::uint64_t sample_index);

/// Uniform double in [0, 1) with 53 random bits.
double unit_uniform(std::mt19937_64& engine);

double draw_k(const DisorderConfig& cfg, std::mt19937_64& engine);

KField sample_kfield(const DisorderConfig& cfg, const LatticeBox& box, std::uint64_t sample_index);

/// Field with given values, for deterministic tests and oracle comparisons.
KField make_kfield(const LatticeBox& box, std::vector<double> k, double lambda, double k_max = -1.0);

}  // namespace osclab
