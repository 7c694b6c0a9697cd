#include "osclab/disorder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "osclab/error.hpp"

namespace osclab {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void DisorderConfig::validate() const {
  if (!(k_max > 0.0) || !std::isfinite(k_max)) {
    throw Error(ErrorKind::ConfigError, "distribution.k_max must be positive and finite");
  }
  if (kind == DistributionKind::TruncatedPower && !(p >= 0.0)) {
    throw Error(ErrorKind::ConfigError, "distribution.p must be >= 0");
  }
  if (!(k_floor >= 0.0) || k_floor >= k_max) {
    throw Error(ErrorKind::ConfigError, "distribution.k_floor must lie in [0, k_max)");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::ConfigError, "lambda must be positive and finite");
  }
}

bool DisorderConfig::conforming() const {
  return kind != DistributionKind::PointMass && k_floor == 0.0;
}

double DisorderConfig::cdf(double k) const {
  if (kind == DistributionKind::PointMass) return k >= k_max ? 1.0 : 0.0;
  const double x = std::clamp(k / k_max, 0.0, 1.0);
  const double expo = kind == DistributionKind::Uniform ? 1.0 : p + 1.0;
  const double base = std::pow(k_floor / k_max, expo);
  if (k < k_floor) return 0.0;
  return (std::pow(x, expo) - base) / (1.0 - base);
}

double DisorderConfig::inverse_cdf(double u) const {
  if (kind == DistributionKind::PointMass) return k_max;
  const double expo = kind == DistributionKind::Uniform ? 1.0 : p + 1.0;
  const double base = std::pow(k_floor / k_max, expo);
  const double v = base + u * (1.0 - base);
  const double k = expo == 1.0 ? k_max * v : k_max * std::pow(v, 1.0 / expo);
  return std::clamp(k, k_floor, k_max);
}

double DisorderConfig::mean() const {
  if (kind == DistributionKind::PointMass) return k_max;
  const double expo = kind == DistributionKind::Uniform ? 1.0 : p + 1.0;
  // E[k | k >= f] for density expo k^(expo-1)/k_max^expo.
  const double f = k_floor / k_max;
  const double num = expo / (expo + 1.0) * (1.0 - std::pow(f, expo + 1.0));
  const double den = 1.0 - std::pow(f, expo);
  return k_max * num / den;
}

std::string DisorderConfig::describe() const {
  std::ostringstream os;
  switch (kind) {
    case DistributionKind::Uniform: os << "uniform[0," << k_max << "]"; break;
    case DistributionKind::TruncatedPower: os << "power(p=" << p << ")[0," << k_max << "]"; break;
    case DistributionKind::PointMass: os << "point(" << k_max << ")"; break;
  }
  if (k_floor > 0.0) os << "|k>=" << k_floor;
  os << ",lambda=" << lambda;
  return os.str();
}

double KField::min_k() const { return *std::min_element(k.begin(), k.end()); }

KField KField::restrict_to(const LatticeBox& block, const std::vector<std::size_t>& members) const {
  KField sub{block, {}, lambda, k_max, sample_index};
  sub.k.reserve(members.size());
  for (auto idx : members) sub.k.push_back(k[idx]);
  return sub;
}

std::mt19937_64 substream(std::uint64_t master_seed, std::uint64_t sample_index) {
  const std::uint64_t a = splitmix64(master_seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(sample_index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

double unit_uniform(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

double draw_k(const DisorderConfig& cfg, std::mt19937_64& engine) {
  return cfg.inverse_cdf(unit_uniform(engine));
}

KField sample_kfield(const DisorderConfig& cfg, const LatticeBox& box, std::uint64_t sample_index) {
  auto engine = substream(cfg.master_seed, sample_index);
  KField kf{box, {}, cfg.lambda, cfg.k_max, sample_index};
  kf.k.resize(box.n_sites());
  for (auto& v : kf.k) v = draw_k(cfg, engine);
  return kf;
}

KField make_kfield(const LatticeBox& box, std::vector<double> k, double lambda, double k_max) {
  if (k.size() != box.n_sites()) {
    throw Error(ErrorKind::DimensionMismatch, "k values do not match box size");
  }
  KField kf{box, std::move(k), lambda, k_max, 0};
  if (kf.k_max < 0.0) kf.k_max = *std::max_element(kf.k.begin(), kf.k.end());
  return kf;
}

}  // namespace osclab
