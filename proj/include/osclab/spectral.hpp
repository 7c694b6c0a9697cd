#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <type_traits>
#include <utility>
#include <vector>

#include "osclab/disorder.hpp"
#include "osclab/lattice.hpp"

namespace osclab {

using Complex = std::complex<double>;

/// h = lambda * (negative Laplacian on the box) + diag(k) / 2.
struct EffectiveHamiltonian {
  LatticeBox box;
  Eigen::MatrixXd matrix;
};

EffectiveHamiltonian build_h(const KField& kf);

struct SpectrumInterval {
  double lo;
  double hi;
  bool contains(double v, double slack = 1e-10) const { return v >= lo - slack && v <= hi + slack; }
};

/// A-priori spectral enclosure [min k / 2, 4 d lambda + k_max / 2].
SpectrumInterval spectrum_bounds(const KField& kf);

/// Eigen-decomposition of h with modes in ascending order. Column j of O is
/// the unit eigenvector for eigvals[j]; its largest-magnitude component (the
/// first one on ties) is positive.
struct SpectralData {
  LatticeBox box;
  Eigen::VectorXd eigvals;  // gamma_j^2, ascending
  Eigen::VectorXd gammas;   // gamma_j > 0
  Eigen::MatrixXd O;
  double min_gamma = 0.0;
  /// min_j (eigvals[j+1] - eigvals[j]) / eigvals[j+1]; +inf for one mode.
  double min_relative_gap = 0.0;

  std::size_t n() const { return static_cast<std::size_t>(eigvals.size()); }
  bool simple(double rel_tol = 1e-10) const { return min_relative_gap >= rel_tol; }
  /// Throws DegenerateSpectrum unless simple(rel_tol).
  void require_simple(double rel_tol = 1e-10) const;
};

/// Throws NearSingular if the smallest eigenvalue is below eps_pos.
SpectralData diagonalize(const EffectiveHamiltonian& h, double eps_pos = 1e-12);

/// O diag(values) O^T.
Eigen::MatrixXd spectral_sum(const SpectralData& sd, const Eigen::VectorXd& values);
Eigen::MatrixXcd spectral_sum(const SpectralData& sd, const Eigen::VectorXcd& values);

/// f(h) = O diag(f(gamma_j^2)) O^T. The scalar type of the result follows the
/// return type of f (double or std::complex<double>).
template <class F>
auto func_calc(const SpectralData& sd, F&& f) {
  using R = std::decay_t<std::invoke_result_t<F&, double>>;
  if constexpr (std::is_same_v<R, Complex>) {
    Eigen::VectorXcd v(sd.eigvals.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = f(sd.eigvals[j]);
    return spectral_sum(sd, v);
  } else {
    Eigen::VectorXd v(sd.eigvals.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = static_cast<double>(f(sd.eigvals[j]));
    return spectral_sum(sd, v);
  }
}

/// Occupation numbers of the normal modes, ordered by ascending gamma.
class ExcitationVector {
 public:
  ExcitationVector() = default;
  explicit ExcitationVector(std::vector<std::uint32_t> alpha);
  static ExcitationVector zeros(std::size_t n_modes);
  /// Sparse (mode_index, count) form; unspecified modes are zero.
  static ExcitationVector from_sparse(std::size_t n_modes,
                                      const std::vector<std::pair<std::size_t, std::uint32_t>>& entries);

  std::size_t size() const { return alpha_.size(); }
  std::uint32_t operator[](std::size_t j) const { return alpha_[j]; }
  const std::vector<std::uint32_t>& values() const { return alpha_; }
  std::uint32_t sup_norm() const { return sup_; }
  std::uint64_t l1_norm() const { return l1_; }
  Eigen::VectorXd as_vector() const;

 private:
  std::vector<std::uint32_t> alpha_;
  std::uint32_t sup_ = 0;
  std::uint64_t l1_ = 0;
};

/// O diag(alpha) O^T. Requires a simple spectrum (DegenerateSpectrum otherwise)
/// and |alpha| = |Lambda| (DimensionMismatch otherwise).
Eigen::MatrixXd mode_diagonal(const SpectralData& sd, const ExcitationVector& alpha);

}  // namespace osclab
