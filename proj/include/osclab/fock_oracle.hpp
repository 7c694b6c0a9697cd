#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "osclab/correlations.hpp"
#include "osclab/disorder.hpp"
#include "osclab/lattice.hpp"
#include "osclab/spectral.hpp"

namespace osclab {

/// Brute-force reference: the full oscillator Hamiltonian written in a
/// truncated product basis of per-site number states, diagonalised densely.
/// Nothing here uses the mode expansions of `correlations`.

struct OracleOptions {
  double k_floor = 0.05;
  std::size_t max_dim = 100000;
  /// Dense storage bound; dim^2 doubles must fit comfortably in memory.
  std::size_t max_dense_dim = 6000;
  double thermal_tail = 1e-10;
};

/// Per-site number basis truncated at `cutoff` bosons. Site x uses the ladder
/// q_x = c_x (a + a^+), p_x = i (a^+ - a) / (2 c_x) with c_x = (4 w_x^2)^(-1/4),
/// where w_x^2 = lambda deg(x) + k_x / 2 is the diagonal stiffness, so the
/// on-site part p_x^2 + w_x^2 q_x^2 is diagonal with levels w_x (2n + 1).
struct TruncatedSpace {
  LatticeBox box;
  int cutoff = 0;
  std::size_t dim = 0;
  std::vector<double> length_scales;
  std::vector<double> local_freq;

  std::size_t levels() const { return static_cast<std::size_t>(cutoff) + 1; }
  /// Index stride of site x (site 0 most significant).
  std::size_t stride(std::size_t x) const;
  /// Smallest energy of the diagonal part among discarded basis states.
  double edge_energy() const;
};

TruncatedSpace make_space(const KField& kf, int cutoff, const OracleOptions& opts = {});

/// Sub-space for a block, reusing the parent's per-site scales so block states
/// embed in the parent basis.
TruncatedSpace block_space(const TruncatedSpace& parent, const LatticeBox& block,
                           const std::vector<std::size_t>& members);

class TruncatedHamiltonian {
 public:
  TruncatedHamiltonian(const KField& kf, TruncatedSpace space);

  const TruncatedSpace& space() const { return space_; }
  const Eigen::MatrixXd& matrix() const { return h_; }
  const Eigen::VectorXd& energies() const { return energies_; }
  const Eigen::MatrixXd& eigenvectors() const { return vectors_; }
  const Eigen::SparseMatrix<double>& position(std::size_t x) const { return q_[x]; }
  /// Real matrix P_x with p_x = i P_x.
  const Eigen::SparseMatrix<double>& momentum_imag(std::size_t x) const { return p_[x]; }

  /// Apply R_a, a < n: q_a; a >= n: p_{a-n}.
  Eigen::VectorXcd apply_phase_space(std::size_t a, const Eigen::VectorXcd& v) const;
  /// e^{-iHt} v
  Eigen::VectorXcd evolve(const Eigen::VectorXcd& v, double t) const;

 private:
  TruncatedSpace space_;
  std::vector<Eigen::SparseMatrix<double>> q_;
  std::vector<Eigen::SparseMatrix<double>> p_;
  Eigen::MatrixXd h_;
  Eigen::VectorXd energies_;
  Eigen::MatrixXd vectors_;
};

/// Throws KTooSmall, TooLarge.
TruncatedHamiltonian build_truncated_H(const KField& kf, int cutoff, const OracleOptions& opts = {});

/// Density matrix as a weighted list of normalised vectors.
struct MixedState {
  std::vector<double> weights;
  std::vector<Eigen::VectorXcd> vectors;

  static MixedState pure(Eigen::VectorXcd v);
};

/// Eigenvector of H_trunc whose energy matches sum_j (2 alpha_j + 1) gamma_j.
/// Throws NoMatch or AmbiguousMatch.
Eigen::VectorXd find_eigenstate(const TruncatedHamiltonian& h, const SpectralData& sd,
                                const ExcitationVector& alpha);

/// Gibbs state of H_trunc. Throws CutoffTooSmall unless the Boltzmann weight of
/// the truncation edge, relative to Z, is below opts.thermal_tail.
MixedState thermal_density(const TruncatedHamiltonian& h, double beta, const OracleOptions& opts = {});

/// Product of block states (eigenstates matched per block, or block Gibbs
/// states), embedded in the full truncated space.
MixedState product_state(const KField& kf, const TruncatedSpace& space, const Decomposition& dec,
                         const std::vector<LocalStateSpec>& blocks, const OracleOptions& opts = {});

enum class OracleTiming {
  Heisenberg,   // <tau_t(R) R^T>_rho - <tau_t(R)>_rho <R^T>_rho
  Schrodinger,  // <R R^T>_{rho_t} - <R>_{rho_t} <R^T>_{rho_t}
};

CorrelationMatrix oracle_corr(const TruncatedHamiltonian& h, const MixedState& rho, double t,
                              OracleTiming timing);

/// (<tau_t(q_x)>, <tau_t(p_x)>) stacked as a 2n vector.
Eigen::VectorXcd oracle_means(const TruncatedHamiltonian& h, const MixedState& rho, double t);

/// Smallest cutoff >= start whose truncation edge carries Boltzmann weight
/// below the guard, estimated against the exact ground energy. The tail alone
/// does not control the coupled eigenvectors in the local basis (2 sites at
/// N_c = 10 pass it yet miss 1e-6), hence the default start of 20.
int minimal_thermal_cutoff(const KField& kf, double beta, int start = 20, int max_cutoff = 400,
                           const OracleOptions& opts = {});

}  // namespace osclab
