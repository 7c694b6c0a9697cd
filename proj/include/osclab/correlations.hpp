#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "osclab/disorder.hpp"
#include "osclab/lattice.hpp"
#include "osclab/spectral.hpp"

namespace osclab {

using Block2 = Eigen::Matrix2cd;

/// 2|Λ| x 2|Λ| complex matrix, rows and columns ordered (q over sites, then
/// p over sites).
class CorrelationMatrix {
 public:
  CorrelationMatrix() = default;
  CorrelationMatrix(LatticeBox box, Eigen::MatrixXcd data, std::string label = {});

  const LatticeBox& box() const { return box_; }
  std::size_t n_sites() const { return box_.n_sites(); }
  const Eigen::MatrixXcd& data() const { return data_; }
  const std::string& label() const { return label_; }

  /// [[qq_xy, qp_xy], [pq_xy, pp_xy]]
  Block2 block(std::size_t x, std::size_t y) const;

  Eigen::MatrixXcd qq() const;
  Eigen::MatrixXcd qp() const;
  Eigen::MatrixXcd pq() const;
  Eigen::MatrixXcd pp() const;

 private:
  LatticeBox box_;
  Eigen::MatrixXcd data_;
  std::string label_;
};

/// J = [[0, I], [-I, 0]].
Eigen::MatrixXd symplectic_form(std::size_t n_sites);

/// Largest singular value of a 2x2 block.
double block_norm(const Block2& m);
double block_norm(const CorrelationMatrix& gamma, std::size_t x, std::size_t y);

/// Dynamic correlations <tau_t(R) R^T> in the eigenstate psi_alpha of the full
/// oscillator system, evaluated mode by mode.
CorrelationMatrix eigenstate_corr(const SpectralData& sd, const ExcitationVector& alpha, double t);

/// Time-independent entrywise bound on |(Gamma_alpha(t))_xy| and the operator
/// norm of that bound (which dominates sup_t ||(Gamma_alpha(t))_xy||).
struct SupEnvelope {
  Eigen::Matrix2d bound;
  double norm = 0.0;
};

SupEnvelope eigenstate_sup_envelope(const SpectralData& sd, const ExcitationVector& alpha,
                                    std::size_t x, std::size_t y);

/// The same envelope for all site pairs at once. The qp and pq bounds coincide.
struct EnvelopeField {
  Eigen::MatrixXd qq;
  Eigen::MatrixXd qp;
  Eigen::MatrixXd pp;

  SupEnvelope at(std::size_t x, std::size_t y) const;
};

EnvelopeField eigenstate_envelopes(const SpectralData& sd, const ExcitationVector& alpha);

/// coth(x) for x > 0 without overflow for large arguments.
double stable_coth(double x);

/// phi(t) = coth(beta sqrt(t)).
double thermal_kernel(double beta, double t);

CorrelationMatrix thermal_corr(const SpectralData& sd, double beta);

/// Closed form for one decoupled oscillator with spring constant k in its
/// n-th eigenstate; returned on the one-site box {0}.
CorrelationMatrix single_site_corr(double k, std::uint32_t n);

/// Phase-space propagator V_t with tau_t(q, p) = V_t (q, p).
Eigen::MatrixXd quench_propagator(const SpectralData& sd, double t);

/// V_t Gamma0 V_t^T. Returns gamma0 unchanged at t = 0.
CorrelationMatrix evolve_correlations(const SpectralData& sd_full, const CorrelationMatrix& gamma0,
                                      double t);

/// Repeated evaluation of V_t Gamma0 V_t^T on a time grid. Works in the
/// eigenbasis of h so each time step costs six n x n products. Gamma0 must be
/// Hermitian with imaginary part J/2 (every physical equal-time state).
class QuenchEvolver {
 public:
  QuenchEvolver(const SpectralData& sd_full, const CorrelationMatrix& gamma0);

  /// Real part of the evolved matrix; the imaginary part is J/2 at all t.
  void real_blocks_at(double t, Eigen::MatrixXd& qq, Eigen::MatrixXd& qp, Eigen::MatrixXd& pp) const;
  CorrelationMatrix at(double t) const;

 private:
  LatticeBox box_;
  Eigen::MatrixXd O_;
  Eigen::VectorXd gammas_;
  Eigen::MatrixXd gqq_, gqp_, gpq_, gpp_;  // eigenbasis
};

/// Assemble the block-diagonal correlations of a product state from the
/// per-block matrices (each in its block's own site order).
CorrelationMatrix product_block_corr(const Decomposition& dec,
                                     const std::vector<CorrelationMatrix>& block_corrs);

/// sup_{|g| <= 1} |<delta_x, h^power g(h) delta_y>| for power in {-1/2, 0, 1/2},
/// attained by a phase-aligning g on a simple spectrum.
double eigenfunction_correlator(const SpectralData& sd, std::size_t x, std::size_t y, double power);
Eigen::MatrixXd eigenfunction_correlators(const SpectralData& sd, double power);

// Initial-state descriptions.

struct EigenstateSpec {
  std::vector<std::pair<std::size_t, std::uint32_t>> alpha;  // sparse (mode, count)
};

struct ThermalSpec {
  double beta = 1.0;
};

using LocalStateSpec = std::variant<EigenstateSpec, ThermalSpec>;

struct ProductSpec {
  Decomposition dec;
  std::vector<LocalStateSpec> blocks;
};

using StateSpec = std::variant<EigenstateSpec, ThermalSpec, ProductSpec>;

void validate(const StateSpec& spec);

/// Time-zero correlation matrix of a state with respect to the Hamiltonian
/// built from kf (product blocks use the restricted sub-box Hamiltonians).
CorrelationMatrix static_corr(const KField& kf, const StateSpec& spec);
CorrelationMatrix static_corr(const KField& kf, const LocalStateSpec& spec);

}  // namespace osclab
