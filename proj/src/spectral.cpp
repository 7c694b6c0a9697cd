#include "osclab/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "osclab/error.hpp"

namespace osclab {

EffectiveHamiltonian build_h(const KField& kf) {
  const auto n = static_cast<Eigen::Index>(kf.box.n_sites());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    h(x, x) = kf.lambda * kf.box.degree(static_cast<std::size_t>(x)) + 0.5 * kf.k[x];
  }
  for (const auto& e : kf.box.edges()) {
    h(e.a, e.b) = -kf.lambda;
    h(e.b, e.a) = -kf.lambda;
  }
  return {kf.box, std::move(h)};
}

SpectrumInterval spectrum_bounds(const KField& kf) {
  return {0.5 * kf.min_k(), 4.0 * kf.box.dim() * kf.lambda + 0.5 * kf.k_max};
}

void SpectralData::require_simple(double rel_tol) const {
  if (!simple(rel_tol)) {
    throw Error(ErrorKind::DegenerateSpectrum,
                "spectrum not simple: relative gap " + std::to_string(min_relative_gap));
  }
}

SpectralData diagonalize(const EffectiveHamiltonian& h, double eps_pos) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.matrix);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NearSingular, "eigensolver failed to converge");
  }
  SpectralData sd;
  sd.box = h.box;
  sd.eigvals = solver.eigenvalues();
  sd.O = solver.eigenvectors();
  if (sd.eigvals[0] < eps_pos) {
    throw Error(ErrorKind::NearSingular,
                "smallest eigenvalue " + std::to_string(sd.eigvals[0]) + " below positivity threshold");
  }
  for (Eigen::Index j = 0; j < sd.O.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < sd.O.rows(); ++i) {
      // Strict comparison keeps the first index on (numerical) ties.
      if (std::abs(sd.O(i, j)) > best + 1e-14) {
        best = std::abs(sd.O(i, j));
        arg = i;
      }
    }
    if (sd.O(arg, j) < 0.0) sd.O.col(j) *= -1.0;
  }
  sd.gammas = sd.eigvals.cwiseSqrt();
  sd.min_gamma = sd.gammas[0];
  sd.min_relative_gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j + 1 < sd.eigvals.size(); ++j) {
    const double gap = (sd.eigvals[j + 1] - sd.eigvals[j]) / sd.eigvals[j + 1];
    sd.min_relative_gap = std::min(sd.min_relative_gap, gap);
  }
  return sd;
}

Eigen::MatrixXd spectral_sum(const SpectralData& sd, const Eigen::VectorXd& values) {
  const Eigen::MatrixXd m = sd.O * values.asDiagonal() * sd.O.transpose();
  return 0.5 * (m + m.transpose());
}

Eigen::MatrixXcd spectral_sum(const SpectralData& sd, const Eigen::VectorXcd& values) {
  const Eigen::MatrixXd re = spectral_sum(sd, Eigen::VectorXd(values.real()));
  const Eigen::MatrixXd im = spectral_sum(sd, Eigen::VectorXd(values.imag()));
  Eigen::MatrixXcd out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

ExcitationVector::ExcitationVector(std::vector<std::uint32_t> alpha) : alpha_(std::move(alpha)) {
  for (auto a : alpha_) {
    sup_ = std::max(sup_, a);
    l1_ += a;
  }
}

ExcitationVector ExcitationVector::zeros(std::size_t n_modes) {
  return ExcitationVector(std::vector<std::uint32_t>(n_modes, 0));
}

ExcitationVector ExcitationVector::from_sparse(
    std::size_t n_modes, const std::vector<std::pair<std::size_t, std::uint32_t>>& entries) {
  std::vector<std::uint32_t> alpha(n_modes, 0);
  for (const auto& [mode, count] : entries) {
    if (mode >= n_modes) {
      throw Error(ErrorKind::DimensionMismatch, "mode index " + std::to_string(mode) +
                                                    " out of range for " + std::to_string(n_modes) +
                                                    " modes");
    }
    alpha[mode] = count;
  }
  return ExcitationVector(std::move(alpha));
}

Eigen::VectorXd ExcitationVector::as_vector() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(alpha_.size()));
  for (std::size_t j = 0; j < alpha_.size(); ++j) v[static_cast<Eigen::Index>(j)] = alpha_[j];
  return v;
}

Eigen::MatrixXd mode_diagonal(const SpectralData& sd, const ExcitationVector& alpha) {
  if (alpha.size() != sd.n()) {
    throw Error(ErrorKind::DimensionMismatch, "excitation vector length does not match mode count");
  }
  sd.require_simple();
  return spectral_sum(sd, alpha.as_vector());
}

}  // namespace osclab
