#include "osclab/fock_oracle.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "osclab/error.hpp"

namespace osclab {

namespace {

constexpr Complex kI{0.0, 1.0};

using SpMat = Eigen::SparseMatrix<double>;

/// Embed a local (levels x levels) operator acting on site x.
SpMat embed(const TruncatedSpace& space, std::size_t x, const Eigen::MatrixXd& local) {
  const std::size_t lv = space.levels();
  const std::size_t stride = space.stride(x);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(space.dim * 2);
  for (std::size_t i = 0; i < space.dim; ++i) {
    const std::size_t nx = (i / stride) % lv;
    for (std::size_t m = 0; m < lv; ++m) {
      const double v = local(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(nx));
      if (v != 0.0) {
        const std::size_t row = i + (m - nx) * stride;  // wraps correctly for m < nx
        trips.emplace_back(static_cast<int>(row), static_cast<int>(i), v);
      }
    }
  }
  SpMat out(static_cast<Eigen::Index>(space.dim), static_cast<Eigen::Index>(space.dim));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Eigen::MatrixXd annihilation(std::size_t levels) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(levels),
                                            static_cast<Eigen::Index>(levels));
  for (std::size_t n = 1; n < levels; ++n) {
    a(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(n)) = std::sqrt(static_cast<double>(n));
  }
  return a;
}

Complex inner(const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) { return x.dot(y); }

}  // namespace

std::size_t TruncatedSpace::stride(std::size_t x) const {
  std::size_t s = 1;
  for (std::size_t y = box.n_sites(); y-- > x + 1;) s *= levels();
  return s;
}

double TruncatedSpace::edge_energy() const {
  double base = 0.0;
  double wmin = std::numeric_limits<double>::infinity();
  for (double w : local_freq) {
    base += w;
    wmin = std::min(wmin, w);
  }
  return base + 2.0 * (cutoff + 1) * wmin;
}

TruncatedSpace make_space(const KField& kf, int cutoff, const OracleOptions& opts) {
  if (cutoff < 1) throw Error(ErrorKind::CutoffTooSmall, "cutoff must be >= 1");
  const std::size_t n = kf.box.n_sites();
  for (std::size_t x = 0; x < n; ++x) {
    if (kf.k[x] < opts.k_floor) {
      throw Error(ErrorKind::KTooSmall, "k_" + std::to_string(x) + " = " + std::to_string(kf.k[x]) +
                                            " below oracle floor " + std::to_string(opts.k_floor));
    }
  }
  TruncatedSpace space;
  space.box = kf.box;
  space.cutoff = cutoff;
  double dim = 1.0;
  for (std::size_t x = 0; x < n; ++x) dim *= cutoff + 1.0;
  if (dim > static_cast<double>(opts.max_dim) || dim > static_cast<double>(opts.max_dense_dim)) {
    throw Error(ErrorKind::TooLarge, "truncated space dimension " + std::to_string(dim) +
                                         " exceeds limit");
  }
  space.dim = static_cast<std::size_t>(dim);
  for (std::size_t x = 0; x < n; ++x) {
    const double w2 = kf.lambda * kf.box.degree(x) + 0.5 * kf.k[x];
    space.local_freq.push_back(std::sqrt(w2));
    space.length_scales.push_back(std::pow(4.0 * w2, -0.25));
  }
  return space;
}

TruncatedSpace block_space(const TruncatedSpace& parent, const LatticeBox& block,
                           const std::vector<std::size_t>& members) {
  TruncatedSpace space;
  space.box = block;
  space.cutoff = parent.cutoff;
  space.dim = 1;
  for (auto idx : members) {
    space.dim *= parent.levels();
    space.length_scales.push_back(parent.length_scales[idx]);
    space.local_freq.push_back(parent.local_freq[idx]);
  }
  return space;
}

TruncatedHamiltonian::TruncatedHamiltonian(const KField& kf, TruncatedSpace space)
    : space_(std::move(space)) {
  const std::size_t n = space_.box.n_sites();
  if (kf.box.n_sites() != n) {
    throw Error(ErrorKind::DimensionMismatch, "field and truncated space differ in size");
  }
  const Eigen::Index lv = static_cast<Eigen::Index>(space_.levels());
  const Eigen::MatrixXd a = annihilation(space_.levels());
  const Eigen::MatrixXd ad = a.transpose();
  // Squares are taken one level up and then cut back, so the local terms are
  // P q^2 P rather than (P q P)^2 and the top level keeps its true energy.
  const Eigen::MatrixXd a1 = annihilation(space_.levels() + 1);
  const Eigen::MatrixXd x1 = a1 + a1.transpose();
  const Eigen::MatrixXd y1 = a1.transpose() - a1;
  const Eigen::MatrixXd xx = (x1 * x1).topLeftCorner(lv, lv);
  const Eigen::MatrixXd yy = (y1 * y1).topLeftCorner(lv, lv);
  std::vector<SpMat> qq, pp;
  for (std::size_t x = 0; x < n; ++x) {
    const double c = space_.length_scales[x];
    q_.push_back(embed(space_, x, c * (a + ad)));
    p_.push_back(embed(space_, x, (ad - a) / (2.0 * c)));
    qq.push_back(embed(space_, x, c * c * xx));
    pp.push_back(embed(space_, x, yy / (4.0 * c * c)));
  }

  // H = sum_x p_x^2 + (k_x/2) q_x^2 + lambda sum_edges (q_x - q_y)^2, p = iP.
  const auto d = static_cast<Eigen::Index>(space_.dim);
  SpMat h(d, d);
  for (std::size_t x = 0; x < n; ++x) {
    h -= pp[x];
    h += 0.5 * kf.k[x] * qq[x];
  }
  for (const auto& e : kf.box.edges()) {
    h += kf.lambda * (qq[e.a] + qq[e.b]);
    h -= 2.0 * kf.lambda * (q_[e.a] * q_[e.b]);
  }
  h_ = Eigen::MatrixXd(h);
  h_ = 0.5 * (h_ + h_.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h_);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NoMatch, "truncated Hamiltonian diagonalisation failed");
  }
  energies_ = solver.eigenvalues();
  vectors_ = solver.eigenvectors();
}

Eigen::VectorXcd TruncatedHamiltonian::apply_phase_space(std::size_t a, const Eigen::VectorXcd& v) const {
  const std::size_t n = space_.box.n_sites();
  if (a < n) return q_[a] * v;
  return kI * (p_[a - n] * v);
}

Eigen::VectorXcd TruncatedHamiltonian::evolve(const Eigen::VectorXcd& v, double t) const {
  if (t == 0.0) return v;
  Eigen::VectorXcd coeff = vectors_.transpose() * v;
  for (Eigen::Index i = 0; i < coeff.size(); ++i) {
    coeff[i] *= std::exp(-kI * energies_[i] * t);
  }
  return vectors_ * coeff;
}

TruncatedHamiltonian build_truncated_H(const KField& kf, int cutoff, const OracleOptions& opts) {
  return TruncatedHamiltonian(kf, make_space(kf, cutoff, opts));
}

MixedState MixedState::pure(Eigen::VectorXcd v) {
  MixedState s;
  s.weights.push_back(1.0);
  s.vectors.push_back(std::move(v));
  return s;
}

Eigen::VectorXd find_eigenstate(const TruncatedHamiltonian& h, const SpectralData& sd,
                                const ExcitationVector& alpha) {
  if (alpha.size() != sd.n()) {
    throw Error(ErrorKind::DimensionMismatch, "excitation vector length does not match mode count");
  }
  double target = 0.0;
  for (std::size_t j = 0; j < sd.n(); ++j) {
    target += (2.0 * alpha[j] + 1.0) * sd.gammas[static_cast<Eigen::Index>(j)];
  }
  if (target >= h.space().edge_energy()) {
    throw Error(ErrorKind::NoMatch, "target energy " + std::to_string(target) +
                                        " is above the truncation edge");
  }
  const double tol = 1e-6 * (1.0 + std::abs(target));
  Eigen::Index hit = -1;
  int count = 0;
  const auto& e = h.energies();
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (std::abs(e[i] - target) <= tol) {
      ++count;
      if (hit < 0) hit = i;
    }
  }
  if (count == 0) {
    throw Error(ErrorKind::NoMatch, "no truncated eigenvalue within " + std::to_string(tol) +
                                        " of target " + std::to_string(target));
  }
  if (count > 1) {
    throw Error(ErrorKind::AmbiguousMatch, std::to_string(count) +
                                               " truncated eigenvalues match target " +
                                               std::to_string(target));
  }
  return h.eigenvectors().col(hit);
}

MixedState thermal_density(const TruncatedHamiltonian& h, double beta, const OracleOptions& opts) {
  if (!(beta > 0.0)) throw Error(ErrorKind::ConfigError, "beta must be positive");
  const auto& e = h.energies();
  const double e0 = e[0];
  double z = 0.0;  // relative to e^{-beta e0}
  for (Eigen::Index i = 0; i < e.size(); ++i) z += std::exp(-beta * (e[i] - e0));
  const double log_tail = -beta * (h.space().edge_energy() - e0) - std::log(z);
  if (log_tail > std::log(opts.thermal_tail)) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "CutoffTooSmall: edge Boltzmann weight %.3g exceeds %.3g at cutoff %d, beta %g",
                  std::exp(log_tail), opts.thermal_tail, h.space().cutoff, beta);
    throw Error(ErrorKind::CutoffTooSmall, msg);
  }
  MixedState rho;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const double w = std::exp(-beta * (e[i] - e0)) / z;
    if (w < 1e-17) continue;
    rho.weights.push_back(w);
    rho.vectors.push_back(h.eigenvectors().col(i).cast<Complex>());
  }
  return rho;
}

MixedState product_state(const KField& kf, const TruncatedSpace& space, const Decomposition& dec,
                         const std::vector<LocalStateSpec>& blocks, const OracleOptions& opts) {
  if (blocks.size() != dec.size()) {
    throw Error(ErrorKind::BlockMismatch, "product state needs one local state per block");
  }
  const std::size_t lv = space.levels();
  std::vector<MixedState> local;
  for (std::size_t l = 0; l < dec.size(); ++l) {
    const KField sub = kf.restrict_to(dec.blocks[l], dec.members[l]);
    const TruncatedHamiltonian hb(sub, block_space(space, dec.blocks[l], dec.members[l]));
    if (const auto* eig = std::get_if<EigenstateSpec>(&blocks[l])) {
      const SpectralData sd = diagonalize(build_h(sub));
      const auto alpha = ExcitationVector::from_sparse(sd.n(), eig->alpha);
      local.push_back(MixedState::pure(find_eigenstate(hb, sd, alpha).cast<Complex>()));
    } else {
      local.push_back(thermal_density(hb, std::get<ThermalSpec>(blocks[l]).beta, opts));
    }
  }

  // Digit decomposition of full indices into per-block local indices.
  std::vector<std::vector<std::size_t>> local_index(dec.size(), std::vector<std::size_t>(space.dim));
  for (std::size_t i = 0; i < space.dim; ++i) {
    for (std::size_t l = 0; l < dec.size(); ++l) {
      std::size_t li = 0;
      for (auto site : dec.members[l]) li = li * lv + (i / space.stride(site)) % lv;
      local_index[l][i] = li;
    }
  }

  MixedState out;
  std::vector<std::size_t> pick(dec.size(), 0);
  while (true) {
    double w = 1.0;
    for (std::size_t l = 0; l < dec.size(); ++l) w *= local[l].weights[pick[l]];
    if (w >= 1e-17) {
      Eigen::VectorXcd v(static_cast<Eigen::Index>(space.dim));
      for (std::size_t i = 0; i < space.dim; ++i) {
        Complex amp = 1.0;
        for (std::size_t l = 0; l < dec.size(); ++l) {
          amp *= local[l].vectors[pick[l]][static_cast<Eigen::Index>(local_index[l][i])];
        }
        v[static_cast<Eigen::Index>(i)] = amp;
      }
      out.weights.push_back(w);
      out.vectors.push_back(std::move(v));
    }
    std::size_t l = dec.size();
    while (l > 0 && ++pick[l - 1] == local[l - 1].weights.size()) {
      pick[l - 1] = 0;
      --l;
    }
    if (l == 0) break;
  }
  return out;
}

CorrelationMatrix oracle_corr(const TruncatedHamiltonian& h, const MixedState& rho, double t,
                              OracleTiming timing) {
  const std::size_t n = h.space().box.n_sites();
  const auto n2 = static_cast<Eigen::Index>(2 * n);
  Eigen::MatrixXcd second = Eigen::MatrixXcd::Zero(n2, n2);
  Eigen::VectorXcd left_mean = Eigen::VectorXcd::Zero(n2);
  Eigen::VectorXcd right_mean = Eigen::VectorXcd::Zero(n2);

  std::vector<Eigen::VectorXcd> ra(2 * n), rb(2 * n);
  for (std::size_t m = 0; m < rho.weights.size(); ++m) {
    const double w = rho.weights[m];
    const Eigen::VectorXcd& phi = rho.vectors[m];
    const Eigen::VectorXcd u = h.evolve(phi, t);
    if (timing == OracleTiming::Heisenberg) {
      // <phi| e^{iHt} R_a e^{-iHt} R_b |phi> = <R_a u, e^{-iHt} R_b phi>
      for (std::size_t a = 0; a < 2 * n; ++a) {
        ra[a] = h.apply_phase_space(a, u);
        rb[a] = h.evolve(h.apply_phase_space(a, phi), t);
      }
      for (std::size_t a = 0; a < 2 * n; ++a) {
        left_mean[static_cast<Eigen::Index>(a)] += w * inner(u, ra[a]);
        right_mean[static_cast<Eigen::Index>(a)] += w * inner(phi, h.apply_phase_space(a, phi));
      }
    } else {
      for (std::size_t a = 0; a < 2 * n; ++a) {
        ra[a] = h.apply_phase_space(a, u);
        rb[a] = ra[a];
      }
      for (std::size_t a = 0; a < 2 * n; ++a) {
        const Complex mean = w * inner(u, ra[a]);
        left_mean[static_cast<Eigen::Index>(a)] += mean;
        right_mean[static_cast<Eigen::Index>(a)] += mean;
      }
    }
    for (std::size_t a = 0; a < 2 * n; ++a) {
      for (std::size_t b = 0; b < 2 * n; ++b) {
        second(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += w * inner(ra[a], rb[b]);
      }
    }
  }
  double total = 0.0;
  for (double w : rho.weights) total += w;
  second /= total;
  left_mean /= total;
  right_mean /= total;
  const Eigen::MatrixXcd gamma = second - left_mean * right_mean.transpose();
  return {h.space().box, gamma, "oracle(t=" + std::to_string(t) + ")"};
}

Eigen::VectorXcd oracle_means(const TruncatedHamiltonian& h, const MixedState& rho, double t) {
  const std::size_t n = h.space().box.n_sites();
  Eigen::VectorXcd mean = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(2 * n));
  double total = 0.0;
  for (std::size_t m = 0; m < rho.weights.size(); ++m) {
    const Eigen::VectorXcd u = h.evolve(rho.vectors[m], t);
    for (std::size_t a = 0; a < 2 * n; ++a) {
      mean[static_cast<Eigen::Index>(a)] += rho.weights[m] * inner(u, h.apply_phase_space(a, u));
    }
    total += rho.weights[m];
  }
  return mean / total;
}

int minimal_thermal_cutoff(const KField& kf, double beta, int start, int max_cutoff,
                           const OracleOptions& opts) {
  const SpectralData sd = diagonalize(build_h(kf));
  const double e0 = sd.gammas.sum();
  OracleOptions loose = opts;
  loose.max_dim = std::numeric_limits<std::size_t>::max();
  loose.max_dense_dim = std::numeric_limits<std::size_t>::max();
  for (int nc = std::max(1, start); nc <= max_cutoff; ++nc) {
    const TruncatedSpace space = make_space(kf, nc, loose);
    // Z >= e^{-beta E0}; a margin of 10 covers truncation shifts of E0.
    if (-beta * (space.edge_energy() - e0) < std::log(opts.thermal_tail) - std::log(10.0)) return nc;
  }
  throw Error(ErrorKind::CutoffTooSmall, "no cutoff up to " + std::to_string(max_cutoff) +
                                             " satisfies the thermal guard");
}

}  // namespace osclab
