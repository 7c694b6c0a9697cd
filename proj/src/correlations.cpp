#include "osclab/correlations.hpp"

#include <cmath>
#include <string>

#include "osclab/error.hpp"

namespace osclab {

namespace {

constexpr Complex kI{0.0, 1.0};

Eigen::MatrixXcd assemble(const Eigen::MatrixXcd& qq, const Eigen::MatrixXcd& qp,
                          const Eigen::MatrixXcd& pq, const Eigen::MatrixXcd& pp) {
  const auto n = qq.rows();
  Eigen::MatrixXcd out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = qq;
  out.topRightCorner(n, n) = qp;
  out.bottomLeftCorner(n, n) = pq;
  out.bottomRightCorner(n, n) = pp;
  return out;
}

LatticeBox single_site_box() { return LatticeBox::make({{0, 0}}); }

double norm2x2_real(double a, double b, double c, double d) {
  const double f = a * a + b * b + c * c + d * d;
  const double det = a * d - b * c;
  const double disc = std::max(0.0, f * f - 4.0 * det * det);
  return std::sqrt(0.5 * (f + std::sqrt(disc)));
}

}  // namespace

CorrelationMatrix::CorrelationMatrix(LatticeBox box, Eigen::MatrixXcd data, std::string label)
    : box_(std::move(box)), data_(std::move(data)), label_(std::move(label)) {
  const auto n2 = static_cast<Eigen::Index>(2 * box_.n_sites());
  if (data_.rows() != n2 || data_.cols() != n2) {
    throw Error(ErrorKind::DimensionMismatch, "correlation matrix must be 2|Λ| x 2|Λ|");
  }
}

Block2 CorrelationMatrix::block(std::size_t x, std::size_t y) const {
  const auto n = static_cast<Eigen::Index>(n_sites());
  const auto xi = static_cast<Eigen::Index>(x);
  const auto yi = static_cast<Eigen::Index>(y);
  Block2 b;
  b << data_(xi, yi), data_(xi, n + yi), data_(n + xi, yi), data_(n + xi, n + yi);
  return b;
}

Eigen::MatrixXcd CorrelationMatrix::qq() const {
  const auto n = static_cast<Eigen::Index>(n_sites());
  return data_.topLeftCorner(n, n);
}
Eigen::MatrixXcd CorrelationMatrix::qp() const {
  const auto n = static_cast<Eigen::Index>(n_sites());
  return data_.topRightCorner(n, n);
}
Eigen::MatrixXcd CorrelationMatrix::pq() const {
  const auto n = static_cast<Eigen::Index>(n_sites());
  return data_.bottomLeftCorner(n, n);
}
Eigen::MatrixXcd CorrelationMatrix::pp() const {
  const auto n = static_cast<Eigen::Index>(n_sites());
  return data_.bottomRightCorner(n, n);
}

Eigen::MatrixXd symplectic_form(std::size_t n_sites) {
  const auto n = static_cast<Eigen::Index>(n_sites);
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n).setIdentity();
  j.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  return j;
}

double block_norm(const Block2& m) {
  // sigma_max^2 = (|M|_F^2 + sqrt(|M|_F^4 - 4 |det M|^2)) / 2
  const double f = m.squaredNorm();
  const double det = std::abs(m.determinant());
  const double disc = std::max(0.0, f * f - 4.0 * det * det);
  return std::sqrt(0.5 * (f + std::sqrt(disc)));
}

double block_norm(const CorrelationMatrix& gamma, std::size_t x, std::size_t y) {
  return block_norm(gamma.block(x, y));
}

CorrelationMatrix eigenstate_corr(const SpectralData& sd, const ExcitationVector& alpha, double t) {
  if (alpha.size() != sd.n()) {
    throw Error(ErrorKind::DimensionMismatch, "excitation vector length does not match mode count");
  }
  if (alpha.sup_norm() > 0) sd.require_simple();

  const auto n = static_cast<Eigen::Index>(sd.n());
  Eigen::VectorXcd qq(n), qp(n), pp(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double g = sd.gammas[j];
    const double a = alpha[static_cast<std::size_t>(j)];
    const double theta = 2.0 * g * t;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const Complex phase{c, -s};
    qq[j] = a * c / g + 0.5 * phase / g;
    qp[j] = a * s + 0.5 * kI * phase;
    pp[j] = g * a * c + 0.5 * g * phase;
  }
  const Eigen::MatrixXcd mqp = spectral_sum(sd, qp);
  return {sd.box, assemble(spectral_sum(sd, qq), mqp, -mqp, spectral_sum(sd, pp)),
          "eigenstate(t=" + std::to_string(t) + ")"};
}

SupEnvelope EnvelopeField::at(std::size_t x, std::size_t y) const {
  const auto xi = static_cast<Eigen::Index>(x);
  const auto yi = static_cast<Eigen::Index>(y);
  SupEnvelope env;
  env.bound << qq(xi, yi), qp(xi, yi), qp(xi, yi), pp(xi, yi);
  env.norm = norm2x2_real(qq(xi, yi), qp(xi, yi), qp(xi, yi), pp(xi, yi));
  return env;
}

EnvelopeField eigenstate_envelopes(const SpectralData& sd, const ExcitationVector& alpha) {
  if (alpha.size() != sd.n()) {
    throw Error(ErrorKind::DimensionMismatch, "excitation vector length does not match mode count");
  }
  if (alpha.sup_norm() > 0) sd.require_simple();
  // Every entry of Gamma_alpha(t)_xy is sum_j O_xj O_yj w_j trig_j(t) with
  // |trig_j| <= alpha_j + 1/2.
  const Eigen::MatrixXd absO = sd.O.cwiseAbs();
  const Eigen::VectorXd weight = alpha.as_vector().array() + 0.5;
  EnvelopeField env;
  env.qp = absO * weight.asDiagonal() * absO.transpose();
  env.qq = absO * (weight.array() / sd.gammas.array()).matrix().asDiagonal() * absO.transpose();
  env.pp = absO * (weight.array() * sd.gammas.array()).matrix().asDiagonal() * absO.transpose();
  return env;
}

SupEnvelope eigenstate_sup_envelope(const SpectralData& sd, const ExcitationVector& alpha,
                                    std::size_t x, std::size_t y) {
  if (alpha.size() != sd.n()) {
    throw Error(ErrorKind::DimensionMismatch, "excitation vector length does not match mode count");
  }
  if (alpha.sup_norm() > 0) sd.require_simple();
  double bqq = 0.0, bqp = 0.0, bpp = 0.0;
  const auto xi = static_cast<Eigen::Index>(x);
  const auto yi = static_cast<Eigen::Index>(y);
  for (Eigen::Index j = 0; j < sd.O.cols(); ++j) {
    const double w = std::abs(sd.O(xi, j) * sd.O(yi, j)) * (alpha[static_cast<std::size_t>(j)] + 0.5);
    bqq += w / sd.gammas[j];
    bqp += w;
    bpp += w * sd.gammas[j];
  }
  SupEnvelope env;
  env.bound << bqq, bqp, bqp, bpp;
  env.norm = norm2x2_real(bqq, bqp, bqp, bpp);
  return env;
}

double stable_coth(double x) {
  if (x > 20.0) return 1.0 + 2.0 * std::exp(-2.0 * x);
  return 1.0 / std::tanh(x);
}

double thermal_kernel(double beta, double t) { return stable_coth(beta * std::sqrt(t)); }

CorrelationMatrix thermal_corr(const SpectralData& sd, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorKind::ConfigError, "beta must be positive and finite");
  }
  const auto n = static_cast<Eigen::Index>(sd.n());
  Eigen::VectorXd qq(n), pp(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double phi = stable_coth(beta * sd.gammas[j]);
    qq[j] = 0.5 * phi / sd.gammas[j];
    pp[j] = 0.5 * phi * sd.gammas[j];
  }
  const Eigen::MatrixXcd half_i = 0.5 * kI * Eigen::MatrixXcd::Identity(n, n);
  return {sd.box,
          assemble(spectral_sum(sd, qq).cast<Complex>(), half_i, -half_i,
                   spectral_sum(sd, pp).cast<Complex>()),
          "thermal(beta=" + std::to_string(beta) + ")"};
}

CorrelationMatrix single_site_corr(double k, std::uint32_t n) {
  if (!(k > 0.0)) throw Error(ErrorKind::NonpositiveK, "spring constant must be positive");
  const double level = 1.0 + 2.0 * n;
  Eigen::MatrixXcd m(2, 2);
  m << level / (std::sqrt(2.0) * std::sqrt(k)), 0.5 * kI, -0.5 * kI,
      level * std::sqrt(k) / (2.0 * std::sqrt(2.0));
  return {single_site_box(), std::move(m), "single_site(n=" + std::to_string(n) + ")"};
}

Eigen::MatrixXd quench_propagator(const SpectralData& sd, double t) {
  const auto n = static_cast<Eigen::Index>(sd.n());
  if (t == 0.0) return Eigen::MatrixXd::Identity(2 * n, 2 * n);
  Eigen::VectorXd c(n), s_over(n), s_times(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double theta = 2.0 * sd.gammas[j] * t;
    c[j] = std::cos(theta);
    s_over[j] = std::sin(theta) / sd.gammas[j];
    s_times[j] = -std::sin(theta) * sd.gammas[j];
  }
  Eigen::MatrixXd v(2 * n, 2 * n);
  const Eigen::MatrixXd cm = spectral_sum(sd, c);
  v.topLeftCorner(n, n) = cm;
  v.topRightCorner(n, n) = spectral_sum(sd, s_over);
  v.bottomLeftCorner(n, n) = spectral_sum(sd, s_times);
  v.bottomRightCorner(n, n) = cm;
  return v;
}

CorrelationMatrix evolve_correlations(const SpectralData& sd_full, const CorrelationMatrix& gamma0,
                                      double t) {
  if (!(gamma0.box() == sd_full.box) || gamma0.n_sites() != sd_full.n()) {
    throw Error(ErrorKind::DimensionMismatch, "initial correlations live on a different box");
  }
  if (t == 0.0) return gamma0;
  const Eigen::MatrixXd v = quench_propagator(sd_full, t);
  const Eigen::MatrixXd re = v * gamma0.data().real() * v.transpose();
  const Eigen::MatrixXd im = v * gamma0.data().imag() * v.transpose();
  Eigen::MatrixXcd out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return {gamma0.box(), std::move(out), gamma0.label() + "->t=" + std::to_string(t)};
}

QuenchEvolver::QuenchEvolver(const SpectralData& sd_full, const CorrelationMatrix& gamma0)
    : box_(sd_full.box), O_(sd_full.O), gammas_(sd_full.gammas) {
  if (!(gamma0.box() == sd_full.box) || gamma0.n_sites() != sd_full.n()) {
    throw Error(ErrorKind::DimensionMismatch, "initial correlations live on a different box");
  }
  const auto n = static_cast<Eigen::Index>(sd_full.n());
  const Eigen::MatrixXd im = gamma0.data().imag();
  const Eigen::MatrixXd half_j = 0.5 * symplectic_form(sd_full.n());
  const double scale = 1.0 + gamma0.data().cwiseAbs().maxCoeff();
  if ((im - half_j).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorKind::DimensionMismatch,
                "QuenchEvolver needs an equal-time state with imaginary part J/2");
  }
  const Eigen::MatrixXd re = gamma0.data().real();
  const Eigen::MatrixXd ot = O_.transpose();
  gqq_ = ot * re.topLeftCorner(n, n) * O_;
  gqp_ = ot * re.topRightCorner(n, n) * O_;
  gpq_ = ot * re.bottomLeftCorner(n, n) * O_;
  gpp_ = ot * re.bottomRightCorner(n, n) * O_;
}

void QuenchEvolver::real_blocks_at(double t, Eigen::MatrixXd& qq, Eigen::MatrixXd& qp,
                                   Eigen::MatrixXd& pp) const {
  const auto n = gammas_.size();
  // Mode-space rows of V_t: q-row (c, s/g), p-row (-g s, c).
  Eigen::ArrayXd c(n), sg(n), gs(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double theta = 2.0 * gammas_[j] * t;
    c[j] = std::cos(theta);
    const double s = std::sin(theta);
    sg[j] = s / gammas_[j];
    gs[j] = -s * gammas_[j];
  }
  auto conj = [&](const Eigen::ArrayXd& u1, const Eigen::ArrayXd& u2, const Eigen::ArrayXd& v1,
                  const Eigen::ArrayXd& v2) {
    Eigen::MatrixXd x(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        x(i, j) = u1[i] * (gqq_(i, j) * v1[j] + gqp_(i, j) * v2[j]) +
                  u2[i] * (gpq_(i, j) * v1[j] + gpp_(i, j) * v2[j]);
      }
    }
    return x;
  };
  const Eigen::MatrixXd xqq = conj(c, sg, c, sg);
  const Eigen::MatrixXd xqp = conj(c, sg, gs, c);
  const Eigen::MatrixXd xpp = conj(gs, c, gs, c);
  Eigen::MatrixXd tmp(n, n);
  tmp.noalias() = O_ * xqq;
  qq.resize(n, n);
  qq.noalias() = tmp * O_.transpose();
  tmp.noalias() = O_ * xqp;
  qp.resize(n, n);
  qp.noalias() = tmp * O_.transpose();
  tmp.noalias() = O_ * xpp;
  pp.resize(n, n);
  pp.noalias() = tmp * O_.transpose();
}

CorrelationMatrix QuenchEvolver::at(double t) const {
  Eigen::MatrixXd qq, qp, pp;
  real_blocks_at(t, qq, qp, pp);
  const auto n = qq.rows();
  Eigen::MatrixXcd out(2 * n, 2 * n);
  out.real().topLeftCorner(n, n) = qq;
  out.real().topRightCorner(n, n) = qp;
  out.real().bottomLeftCorner(n, n) = qp.transpose();
  out.real().bottomRightCorner(n, n) = pp;
  out.imag() = 0.5 * symplectic_form(static_cast<std::size_t>(n));
  return {box_, std::move(out), "quench(t=" + std::to_string(t) + ")"};
}

CorrelationMatrix product_block_corr(const Decomposition& dec,
                                     const std::vector<CorrelationMatrix>& block_corrs) {
  if (block_corrs.size() != dec.size()) {
    throw Error(ErrorKind::BlockMismatch, "expected " + std::to_string(dec.size()) +
                                              " block correlation matrices, got " +
                                              std::to_string(block_corrs.size()));
  }
  const auto n = static_cast<Eigen::Index>(dec.parent.n_sites());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  for (std::size_t l = 0; l < dec.size(); ++l) {
    const auto& members = dec.members[l];
    const auto& g = block_corrs[l];
    if (g.n_sites() != members.size()) {
      throw Error(ErrorKind::BlockMismatch, "block " + std::to_string(l) + " has " +
                                                std::to_string(members.size()) +
                                                " sites but its correlation matrix has " +
                                                std::to_string(g.n_sites()));
    }
    const auto m = static_cast<Eigen::Index>(members.size());
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) {
        const auto x = static_cast<Eigen::Index>(members[a]);
        const auto y = static_cast<Eigen::Index>(members[b]);
        out(x, y) = g.data()(a, b);
        out(x, n + y) = g.data()(a, m + b);
        out(n + x, y) = g.data()(m + a, b);
        out(n + x, n + y) = g.data()(m + a, m + b);
      }
    }
  }
  return {dec.parent, std::move(out), "product(M=" + std::to_string(dec.size()) + ")"};
}

double eigenfunction_correlator(const SpectralData& sd, std::size_t x, std::size_t y, double power) {
  sd.require_simple();
  const auto xi = static_cast<Eigen::Index>(x);
  const auto yi = static_cast<Eigen::Index>(y);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < sd.O.cols(); ++j) {
    sum += std::pow(sd.eigvals[j], power) * std::abs(sd.O(xi, j) * sd.O(yi, j));
  }
  return sum;
}

Eigen::MatrixXd eigenfunction_correlators(const SpectralData& sd, double power) {
  sd.require_simple();
  const Eigen::MatrixXd absO = sd.O.cwiseAbs();
  const Eigen::VectorXd w = sd.eigvals.array().pow(power);
  return absO * w.asDiagonal() * absO.transpose();
}

void validate(const StateSpec& spec) {
  auto check_local = [](const LocalStateSpec& local) {
    if (const auto* th = std::get_if<ThermalSpec>(&local)) {
      if (!(th->beta > 0.0) || !std::isfinite(th->beta)) {
        throw Error(ErrorKind::ConfigError, "beta must be positive and finite");
      }
    }
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ProductSpec>) {
          if (s.blocks.size() != s.dec.size()) {
            throw Error(ErrorKind::BlockMismatch, "product state needs one local state per block");
          }
          for (const auto& b : s.blocks) check_local(b);
        } else {
          check_local(LocalStateSpec{s});
        }
      },
      spec);
}

CorrelationMatrix static_corr(const KField& kf, const LocalStateSpec& spec) {
  const SpectralData sd = diagonalize(build_h(kf));
  if (const auto* eig = std::get_if<EigenstateSpec>(&spec)) {
    return eigenstate_corr(sd, ExcitationVector::from_sparse(sd.n(), eig->alpha), 0.0);
  }
  return thermal_corr(sd, std::get<ThermalSpec>(spec).beta);
}

CorrelationMatrix static_corr(const KField& kf, const StateSpec& spec) {
  validate(spec);
  if (const auto* prod = std::get_if<ProductSpec>(&spec)) {
    if (!(prod->dec.parent == kf.box)) {
      throw Error(ErrorKind::BlockMismatch, "decomposition parent differs from the field's box");
    }
    std::vector<CorrelationMatrix> blocks;
    blocks.reserve(prod->dec.size());
    for (std::size_t l = 0; l < prod->dec.size(); ++l) {
      blocks.push_back(static_corr(kf.restrict_to(prod->dec.blocks[l], prod->dec.members[l]),
                                   prod->blocks[l]));
    }
    return product_block_corr(prod->dec, blocks);
  }
  if (const auto* eig = std::get_if<EigenstateSpec>(&spec)) return static_corr(kf, LocalStateSpec{*eig});
  return static_corr(kf, LocalStateSpec{std::get<ThermalSpec>(spec)});
}

}  // namespace osclab
