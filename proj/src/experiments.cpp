#include "osclab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "osclab/error.hpp"
#include "osclab/spectral.hpp"

namespace osclab {

TimeGrid TimeGrid::uniform(double t_max, double dt) {
  if (!(dt > 0.0) || !(t_max >= 0.0)) {
    throw Error(ErrorKind::ConfigError, "time grid needs dt > 0 and t_max >= 0");
  }
  TimeGrid g;
  const auto steps = static_cast<std::size_t>(std::floor(t_max / dt + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) g.times.push_back(static_cast<double>(i) * dt);
  return g;
}

std::string scenario_kind(const Scenario& scenario) {
  switch (scenario.index()) {
    case 0: return "eigencorr";
    case 1: return "eigenstate";
    case 2: return "thermal";
    default: return "quench";
  }
}

void ExperimentSpec::validate() const {
  disorder.validate();
  if (!(s > 0.0 && s <= 1.0)) throw Error(ErrorKind::ConfigError, "s out of (0,1]");
  if (n_samples < 1) throw Error(ErrorKind::ConfigError, "n_samples must be >= 1");
  if (!(reject_cap >= 0.0 && reject_cap <= 1.0)) {
    throw Error(ErrorKind::ConfigError, "reject_cap must lie in [0, 1]");
  }
  for (const auto& [x, y] : pairs.listed) {
    if (x >= box.n_sites() || y >= box.n_sites()) {
      throw Error(ErrorKind::ConfigError, "pair index outside the box");
    }
  }
  std::visit(
      [&](const auto& sc) {
        using T = std::decay_t<decltype(sc)>;
        if constexpr (std::is_same_v<T, EigencorrScenario>) {
          if (sc.power != -0.5 && sc.power != 0.0 && sc.power != 0.5) {
            throw Error(ErrorKind::ConfigError, "power must be -0.5, 0 or 0.5");
          }
        } else if constexpr (std::is_same_v<T, EigenstateScenario>) {
          for (const auto& [mode, count] : sc.alpha) {
            (void)count;
            if (mode >= box.n_sites()) throw Error(ErrorKind::ConfigError, "alpha mode index out of range");
          }
          if (sc.mode == TimeMode::Grid && sc.grid.times.empty()) {
            throw Error(ErrorKind::ConfigError, "grid time mode needs a time grid");
          }
        } else if constexpr (std::is_same_v<T, ThermalScenario>) {
          if (!(sc.beta > 0.0) || !std::isfinite(sc.beta)) {
            throw Error(ErrorKind::ConfigError, "beta must be positive and finite");
          }
        } else {
          const Decomposition dec = decompose(box, sc.cuts);
          if (sc.block_states.size() != 1 && sc.block_states.size() != dec.size()) {
            throw Error(ErrorKind::ConfigError, "quench needs 1 or " + std::to_string(dec.size()) +
                                                    " block states");
          }
          if (sc.grid.times.empty()) throw Error(ErrorKind::ConfigError, "quench needs a time grid");
          std::vector<LocalStateSpec> states(dec.size(), sc.block_states.front());
          if (sc.block_states.size() == dec.size()) states = sc.block_states;
          for (std::size_t l = 0; l < dec.size(); ++l) {
            if (const auto* eig = std::get_if<EigenstateSpec>(&states[l])) {
              for (const auto& [mode, count] : eig->alpha) {
                (void)count;
                if (mode >= dec.blocks[l].n_sites()) {
                  throw Error(ErrorKind::ConfigError, "block alpha mode index out of range");
                }
              }
            }
          }
          osclab::validate(StateSpec{ProductSpec{dec, states}});
        }
      },
      scenario);
}

double ExperimentSpec::moment_exponent() const {
  return std::holds_alternative<QuenchScenario>(scenario) ? s / 3.0 : s;
}

unsigned worker_count() {
  if (const char* env = std::getenv("OSCLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<std::pair<std::size_t, std::size_t>> select_pairs(const LatticeBox& box,
                                                              const PairSelection& sel) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  auto in_bulk = [&](std::size_t idx) {
    if (sel.bulk_margin <= 0) return true;
    const auto c = box.site(idx);
    for (int i = 0; i < box.dim(); ++i) {
      const auto iv = box.intervals()[i];
      if (c[i] - iv.lo < sel.bulk_margin || iv.hi - c[i] < sel.bulk_margin) return false;
    }
    return true;
  };
  if (!sel.listed.empty()) {
    for (const auto& p : sel.listed) {
      if (in_bulk(p.first) && in_bulk(p.second)) out.push_back(p);
    }
    return out;
  }
  for (std::size_t x = 0; x < box.n_sites(); ++x) {
    if (!in_bulk(x)) continue;
    for (std::size_t y = 0; y < box.n_sites(); ++y) {
      if (in_bulk(y)) out.emplace_back(x, y);
    }
  }
  return out;
}

namespace {

using PairList = std::vector<std::pair<std::size_t, std::size_t>>;

double real_block_norm(double a, double b, double c, double d) {
  return block_norm((Block2() << a, b, c, d).finished());
}

std::vector<LocalStateSpec> expand_states(const QuenchScenario& q, std::size_t n_blocks) {
  if (q.block_states.size() == n_blocks) return q.block_states;
  return std::vector<LocalStateSpec>(n_blocks, q.block_states.front());
}

std::vector<double> quench_quantities(const KField& kf, const QuenchScenario& q, const PairList& pairs) {
  const Decomposition dec = decompose(kf.box, q.cuts);
  const CorrelationMatrix gamma0 =
      static_corr(kf, StateSpec{ProductSpec{dec, expand_states(q, dec.size())}});
  const SpectralData sd = diagonalize(build_h(kf));
  const QuenchEvolver evolver(sd, gamma0);
  const auto n = static_cast<Eigen::Index>(kf.box.n_sites());

  std::vector<double> best(pairs.size(), 0.0);
  Eigen::MatrixXd qq, qp, pp;
  for (double t : q.grid.times) {
    if (t == 0.0) {
      // The initial product state itself, so off-block entries are exactly zero.
      const Eigen::MatrixXd re = gamma0.data().real();
      qq = re.topLeftCorner(n, n);
      qp = re.topRightCorner(n, n);
      pp = re.bottomRightCorner(n, n);
    } else {
      evolver.real_blocks_at(t, qq, qp, pp);
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto x = static_cast<Eigen::Index>(pairs[i].first);
      const auto y = static_cast<Eigen::Index>(pairs[i].second);
      double norm = 0.0;
      if (x == y) {
        Block2 b;
        b << qq(x, y), Complex(qp(x, y), 0.5), Complex(qp(y, x), -0.5), pp(x, y);
        norm = block_norm(b);
      } else {
        norm = real_block_norm(qq(x, y), qp(x, y), qp(y, x), pp(x, y));
      }
      best[i] = std::max(best[i], norm);
    }
  }
  return best;
}

std::vector<double> eigenstate_quantities(const KField& kf, const EigenstateScenario& sc,
                                          const PairList& pairs) {
  const SpectralData sd = diagonalize(build_h(kf));
  const auto alpha = ExcitationVector::from_sparse(sd.n(), sc.alpha);
  std::vector<double> out(pairs.size(), 0.0);
  if (sc.mode == TimeMode::Envelope) {
    const EnvelopeField env = eigenstate_envelopes(sd, alpha);
    for (std::size_t i = 0; i < pairs.size(); ++i) out[i] = env.at(pairs[i].first, pairs[i].second).norm;
    return out;
  }
  for (double t : sc.grid.times) {
    const CorrelationMatrix g = eigenstate_corr(sd, alpha, t);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      out[i] = std::max(out[i], block_norm(g, pairs[i].first, pairs[i].second));
    }
  }
  return out;
}

struct Welford {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  double stderr_() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

double frac_power(double v, double s) { return v > 0.0 ? std::exp(s * std::log(v)) : 0.0; }

bool is_rejection(ErrorKind kind) {
  return kind == ErrorKind::NearSingular || kind == ErrorKind::DegenerateSpectrum;
}

}  // namespace

std::vector<double> sample_quantities(const ExperimentSpec& spec, std::uint64_t sample_index,
                                      const PairList& pairs) {
  const KField kf = sample_kfield(spec.disorder, spec.box, sample_index);
  return std::visit(
      [&](const auto& sc) -> std::vector<double> {
        using T = std::decay_t<decltype(sc)>;
        if constexpr (std::is_same_v<T, EigencorrScenario>) {
          const SpectralData sd = diagonalize(build_h(kf));
          const Eigen::MatrixXd c = eigenfunction_correlators(sd, sc.power);
          std::vector<double> out(pairs.size());
          for (std::size_t i = 0; i < pairs.size(); ++i) {
            out[i] = c(static_cast<Eigen::Index>(pairs[i].first), static_cast<Eigen::Index>(pairs[i].second));
          }
          return out;
        } else if constexpr (std::is_same_v<T, EigenstateScenario>) {
          return eigenstate_quantities(kf, sc, pairs);
        } else if constexpr (std::is_same_v<T, ThermalScenario>) {
          const SpectralData sd = diagonalize(build_h(kf));
          const CorrelationMatrix g = thermal_corr(sd, sc.beta);
          std::vector<double> out(pairs.size());
          for (std::size_t i = 0; i < pairs.size(); ++i) out[i] = block_norm(g, pairs[i].first, pairs[i].second);
          return out;
        } else {
          return quench_quantities(kf, sc, pairs);
        }
      },
      spec.scenario);
}

MomentTable run_disorder_average(const ExperimentSpec& spec) {
  spec.validate();
  const PairList pairs = select_pairs(spec.box, spec.pairs);
  if (pairs.empty()) throw Error(ErrorKind::ConfigError, "no site pairs selected");
  const double expo = spec.moment_exponent();
  const unsigned threads = std::max(1u, spec.threads == 0 ? worker_count() : spec.threads);

  // Distance bins over the selected pairs.
  std::map<int, std::vector<std::size_t>> bins;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    bins[spec.box.distance(pairs[i].first, pairs[i].second)].push_back(i);
  }

  std::vector<Welford> per_pair(pairs.size());
  std::map<int, Welford> per_bin;
  MomentTable table;
  table.scenario_id = spec.scenario_id;
  table.scenario_kind = scenario_kind(spec.scenario);
  table.n_requested = spec.n_samples;
  table.s = expo;
  table.conforming = spec.disorder.conforming();

  const std::size_t batch = std::max<std::size_t>(16, 4 * static_cast<std::size_t>(threads));
  std::vector<std::optional<std::vector<double>>> slots(batch);
  for (std::size_t start = 0; start < spec.n_samples; start += batch) {
    const std::size_t count = std::min(batch, spec.n_samples - start);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          slots[i] = sample_quantities(spec, start + i, pairs);
        } catch (const Error& e) {
          if (is_rejection(e.kind())) {
            slots[i].reset();
          } else {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    const unsigned n_workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (n_workers <= 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work);
      for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    // Fixed-order reduction.
    for (std::size_t i = 0; i < count; ++i) {
      if (!slots[i]) {
        table.rejected_indices.push_back(start + i);
        continue;
      }
      const auto& q = *slots[i];
      std::vector<double> powered(q.size());
      for (std::size_t p = 0; p < q.size(); ++p) {
        powered[p] = frac_power(q[p], expo);
        per_pair[p].add(powered[p]);
      }
      for (const auto& [d, members] : bins) {
        double sum = 0.0;
        for (auto p : members) sum += powered[p];
        per_bin[d].add(sum / static_cast<double>(members.size()));
      }
      slots[i].reset();
    }
  }

  table.n_rejected = table.rejected_indices.size();
  table.n_samples = spec.n_samples - table.n_rejected;
  if (table.n_samples == 0) {
    throw Error(ErrorKind::AllSamplesRejected, "all " + std::to_string(spec.n_samples) +
                                                   " disorder samples were rejected");
  }
  if (static_cast<double>(table.n_rejected) > spec.reject_cap * static_cast<double>(spec.n_samples)) {
    throw Error(ErrorKind::RejectionCapExceeded,
                std::to_string(table.n_rejected) + " of " + std::to_string(spec.n_samples) +
                    " samples rejected (cap " + std::to_string(spec.reject_cap) + ")");
  }

  table.rows.reserve(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    PairMoment row;
    row.x = pairs[p].first;
    row.y = pairs[p].second;
    row.dist = spec.box.distance(row.x, row.y);
    row.n_samples = table.n_samples;
    row.n_rejected = table.n_rejected;
    row.s = expo;
    row.mean = per_pair[p].mean;
    row.stderr_ = per_pair[p].stderr_();
    table.rows.push_back(row);
  }
  for (const auto& [d, members] : bins) {
    table.profile.push_back({d, members.size(), per_bin[d].mean, per_bin[d].stderr_()});
  }
  return table;
}

DecayFit fit_decay(const std::vector<PairMoment>& rows, int d_min, int d_max) {
  std::map<int, std::pair<double, std::size_t>> bins;
  std::size_t used = 0;
  for (const auto& r : rows) {
    if (r.dist < d_min || r.dist > d_max) continue;
    auto& b = bins[r.dist];
    b.first += r.mean;
    ++b.second;
    ++used;
  }
  DecayFit fit;
  fit.d_min = d_min;
  fit.d_max = d_max;
  fit.n_pairs = used;
  std::vector<double> xs, ys;
  for (const auto& [d, b] : bins) {
    const double m = b.first / static_cast<double>(b.second);
    if (!(m > 0.0)) {
      fit.skipped_distances.push_back(d);
      continue;
    }
    xs.push_back(d);
    ys.push_back(std::log(m));
  }
  if (xs.size() < 4) {
    throw Error(ErrorKind::InsufficientData,
                "need >= 4 distances with positive means in [" + std::to_string(d_min) + ", " +
                    std::to_string(d_max) + "], have " + std::to_string(xs.size()));
  }
  fit.n_distances = xs.size();
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
  if (*ymin == *ymax) {
    fit.eta_hat = 0.0;
    fit.logC_hat = ys.front();
    fit.r2 = 0.0;
    return fit;
  }
  const double slope = sxy / sxx;
  fit.eta_hat = -slope;
  fit.logC_hat = my - slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.logC_hat + slope * xs[i]);
    ss_res += r * r;
  }
  fit.r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  return fit;
}

DecayFit fit_decay(const MomentTable& table, int d_min, int d_max) {
  return fit_decay(table.rows, d_min, d_max);
}

double bound_constant(double c_tilde, double c_prime, double eta_tilde, int dim) {
  if (!(c_tilde > 0.0) || !(c_prime > 0.0) || !(eta_tilde > 0.0) || dim < 1) {
    throw Error(ErrorKind::ConfigError, "bound_constant needs positive inputs and dim >= 1");
  }
  return std::cbrt(c_tilde * c_tilde) * std::cbrt(c_prime) *
         std::pow(2.0 / (1.0 - std::exp(-eta_tilde)), 2 * dim);
}

SingleSiteReport single_site_moment_bound_check(const DisorderConfig& cfg, std::uint32_t max_n,
                                                std::size_t n_samples) {
  cfg.validate();
  const LatticeBox site = LatticeBox::make({{0, 0}});
  SingleSiteReport rep;
  std::vector<Welford> norms(max_n + 1);
  Welford slope;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const KField kf = sample_kfield(cfg, site, i);
    const double k = kf.k[0];
    if (!(k > 0.0)) continue;  // probability zero under a density
    slope.add(std::max(1.0 / (std::sqrt(2.0) * std::sqrt(k)), std::sqrt(k) / (2.0 * std::sqrt(2.0))));
    for (std::uint32_t n = 0; n <= max_n; ++n) {
      norms[n].add(block_norm(single_site_corr(k, n), 0, 0));
    }
  }
  rep.n_samples = slope.n;
  rep.slope = slope.mean;
  rep.c_prime = slope.mean + 0.5;
  rep.sandwich_ok = true;
  rep.monotone_ok = true;
  constexpr double kRel = 1e-12;
  for (std::uint32_t n = 0; n <= max_n; ++n) {
    SingleSiteLevel lv;
    lv.n = n;
    lv.mean_norm = norms[n].mean;
    lv.stderr_ = norms[n].stderr_();
    lv.ratio = lv.mean_norm / (1.0 + 2.0 * n);
    lv.upper = rep.slope + 0.5 / (1.0 + 2.0 * n);
    if (lv.ratio < rep.slope * (1.0 - kRel) || lv.ratio > lv.upper * (1.0 + kRel)) rep.sandwich_ok = false;
    if (!rep.levels.empty() && lv.ratio > rep.levels.back().ratio * (1.0 + kRel)) rep.monotone_ok = false;
    rep.levels.push_back(lv);
  }
  rep.passed = rep.n_samples > 0 && rep.sandwich_ok && rep.monotone_ok;
  return rep;
}

}  // namespace osclab
