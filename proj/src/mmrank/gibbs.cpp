// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mmrank/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mmrank/bounds.hpp"
#include "mmrank/errors.hpp"
#include "mmrank/parallel.hpp"
#include "mmrank/special_math.hpp"

namespace mmrank {
namespace {

// Smallest squared coefficient handed to a GIG draw whose order is <= 0,
// where b = 0 would make the density improper.
constexpr double kGigFloor = 1e-20;

double draw_inverse_scale(double residual, RandomStream& rng) {
  return sample_inverse_gaussian(1.0 / clamped_magnitude(residual), 1.0, rng);
}

double draw_local_variance(double rate, double coef, double shape, RandomStream& rng) {
  const double p = shape - 0.5;
  double b = coef * coef;
  if (p <= 0.0) b = std::max(b, kGigFloor);
  return sample_gig(2.0 * rate, b, p, rng);
}

double draw_normal(double precision, double linear, RandomStream& rng) {
  const double var = 1.0 / precision;
  return var * linear + std::sqrt(var) * rng.normal();
}

// Bounds of column n for every feature, plus which sides exist.
struct ColumnBounds {
  std::vector<double> lower, upper;
  std::vector<char> has_lower, has_upper;
  explicit ColumnBounds(std::size_t d) : lower(d), upper(d), has_lower(d), has_upper(d) {}
};

// Draw z_n coordinate by coordinate. \p w holds A z_n on entry and is kept
// current.
void score_column(ModelState& s, SweepContext const& ctx, std::size_t n, Eigen::VectorXd& w,
                  ColumnBounds const& bounds, RandomStream& rng) {
  auto const& data = ctx.data;
  auto const& A = s.loadings.A;
  auto& Z = s.scores.Z;
  const auto col = static_cast<Eigen::Index>(n);
  const double eps = ctx.hyper.epsilon;
  const std::size_t d = data.dims;
  const std::size_t tasks = data.tasks();
  const auto comp = static_cast<std::size_t>(s.component_of(n));
  const double prior_prec = s.prior_precision(n);

  std::vector<double> margin(tasks, 0.0);
  for (std::size_t m = 0; m < tasks; ++m)
    if (data.labels[m][n] != 0) margin[m] = s.classifiers[m].components[comp].beta.dot(Z.col(col));

  for (Eigen::Index k = 0; k < Z.rows(); ++k) {
    const double z = Z(k, col);
    double prec = prior_prec;
    double lin = prior_prec * s.prior_mean(n, k);
    if (data.rank_mode()) {
      for (std::size_t i = 0; i < d; ++i) {
        const bool hl = bounds.has_lower[i], hu = bounds.has_upper[i];
        if (!hl && !hu) continue;
        const auto row = static_cast<Eigen::Index>(i);
        const double a = A(row, k);
        const double il = s.rank_aug.inv_lower(row, col);
        const double iu = s.rank_aug.inv_upper(row, col);
        const double lam = il + iu;
        prec += a * a * lam;
        const double delta = il * (bounds.lower[i] + eps - w(row)) -
                             iu * (w(row) + eps - bounds.upper[i]) + a * z * lam +
                             (hl ? 1.0 : 0.0) - (hu ? 1.0 : 0.0);
        lin += a * delta;
      }
    } else {
      for (std::size_t i = 0; i < d; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const double a = A(row, k);
        prec += a * a;
        lin += a * (data.standardized(row, col) - w(row) + a * z);
      }
    }
    for (std::size_t m = 0; m < tasks; ++m) {
      const int y = data.labels[m][n];
      if (y == 0) continue;
      const double beta = s.classifiers[m].components[comp].beta(k);
      const double ic = s.classifiers[m].inv_lambda_c(col);
      prec += beta * beta * ic;
      lin += y * beta * (ic * (1.0 - y * (margin[m] - beta * z)) + 1.0);
    }
    const double z_new = draw_normal(prec, lin, rng);
    Z(k, col) = z_new;
    w += A.col(k) * (z_new - z);
    for (std::size_t m = 0; m < tasks; ++m)
      if (data.labels[m][n] != 0) margin[m] += s.classifiers[m].components[comp].beta(k) * (z_new - z);
  }
}

}  // namespace

void GibbsConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (burnin < 0 || burnin >= iterations)
    throw ConfigError("burn-in must be non-negative and below the iteration count");
  if (thin < 1) throw ConfigError("thinning must be at least 1");
  if (threads < 1) throw ConfigError("thread count must be at least 1");
}

WBounds current_w_bounds(ModelState const& state, RankIndex const& idx, std::size_t i,
                         std::size_t n) {
  const auto groups = lower_upper_groups(idx, i, n);
  auto const& A = state.loadings.A;
  auto const& Z = state.scores.Z;
  const auto row = static_cast<Eigen::Index>(i);
  auto w_of = [&](std::size_t s) { return A.row(row).dot(Z.col(static_cast<Eigen::Index>(s))); };
  WBounds out;
  if (!groups.lower.empty()) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t s : groups.lower) hi = std::max(hi, w_of(s));
    out.lower = hi;
  }
  if (!groups.upper.empty()) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t s : groups.upper) lo = std::min(lo, w_of(s));
    out.upper = lo;
  }
  return out;
}

void update_rank_augmentation(ModelState& s, SweepContext const& ctx) {
  if (!ctx.data.rank_mode()) return;
  auto const& A = s.loadings.A;
  auto const& Z = s.scores.Z;
  const std::size_t N = ctx.data.samples;
  const double eps = ctx.hyper.epsilon;
  parallel_for(ctx.data.dims, ctx.config.threads, [&](std::size_t i) {
    auto const& f = ctx.data.ranks.feature(i);
    if (f.is_constant()) return;
    const auto row = static_cast<Eigen::Index>(i);
    const Eigen::VectorXd w = (A.row(row) * Z).transpose();
    std::vector<double> lo(N), up(N);
    f.neighbor_extrema({w.data(), N}, lo, up);
    auto rng = ctx.stream(StreamKind::rank_augmentation, i);
    for (std::size_t n = 0; n < N; ++n) {
      const auto col = static_cast<Eigen::Index>(n);
      if (f.has_lower(n)) s.rank_aug.inv_lower(row, col) = draw_inverse_scale(lo[n] + eps - w(col), rng);
      if (f.has_upper(n)) s.rank_aug.inv_upper(row, col) = draw_inverse_scale(w(col) + eps - up[n], rng);
    }
  });
}

void update_classifier_augmentation(ModelState& s, SweepContext const& ctx, std::size_t task) {
  auto& cs = s.classifiers[task];
  auto const& labels = ctx.data.labels[task];
  auto rng = ctx.stream(StreamKind::classifier_augmentation, task);
  for (std::size_t n = 0; n < ctx.data.samples; ++n) {
    const auto col = static_cast<Eigen::Index>(n);
    const int y = labels[n];
    if (y == 0) {
      cs.inv_lambda_c(col) = 0.0;
      continue;
    }
    auto const& beta = cs.components[static_cast<std::size_t>(s.component_of(n))].beta;
    cs.inv_lambda_c(col) = draw_inverse_scale(1.0 - y * beta.dot(s.scores.Z.col(col)), rng);
  }
}

void update_loadings(ModelState& s, SweepContext const& ctx) {
  auto& A = s.loadings.A;
  auto const& Z = s.scores.Z;
  auto const& data = ctx.data;
  const std::size_t N = data.samples;
  const double eps = ctx.hyper.epsilon;
  parallel_for(data.dims, ctx.config.threads, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    auto rng = ctx.stream(StreamKind::loadings, i);
    Eigen::VectorXd w = (A.row(row) * Z).transpose();
    RankedFeature const* f = data.rank_mode() ? &data.ranks.feature(i) : nullptr;
    const bool active = f != nullptr && !f->is_constant();
    std::vector<double> lo(N), up(N);
    if (active) f->neighbor_extrema({w.data(), N}, lo, up);

    for (Eigen::Index k = 0; k < A.cols(); ++k) {
      const double a = A(row, k);
      double prec = 1.0 / s.loadings.xi(row, k);
      double lin = 0.0;
      if (active) {
        for (std::size_t n = 0; n < N; ++n) {
          const auto col = static_cast<Eigen::Index>(n);
          const bool hl = f->has_lower(n), hu = f->has_upper(n);
          const double z = Z(k, col);
          const double il = s.rank_aug.inv_lower(row, col);
          const double iu = s.rank_aug.inv_upper(row, col);
          const double lam = il + iu;
          prec += z * z * lam;
          const double delta = il * (lo[n] + eps - w(col)) - iu * (w(col) + eps - up[n]) +
                               a * z * lam + (hl ? 1.0 : 0.0) - (hu ? 1.0 : 0.0);
          lin += z * delta;
        }
      } else if (!data.rank_mode()) {
        for (std::size_t n = 0; n < N; ++n) {
          const auto col = static_cast<Eigen::Index>(n);
          const double z = Z(k, col);
          prec += z * z;
          lin += z * (data.standardized(row, col) - w(col) + a * z);
        }
      }
      const double a_new = draw_normal(prec, lin, rng);
      A(row, k) = a_new;
      w += Z.row(k).transpose() * (a_new - a);
      if (active) f->neighbor_extrema({w.data(), N}, lo, up);
    }
  });
}

void update_shrinkage_loadings(ModelState& s, SweepContext const& ctx) {
  auto& L = s.loadings;
  auto const& h = ctx.hyper;
  parallel_for(ctx.data.dims, ctx.config.threads, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    auto rng = ctx.stream(StreamKind::loading_shrinkage, i);
    for (Eigen::Index k = 0; k < L.A.cols(); ++k) {
      L.xi(row, k) = draw_local_variance(L.eta(row, k), L.A(row, k), h.r_a, rng);
      L.eta(row, k) = rng.gamma(h.r_a + h.s_a, L.xi(row, k) + L.phi(k));
    }
  });
  auto rng = ctx.stream(StreamKind::loading_global, 0);
  const double d = static_cast<double>(ctx.data.dims);
  for (Eigen::Index k = 0; k < L.A.cols(); ++k)
    L.phi(k) = rng.gamma(0.5 + d * h.s_a, L.phi_tilde + L.eta.col(k).sum());
  L.phi_tilde = rng.gamma(0.5 + 0.5 * static_cast<double>(L.A.cols()), 1.0 + L.phi.sum());
}

void update_scores(ModelState& s, SweepContext const& ctx) {
  auto const& data = ctx.data;
  const std::size_t d = data.dims;
  const std::size_t N = data.samples;
  Eigen::MatrixXd W = s.loadings.A * s.scores.Z;

  if (!data.rank_mode()) {
    parallel_for(N, ctx.config.parallel ? ctx.config.threads : 1, [&](std::size_t n) {
      Eigen::VectorXd w = W.col(static_cast<Eigen::Index>(n));
      auto rng = ctx.stream(StreamKind::scores, n);
      score_column(s, ctx, n, w, ColumnBounds(0), rng);
    });
    return;
  }

  auto fill = [&](ColumnBounds& b, std::size_t n, auto&& lower, auto&& upper) {
    for (std::size_t i = 0; i < d; ++i) {
      auto const& f = data.ranks.feature(i);
      b.has_lower[i] = f.has_lower(n);
      b.has_upper[i] = f.has_upper(n);
      b.lower[i] = b.has_lower[i] ? lower(i) : 0.0;
      b.upper[i] = b.has_upper[i] ? upper(i) : 0.0;
    }
  };

  if (ctx.config.parallel) {
    Eigen::MatrixXd lo(d, N), up(d, N);
    std::vector<double> row_lo(N), row_up(N), w(N);
    for (std::size_t i = 0; i < d; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      for (std::size_t n = 0; n < N; ++n) w[n] = W(row, static_cast<Eigen::Index>(n));
      data.ranks.feature(i).neighbor_extrema(w, row_lo, row_up);
      for (std::size_t n = 0; n < N; ++n) {
        lo(row, static_cast<Eigen::Index>(n)) = row_lo[n];
        up(row, static_cast<Eigen::Index>(n)) = row_up[n];
      }
    }
    parallel_for(N, ctx.config.threads, [&](std::size_t n) {
      const auto col = static_cast<Eigen::Index>(n);
      ColumnBounds b(d);
      fill(b, n, [&](std::size_t i) { return lo(static_cast<Eigen::Index>(i), col); },
           [&](std::size_t i) { return up(static_cast<Eigen::Index>(i), col); });
      Eigen::VectorXd wcol = W.col(col);
      auto rng = ctx.stream(StreamKind::scores, n);
      score_column(s, ctx, n, wcol, b, rng);
    });
    return;
  }

  std::vector<GroupExtrema> extrema;
  extrema.reserve(d);
  for (std::size_t i = 0; i < d; ++i)
    extrema.emplace_back(data.ranks.feature(i), W, static_cast<Eigen::Index>(i));
  ColumnBounds b(d);
  for (std::size_t n = 0; n < N; ++n) {
    const auto col = static_cast<Eigen::Index>(n);
    fill(b, n, [&](std::size_t i) { return extrema[i].lower(n); },
         [&](std::size_t i) { return extrema[i].upper(n); });
    Eigen::VectorXd wcol = W.col(col);
    auto rng = ctx.stream(StreamKind::scores, n);
    score_column(s, ctx, n, wcol, b, rng);
    for (std::size_t i = 0; i < d; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const double old = W(row, col);
      W(row, col) = wcol(row);
      extrema[i].changed(n, old);
    }
  }
}

void update_classifier(ModelState& s, SweepContext const& ctx, std::size_t task) {
  auto& cs = s.classifiers[task];
  auto const& labels = ctx.data.labels[task];
  auto const& Z = s.scores.Z;
  auto const& h = ctx.hyper;
  const std::size_t comps = cs.components.size();
  const Eigen::Index K = Z.rows();

  for (std::size_t c = 0; c < comps; ++c) {
    auto& comp = cs.components[c];
    auto rng = ctx.stream(StreamKind::classifier, task * comps + c);
    std::vector<std::size_t> members;
    for (std::size_t n = 0; n < ctx.data.samples; ++n)
      if (labels[n] != 0 && static_cast<std::size_t>(s.component_of(n)) == c) members.push_back(n);
    std::vector<double> margin(members.size());
    for (std::size_t j = 0; j < members.size(); ++j)
      margin[j] = comp.beta.dot(Z.col(static_cast<Eigen::Index>(members[j])));

    for (Eigen::Index k = 0; k < K; ++k) {
      const double beta = comp.beta(k);
      double prec = 1.0 / comp.b(k);
      double lin = 0.0;
      for (std::size_t j = 0; j < members.size(); ++j) {
        const auto col = static_cast<Eigen::Index>(members[j]);
        const int y = labels[members[j]];
        const double z = Z(k, col);
        const double ic = cs.inv_lambda_c(col);
        prec += z * z * ic;
        lin += y * z * (ic * (1.0 - y * (margin[j] - beta * z)) + 1.0);
      }
      const double beta_new = draw_normal(prec, lin, rng);
      comp.beta(k) = beta_new;
      for (std::size_t j = 0; j < members.size(); ++j)
        margin[j] += (beta_new - beta) * Z(k, static_cast<Eigen::Index>(members[j]));
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      comp.b(k) = draw_local_variance(comp.e(k), comp.beta(k), h.r_beta, rng);
      comp.e(k) = rng.gamma(h.r_beta + h.s_beta, comp.b(k) + comp.phi);
    }
    comp.phi = rng.gamma(0.5 + static_cast<double>(K) * h.s_beta, comp.phi_tilde + comp.e.sum());
    comp.phi_tilde = rng.gamma(1.0, 1.0 + comp.phi);
  }
}

void update_dpm(ModelState& s, SweepContext const& ctx) {
  if (!s.dpm) return;
  auto& dpm = *s.dpm;
  auto const& Z = s.scores.Z;
  auto const& data = ctx.data;
  auto const& h = ctx.hyper;
  const auto T = static_cast<std::size_t>(dpm.psi.size());
  const Eigen::Index K = Z.rows();
  const double half_k = 0.5 * static_cast<double>(K);

  const Eigen::VectorXd q = stick_weights(dpm.nu);
  parallel_for(data.samples, ctx.config.threads, [&](std::size_t n) {
    const auto col = static_cast<Eigen::Index>(n);
    auto rng = ctx.stream(StreamKind::dpm_assignment, n);
    std::vector<double> logw(T);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < T; ++t) {
      const auto ti = static_cast<Eigen::Index>(t);
      if (!(q(ti) > 0.0)) {
        logw[t] = -std::numeric_limits<double>::infinity();
        continue;
      }
      const double dist = (Z.col(col) - dpm.mu.row(ti).transpose()).squaredNorm();
      double lw = std::log(q(ti)) + half_k * std::log(dpm.psi(ti)) - 0.5 * dpm.psi(ti) * dist;
      if (ctx.config.assignment_label_factor) {
        for (std::size_t m = 0; m < data.tasks(); ++m) {
          const int y = data.labels[m][n];
          if (y == 0) continue;
          const double margin = 1.0 - y * s.classifiers[m].components[t].beta.dot(Z.col(col));
          lw -= 2.0 * std::max(0.0, margin);
        }
      }
      logw[t] = lw;
      top = std::max(top, lw);
    }
    double total = 0.0;
    for (auto& v : logw) {
      v = std::exp(v - top);
      total += v;
    }
    dpm.assign[n] = static_cast<int>(rng.categorical(logw, total));
  });

  std::vector<double> count(T, 0.0);
  Eigen::MatrixXd zsum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T), K);
  for (std::size_t n = 0; n < data.samples; ++n) {
    const auto t = static_cast<std::size_t>(dpm.assign[n]);
    count[t] += 1.0;
    zsum.row(static_cast<Eigen::Index>(t)) += Z.col(static_cast<Eigen::Index>(n)).transpose();
  }

  if (!ctx.config.freeze_dpm_location) {
    for (std::size_t t = 0; t < T; ++t) {
      const auto ti = static_cast<Eigen::Index>(t);
      auto rng = ctx.stream(StreamKind::dpm_component, t);
      const double prec = 1.0 + count[t] * dpm.psi(ti);
      for (Eigen::Index k = 0; k < K; ++k)
        dpm.mu(ti, k) = draw_normal(prec, dpm.psi(ti) * zsum(ti, k), rng);
      double ss = 0.0;
      for (std::size_t n = 0; n < data.samples; ++n)
        if (static_cast<std::size_t>(dpm.assign[n]) == t)
          ss += (Z.col(static_cast<Eigen::Index>(n)) - dpm.mu.row(ti).transpose()).squaredNorm();
      dpm.psi(ti) = rng.gamma(h.psi_shape + count[t] * half_k, h.psi_rate + 0.5 * ss);
    }
  }

  auto rng = ctx.stream(StreamKind::dpm_global, 0);
  double above = 0.0;
  for (double c : count) above += c;
  double log_rest = 0.0;
  for (std::size_t t = 0; t + 1 < T; ++t) {
    above -= count[t];
    const double g1 = rng.gamma(1.0 + count[t], 1.0);
    const double g2 = std::max(rng.gamma(dpm.alpha + above, 1.0), 1e-300);
    dpm.nu(static_cast<Eigen::Index>(t)) = g1 / (g1 + g2);
    log_rest += std::log(g2) - std::log(g1 + g2);
  }
  dpm.nu(static_cast<Eigen::Index>(T) - 1) = 1.0;
  dpm.alpha = rng.gamma(h.alpha_shape + static_cast<double>(T) - 1.0, h.alpha_rate - log_rest);
}

void gibbs_sweep(ModelState& s, SweepContext const& ctx) {
  update_rank_augmentation(s, ctx);
  for (std::size_t m = 0; m < ctx.data.tasks(); ++m) update_classifier_augmentation(s, ctx, m);
  update_loadings(s, ctx);
  update_shrinkage_loadings(s, ctx);
  update_scores(s, ctx);
  for (std::size_t m = 0; m < ctx.data.tasks(); ++m) update_classifier(s, ctx, m);
  update_dpm(s, ctx);
}

PosteriorSummary run_gibbs(TrainingData const& data, Hyperparams const& hyper,
                           GibbsConfig const& config, std::uint64_t seed) {
  config.validate();
  hyper.validate();
  if (hyper.classifier == ClassifierKind::dpm && data.tasks() == 0)
    throw ConfigError("the DPM classifier needs at least one label task");

  ModelState state = init_state(data, hyper, seed);
  const std::size_t tasks = data.tasks();
  const auto comps = static_cast<Eigen::Index>(hyper.components());
  const Eigen::Index K = hyper.factors;

  PosteriorSummary out;
  out.mean_A = Eigen::MatrixXd::Zero(state.loadings.A.rows(), K);
  out.mean_Z = Eigen::MatrixXd::Zero(K, state.scores.Z.cols());
  std::vector<Eigen::MatrixXd> beta_sq(tasks, Eigen::MatrixXd::Zero(K, comps));
  out.mean_beta.assign(tasks, Eigen::MatrixXd::Zero(K, comps));
  if (state.dpm) {
    out.mean_mu = Eigen::MatrixXd::Zero(hyper.truncation, K);
    out.mean_psi = Eigen::VectorXd::Zero(hyper.truncation);
    out.mean_weights = Eigen::VectorXd::Zero(hyper.truncation);
  }
  out.trace.reserve(static_cast<std::size_t>(config.iterations));

  auto accumulate = [&] {
    out.mean_A += state.loadings.A;
    out.mean_Z += state.scores.Z;
    BetaSample sample(tasks);
    for (std::size_t m = 0; m < tasks; ++m) {
      Eigen::MatrixXd beta(K, comps);
      for (Eigen::Index c = 0; c < comps; ++c)
        beta.col(c) = state.classifiers[m].components[static_cast<std::size_t>(c)].beta;
      out.mean_beta[m] += beta;
      beta_sq[m] += beta.cwiseProduct(beta);
      sample[m] = std::move(beta);
    }
    if (config.keep_samples) out.beta_samples.push_back(std::move(sample));
    if (state.dpm) {
      out.mean_mu += state.dpm->mu;
      out.mean_psi += state.dpm->psi;
      out.mean_weights += stick_weights(state.dpm->nu);
    }
    ++out.retained;
  };

  for (int it = 1; it <= config.iterations; ++it) {
    SweepContext ctx{data, hyper, config, seed, static_cast<std::uint64_t>(it)};
    gibbs_sweep(state, ctx);
    check_state(state, "at sweep " + std::to_string(it));
    out.trace.push_back(log_pseudo_joint(state, data, hyper).total());
    if (it > config.burnin && (it - config.burnin) % config.thin == 0) accumulate();
  }
  if (out.retained == 0) accumulate();

  const double inv = 1.0 / static_cast<double>(out.retained);
  out.mean_A *= inv;
  out.mean_Z *= inv;
  out.sd_beta.resize(tasks);
  for (std::size_t m = 0; m < tasks; ++m) {
    out.mean_beta[m] *= inv;
    const Eigen::MatrixXd var =
        (beta_sq[m] * inv - out.mean_beta[m].cwiseProduct(out.mean_beta[m])).cwiseMax(0.0);
    out.sd_beta[m] = var.cwiseSqrt();
  }
  if (state.dpm) {
    out.mean_mu *= inv;
    out.mean_psi *= inv;
    out.mean_weights *= inv;
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace mmrank
