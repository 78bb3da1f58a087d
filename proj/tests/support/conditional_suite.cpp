// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include "conditional_suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include "mmrank/gibbs.hpp"
#include "oracles.hpp"

namespace mmrank::testing {
namespace {

double log_norm(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

double log_gamma(double x, double shape, double rate) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_beta(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) + std::lgamma(a + b) -
         std::lgamma(a) - std::lgamma(b);
}

// Gamma density kernels in the variate and in the rate.
double gamma_kernel_x(double x, double shape, double rate) {
  return (shape - 1.0) * std::log(x) - rate * x;
}
double gamma_kernel_rate(double x, double shape, double rate) {
  return shape * std::log(rate) - rate * x;
}

// Augmented max-margin term exp(-2 max(0, u)) = int N(u; -lambda, lambda).
double log_aug(double u, double inv_lambda) {
  const double lambda = 1.0 / inv_lambda;
  return log_norm(u, -lambda, lambda);
}

struct Bounds {
  std::optional<double> lower, upper;
};

// Extremes of w over the adjacent tie groups, straight from the raw values.
Bounds brute_bounds(Eigen::RowVectorXd const& x, Eigen::RowVectorXd const& w, Eigen::Index n) {
  Bounds b;
  std::optional<double> below, above;
  for (Eigen::Index m = 0; m < x.size(); ++m) {
    if (x(m) < x(n) && (!below || x(m) > *below)) below = x(m);
    if (x(m) > x(n) && (!above || x(m) < *above)) above = x(m);
  }
  for (Eigen::Index m = 0; m < x.size(); ++m) {
    if (below && x(m) == *below) b.lower = std::max(b.lower.value_or(-1e300), w(m));
    if (above && x(m) == *above) b.upper = std::min(b.upper.value_or(1e300), w(m));
  }
  return b;
}

struct Fixture {
  Dataset raw;
  TrainingData data;
  Hyperparams hyper;
  ModelState state;
};

Fixture linear_fixture() {
  Fixture f;
  std::mt19937_64 gen(20240611);
  std::normal_distribution<double> nd;
  const int d = 2, N = 40, K = 2;
  f.raw.values.resize(d, N);
  f.raw.labels.emplace_back(N, 0);
  for (int n = 0; n < N; ++n) {
    for (int i = 0; i < d; ++i) f.raw.values(i, n) = std::round(nd(gen) * 8.0) / 4.0;  // ties
    f.raw.labels[0][n] = n % 7 == 6 ? 0 : (nd(gen) > 0.0 ? 1 : -1);
  }
  f.hyper.factors = K;
  f.hyper.init = InitScheme::random;
  // Shapes of 3 keep the Gamma and GIG conditionals light-tailed enough for a
  // 2% variance check at 1e5 draws to sit beyond 3 standard errors.
  f.hyper.r_a = f.hyper.s_a = f.hyper.r_beta = f.hyper.s_beta = 3.0;
  f.data = TrainingData::from(f.raw, Likelihood::max_margin_rank);
  f.state = init_state(f.data, f.hyper, 5);
  auto& s = f.state;
  s.loadings.A << 0.8, -0.4, 0.3, 0.9;
  for (int n = 0; n < N; ++n)
    for (int k = 0; k < K; ++k) s.scores.Z(k, n) = nd(gen);
  s.loadings.xi << 1.3, 0.6, 0.9, 2.1;
  s.loadings.eta << 0.7, 1.4, 1.1, 0.5;
  s.loadings.phi << 0.9, 1.6;
  s.loadings.phi_tilde = 1.2;
  for (int i = 0; i < d; ++i)
    for (int n = 0; n < N; ++n) {
      if (s.rank_aug.inv_lower(i, n) > 0.0) s.rank_aug.inv_lower(i, n) = 0.5 + std::abs(nd(gen));
      if (s.rank_aug.inv_upper(i, n) > 0.0) s.rank_aug.inv_upper(i, n) = 0.5 + std::abs(nd(gen));
    }
  auto& cs = s.classifiers[0];
  auto& c = cs.components[0];
  c.beta << 0.6, -0.9;
  c.b << 1.5, 0.8;
  c.e << 0.7, 1.1;
  c.phi = 0.9;
  c.phi_tilde = 1.2;
  for (int n = 0; n < N; ++n)
    cs.inv_lambda_c(n) = f.raw.labels[0][n] != 0 ? 0.4 + std::abs(nd(gen)) : 0.0;
  return f;
}

Fixture dpm_fixture() {
  Fixture f;
  std::mt19937_64 gen(7321);
  std::normal_distribution<double> nd;
  const int d = 2, N = 40, K = 2, T = 3;
  f.raw.values.resize(d, N);
  f.raw.labels.emplace_back(N, 0);
  for (int n = 0; n < N; ++n) {
    for (int i = 0; i < d; ++i) f.raw.values(i, n) = nd(gen);
    f.raw.labels[0][n] = nd(gen) > 0.0 ? 1 : -1;
  }
  f.hyper.factors = K;
  f.hyper.truncation = T;
  f.hyper.classifier = ClassifierKind::dpm;
  f.hyper.init = InitScheme::random;
  f.data = TrainingData::from(f.raw, Likelihood::max_margin_rank);
  f.state = init_state(f.data, f.hyper, 5);
  auto& s = f.state;
  auto& dpm = *s.dpm;
  dpm.mu << 2.0, 0.0, -2.0, 0.0, 0.0, 6.0;
  dpm.psi << 2.0, 2.0, 3.0;
  dpm.nu << 0.45, 0.6, 1.0;
  dpm.alpha = 1.3;
  // Sample 0 sits between components 0 and 1; the rest sit firmly in one.
  s.scores.Z.col(0) << 0.1, 0.2;
  for (int n = 1; n < N; ++n) {
    const int t = n % 3;
    for (int k = 0; k < K; ++k) s.scores.Z(k, n) = dpm.mu(t, k) + 0.3 * nd(gen);
    dpm.assign[n] = t;
  }
  dpm.assign[0] = 0;
  auto& cs = s.classifiers[0];
  cs.components[0].beta << 0.5, -0.7;
  cs.components[1].beta << -0.4, 0.3;
  cs.components[2].beta << 0.2, 0.9;
  return f;
}

using Reader = std::function<double(ModelState const&)>;
using Oracle = std::function<GridDistribution(ModelState const&)>;
using Update = std::function<void(ModelState&, SweepContext const&)>;

std::vector<ModelState> draw_states(Fixture const& f, Update const& update, std::size_t draws,
                                    std::uint64_t seed) {
  GibbsConfig config;
  std::vector<ModelState> out;
  out.reserve(draws);
  for (std::size_t j = 0; j < draws; ++j) {
    ModelState s = f.state;
    SweepContext ctx{f.data, f.hyper, config, seed, j + 1};
    update(s, ctx);
    out.push_back(std::move(s));
  }
  return out;
}

// sqrt(Var(s^2)) / sigma^2 from the sample fourth central moment.
double variance_se(std::vector<double> const& x, double mean, double var) {
  double m4 = 0.0;
  for (double v : x) m4 += std::pow(v - mean, 4);
  m4 /= static_cast<double>(x.size());
  return std::sqrt(std::max(m4 - var * var, 0.0) / static_cast<double>(x.size())) / var;
}

// Oracle fixed by the frozen state.
ConditionalCheck frozen_values(std::string name, std::vector<double> const& x,
                               GridDistribution const& oracle) {
  const auto m = sample_moments(x);
  ConditionalCheck c{std::move(name)};
  c.mean_error = std::abs(m.mean - oracle.mean()) / std::max(std::abs(oracle.mean()), std::sqrt(oracle.var()));
  c.var_error = std::abs(m.var - oracle.var()) / oracle.var();
  c.var_se = variance_se(x, m.mean, m.var);
  c.p_value = ks_one_sample(x, [&](double v) { return oracle.cdf(v); });
  return c;
}

ConditionalCheck frozen(std::string name, std::vector<ModelState> const& states, Reader const& read,
                        GridDistribution const& oracle) {
  std::vector<double> x;
  x.reserve(states.size());
  for (auto const& s : states) x.push_back(read(s));
  return frozen_values(std::move(name), x, oracle);
}

// Oracle conditioned on values drawn earlier in the same block. Each draw is
// standardized by its own conditional, so the moment check tests the
// conditional rather than the heavier-tailed mixture over earlier draws; the
// probability integral transform is compared with U(0,1).
class ChainedCollector {
 public:
  void add(GridDistribution const& g, double v) {
    u_.push_back(g.cdf(v));
    z_.push_back((v - g.mean()) / std::sqrt(g.var()));
  }
  ConditionalCheck finish(std::string name) const {
    const auto m = sample_moments(z_);
    ConditionalCheck c{std::move(name)};
    c.mean_error = std::abs(m.mean);
    c.var_error = std::abs(m.var - 1.0);
    c.var_se = variance_se(z_, m.mean, m.var);
    c.p_value = ks_uniform(u_);
    return c;
  }

 private:
  std::vector<double> u_, z_;
};

ConditionalCheck chained(std::string name, std::vector<ModelState> const& states, Reader const& read,
                         Oracle const& oracle) {
  ChainedCollector acc;
  for (auto const& s : states) acc.add(oracle(s), read(s));
  return acc.finish(std::move(name));
}

// Streaming forms for checks that need more draws than are worth storing.
void for_each_draw(Fixture const& f, Update const& update, std::size_t draws, std::uint64_t seed,
                   std::function<void(ModelState const&)> const& visit) {
  GibbsConfig config;
  ModelState s;
  for (std::size_t j = 0; j < draws; ++j) {
    s = f.state;
    SweepContext ctx{f.data, f.hyper, config, seed, j + 1};
    update(s, ctx);
    visit(s);
  }
}

ConditionalCheck frozen_stream(std::string name, Fixture const& f, Update const& update,
                               std::size_t draws, std::uint64_t seed, Reader const& read,
                               GridDistribution const& oracle) {
  std::vector<double> x;
  x.reserve(draws);
  for_each_draw(f, update, draws, seed, [&](ModelState const& s) { x.push_back(read(s)); });
  return frozen_values(std::move(name), x, oracle);
}

ConditionalCheck chained_stream(std::string name, Fixture const& f, Update const& update,
                                std::size_t draws, std::uint64_t seed, Reader const& read,
                                Oracle const& oracle) {
  ChainedCollector acc;
  for_each_draw(f, update, draws, seed, [&](ModelState const& s) { acc.add(oracle(s), read(s)); });
  return acc.finish(std::move(name));
}

// --- joint-density pieces -------------------------------------------------

double rank_terms(Fixture const& f, ModelState const& s, Eigen::Index i, Eigen::Index n,
                  double w_n, Bounds const& b) {
  const double eps = f.hyper.epsilon;
  double lp = 0.0;
  if (b.lower) lp += log_aug(*b.lower + eps - w_n, s.rank_aug.inv_lower(i, n));
  if (b.upper) lp += log_aug(w_n + eps - *b.upper, s.rank_aug.inv_upper(i, n));
  return lp;
}

double hinge_term(ModelState const& s, int y, Eigen::VectorXd const& beta, Eigen::VectorXd const& z,
                  double inv_lambda) {
  return log_aug(1.0 - y * beta.dot(z), inv_lambda);
}

}  // namespace

std::vector<ConditionalCheck> run_conditional_suite(std::size_t draws, std::uint64_t seed) {
  std::vector<ConditionalCheck> out;
  // Checks whose variates have structurally heavy tails take more draws.
  const std::size_t heavy = 4 * draws;
  const Fixture lin = linear_fixture();
  auto const& S0 = lin.state;
  const double eps = lin.hyper.epsilon;
  const Eigen::Index N = static_cast<Eigen::Index>(lin.data.samples);
  auto const& y = lin.raw.labels[0];

  // Rank augmentation: 1/lambda^l and 1/lambda^u of feature 0 at one sample.
  {
    const Eigen::RowVectorXd w0 = S0.loadings.A.row(0) * S0.scores.Z;
    // Interior sample with the largest residuals: 1/lambda ~ IG(1/|r|, 1) has
    // excess kurtosis 15/|r|, so small residuals leave the variance check
    // without power.
    Eigen::Index n = -1;
    double best = 0.0;
    for (Eigen::Index m = 0; m < N; ++m) {
      const Bounds bm = brute_bounds(lin.raw.values.row(0), w0, m);
      if (!bm.lower || !bm.upper) continue;
      const double r = std::min(std::abs(*bm.lower + eps - w0(m)), std::abs(w0(m) + eps - *bm.upper));
      if (r > best) best = r, n = m;
    }
    const Bounds b = brute_bounds(lin.raw.values.row(0), w0, n);
    const double rl = *b.lower + eps - w0(n);
    const double ru = w0(n) + eps - *b.upper;
    for (int side = 0; side < 2; ++side) {
      const double r = side == 0 ? rl : ru;
      // Flat measure on lambda mapped to its reciprocal.
      GridDistribution g(
          [&](double gam) { return log_norm(r, -1.0 / gam, 1.0 / gam) - 2.0 * std::log(gam); },
          Support::positive);
      out.push_back(frozen_stream(side == 0 ? "rank inverse scale (lower)" : "rank inverse scale (upper)",
                                  lin, update_rank_augmentation, heavy, seed,
                                  [&](ModelState const& s) {
                                    return side == 0 ? s.rank_aug.inv_lower(0, n) : s.rank_aug.inv_upper(0, n);
                                  },
                                  g));
    }
  }

  // Hinge augmentation of the labeled sample with the largest residual.
  {
    auto const& beta0 = S0.classifiers[0].components[0].beta;
    Eigen::Index n = 0;
    double r = 0.0;
    for (Eigen::Index m = 0; m < N; ++m) {
      const auto ym = y[static_cast<std::size_t>(m)];
      const double rm = 1.0 - ym * beta0.dot(S0.scores.Z.col(m));
      if (ym != 0 && std::abs(rm) > std::abs(r)) r = rm, n = m;
    }
    GridDistribution g(
        [&](double gam) { return log_norm(r, -1.0 / gam, 1.0 / gam) - 2.0 * std::log(gam); },
        Support::positive);
    out.push_back(frozen_stream(
        "hinge inverse scale", lin,
        [](ModelState& s, SweepContext const& c) { update_classifier_augmentation(s, c, 0); }, heavy,
        seed, [n](ModelState const& s) { return s.classifiers[0].inv_lambda_c(n); }, g));
  }

  // Loading a_{0,0}: neighbor w held at their frozen values.
  {
    const Eigen::RowVectorXd w0 = S0.loadings.A.row(0) * S0.scores.Z;
    std::vector<Bounds> bounds;
    for (Eigen::Index n = 0; n < N; ++n) bounds.push_back(brute_bounds(lin.raw.values.row(0), w0, n));
    GridDistribution g(
        [&](double a) {
          double lp = log_norm(a, 0.0, S0.loadings.xi(0, 0));
          for (Eigen::Index n = 0; n < N; ++n) {
            const double w = a * S0.scores.Z(0, n) + S0.loadings.A(0, 1) * S0.scores.Z(1, n);
            lp += rank_terms(lin, S0, 0, n, w, bounds[static_cast<std::size_t>(n)]);
          }
          return lp;
        },
        Support::real);
    auto states = draw_states(lin, update_loadings, draws, seed);
    out.push_back(frozen("loading a", states, [](ModelState const& s) { return s.loadings.A(0, 0); }, g));
  }

  // Loading shrinkage chain xi -> eta -> phi -> phi_tilde.
  {
    auto const& h = lin.hyper;
    auto states = draw_states(lin, update_shrinkage_loadings, draws, seed);
    GridDistribution gxi(
        [&](double xi) {
          return log_norm(S0.loadings.A(0, 0), 0.0, xi) + log_gamma(xi, h.r_a, S0.loadings.eta(0, 0));
        },
        Support::positive);
    out.push_back(frozen("loading local variance xi", states,
                         [](ModelState const& s) { return s.loadings.xi(0, 0); }, gxi));
    out.push_back(chained(
        "loading local rate eta", states, [](ModelState const& s) { return s.loadings.eta(0, 0); },
        [&](ModelState const& s) {
          return GridDistribution(
              [&](double eta) {
                return gamma_kernel_rate(s.loadings.xi(0, 0), h.r_a, eta) + gamma_kernel_x(eta, h.s_a, S0.loadings.phi(0));
              },
              Support::positive, 401);
        }));
    out.push_back(chained(
        "loading global phi", states, [](ModelState const& s) { return s.loadings.phi(0); },
        [&](ModelState const& s) {
          return GridDistribution(
              [&](double phi) {
                double lp = gamma_kernel_x(phi, 0.5, S0.loadings.phi_tilde);
                for (Eigen::Index i = 0; i < s.loadings.eta.rows(); ++i)
                  lp += gamma_kernel_rate(s.loadings.eta(i, 0), h.s_a, phi);
                return lp;
              },
              Support::positive, 401);
        }));
    out.push_back(chained_stream(
        "loading global phi_tilde", lin, update_shrinkage_loadings, heavy, seed,
        [](ModelState const& s) { return s.loadings.phi_tilde; },
        [&](ModelState const& s) {
          return GridDistribution(
              [&](double pt) {
                double lp = gamma_kernel_x(pt, 0.5, 1.0);
                for (Eigen::Index k = 0; k < s.loadings.phi.size(); ++k)
                  lp += gamma_kernel_rate(s.loadings.phi(k), 0.5, pt);
                return lp;
              },
              Support::positive, 401);
        }));
  }

  // Score z_{0,0}: rank terms of every feature plus the hinge term.
  {
    std::vector<std::vector<Bounds>> bounds(2);
    for (Eigen::Index i = 0; i < 2; ++i) {
      const Eigen::RowVectorXd w = S0.loadings.A.row(i) * S0.scores.Z;
      bounds[i].push_back(brute_bounds(lin.raw.values.row(i), w, 0));
    }
    auto const& comp = S0.classifiers[0].components[0];
    GridDistribution g(
        [&](double z) {
          Eigen::VectorXd zn = S0.scores.Z.col(0);
          zn(0) = z;
          double lp = log_norm(z, 0.0, 1.0);
          for (Eigen::Index i = 0; i < 2; ++i)
            lp += rank_terms(lin, S0, i, 0, S0.loadings.A.row(i).dot(zn), bounds[i][0]);
          if (y[0] != 0) lp += hinge_term(S0, y[0], comp.beta, zn, S0.classifiers[0].inv_lambda_c(0));
          return lp;
        },
        Support::real);
    auto states = draw_states(lin, update_scores, draws, seed);
    out.push_back(frozen("score z", states, [](ModelState const& s) { return s.scores.Z(0, 0); }, g));
  }

  // Classifier block beta -> b -> e -> phi -> phi_tilde.
  {
    auto const& h = lin.hyper;
    auto const& c0 = S0.classifiers[0];
    auto hinge_all = [&](Eigen::VectorXd const& beta) {
      double lp = 0.0;
      for (Eigen::Index n = 0; n < N; ++n)
        if (y[n] != 0) lp += hinge_term(S0, y[n], beta, S0.scores.Z.col(n), c0.inv_lambda_c(n));
      return lp;
    };
    auto states = draw_states(
        lin, [](ModelState& s, SweepContext const& c) { update_classifier(s, c, 0); }, draws, seed);
    GridDistribution g0(
        [&](double b) {
          Eigen::VectorXd beta = c0.components[0].beta;
          beta(0) = b;
          return log_norm(b, 0.0, c0.components[0].b(0)) + hinge_all(beta);
        },
        Support::real);
    out.push_back(frozen("classifier beta", states,
                         [](ModelState const& s) { return s.classifiers[0].components[0].beta(0); }, g0));
    out.push_back(chained(
        "classifier beta (second coordinate)", states,
        [](ModelState const& s) { return s.classifiers[0].components[0].beta(1); },
        [&](ModelState const& s) {
          return GridDistribution(
              [&](double b) {
                Eigen::VectorXd beta(2);
                beta << s.classifiers[0].components[0].beta(0), b;
                return log_norm(b, 0.0, c0.components[0].b(1)) + hinge_all(beta);
              },
              Support::real, 401);
        }));
    out.push_back(chained(
        "classifier local variance b", states,
        [](ModelState const& s) { return s.classifiers[0].components[0].b(0); },
        [&](ModelState const& s) {
          const double beta = s.classifiers[0].components[0].beta(0);
          return GridDistribution(
              [&](double b) {
                return log_norm(beta, 0.0, b) + gamma_kernel_x(b, h.r_beta, c0.components[0].e(0));
              },
              Support::positive, 401);
        }));
    out.push_back(chained(
        "classifier local rate e", states,
        [](ModelState const& s) { return s.classifiers[0].components[0].e(0); },
        [&](ModelState const& s) {
          const double b = s.classifiers[0].components[0].b(0);
          return GridDistribution(
              [&](double e) {
                return gamma_kernel_rate(b, h.r_beta, e) + gamma_kernel_x(e, h.s_beta, c0.components[0].phi);
              },
              Support::positive, 401);
        }));
    out.push_back(chained(
        "classifier global phi", states,
        [](ModelState const& s) { return s.classifiers[0].components[0].phi; },
        [&](ModelState const& s) {
          auto const& e = s.classifiers[0].components[0].e;
          return GridDistribution(
              [&](double phi) {
                double lp = gamma_kernel_x(phi, 0.5, c0.components[0].phi_tilde);
                for (Eigen::Index k = 0; k < e.size(); ++k) lp += gamma_kernel_rate(e(k), h.s_beta, phi);
                return lp;
              },
              Support::positive, 401);
        }));
    out.push_back(chained_stream(
        "classifier global phi_tilde", lin,
        [](ModelState& s, SweepContext const& c) { update_classifier(s, c, 0); }, heavy, seed,
        [](ModelState const& s) { return s.classifiers[0].components[0].phi_tilde; },
        [&](ModelState const& s) {
          const double phi = s.classifiers[0].components[0].phi;
          return GridDistribution(
              [&](double pt) { return gamma_kernel_x(pt, 0.5, 1.0) + gamma_kernel_rate(phi, 0.5, pt); },
              Support::positive, 401);
        }));
  }

  // DPM block: assignment of sample 0, then mu, psi, nu, alpha.
  {
    const Fixture dp = dpm_fixture();
    auto const& D0 = *dp.state.dpm;
    auto const& h = dp.hyper;
    auto const& yd = dp.raw.labels[0];
    const Eigen::Index K = dp.state.scores.Z.rows();
    const int T = h.truncation;
    auto states = draw_states(dp, update_dpm, draws, seed);

    // Assignment probabilities from stick weights, the component density and
    // the marginal hinge factor.
    std::vector<double> prob(T);
    double total = 0.0;
    double rest = 1.0;
    for (int t = 0; t < T; ++t) {
      const double q = D0.nu(t) * rest;
      rest *= 1.0 - D0.nu(t);
      double lp = std::log(q);
      for (Eigen::Index k = 0; k < K; ++k) lp += log_norm(dp.state.scores.Z(k, 0), D0.mu(t, k), 1.0 / D0.psi(t));
      const double margin = 1.0 - yd[0] * dp.state.classifiers[0].components[t].beta.dot(dp.state.scores.Z.col(0));
      lp += -2.0 * std::max(0.0, margin);
      prob[t] = std::exp(lp);
      total += prob[t];
    }
    std::vector<double> freq(T, 0.0);
    for (auto const& s : states) freq[s.dpm->assign[0]] += 1.0;
    ConditionalCheck ct{"DPM assignment t"};
    double chi = 0.0, dof = -1.0;
    for (int t = 0; t < T; ++t) {
      prob[t] /= total;
      const double expect = prob[t] * static_cast<double>(draws);
      if (expect > 5.0) {
        chi += (freq[t] - expect) * (freq[t] - expect) / expect;
        dof += 1.0;
      }
      if (prob[t] > 0.05) ct.var_error = std::max(ct.var_error, std::abs(freq[t] / draws - prob[t]) / prob[t]);
    }
    ct.p_value = dof >= 1.0 ? chi_square_pvalue(chi, dof) : 1.0;
    out.push_back(ct);

    auto members = [&](ModelState const& s, int t) {
      std::vector<Eigen::Index> m;
      for (std::size_t n = 0; n < s.dpm->assign.size(); ++n)
        if (s.dpm->assign[n] == t) m.push_back(static_cast<Eigen::Index>(n));
      return m;
    };
    out.push_back(chained(
        "DPM location mu", states, [](ModelState const& s) { return s.dpm->mu(0, 0); },
        [&](ModelState const& s) {
          const auto mem = members(s, 0);
          return GridDistribution(
              [&](double mu) {
                double lp = -0.5 * mu * mu;
                for (auto n : mem) {
                  const double r = s.scores.Z(0, n) - mu;
                  lp -= 0.5 * D0.psi(0) * r * r;
                }
                return lp;
              },
              Support::real, 401);
        }));
    out.push_back(chained(
        "DPM precision psi", states, [](ModelState const& s) { return s.dpm->psi(0); },
        [&](ModelState const& s) {
          const auto mem = members(s, 0);
          return GridDistribution(
              [&](double psi) {
                double lp = gamma_kernel_x(psi, h.psi_shape, h.psi_rate);
                for (auto n : mem)
                  for (Eigen::Index k = 0; k < K; ++k) {
                    const double r = s.scores.Z(k, n) - s.dpm->mu(0, k);
                    lp += 0.5 * std::log(psi) - 0.5 * psi * r * r;
                  }
                return lp;
              },
              Support::positive, 401);
        }));
    out.push_back(chained(
        "DPM stick nu", states, [](ModelState const& s) { return s.dpm->nu(0); },
        [&](ModelState const& s) {
          double n0 = 0.0, above = 0.0;
          for (int t : s.dpm->assign) (t == 0 ? n0 : above) += 1.0;
          return GridDistribution(
              [&](double nu) {
                // Beta(1, alpha) prior kernel times the stick likelihood.
                return (D0.alpha - 1.0 + above) * std::log1p(-nu) + n0 * std::log(nu);
              },
              Support::unit, 401);
        }));
    out.push_back(chained(
        "DPM concentration alpha", states, [](ModelState const& s) { return s.dpm->alpha; },
        [&](ModelState const& s) {
          return GridDistribution(
              [&](double alpha) {
                double lp = gamma_kernel_x(alpha, h.alpha_shape, h.alpha_rate);
                for (int t = 0; t + 1 < T; ++t) lp += std::log(alpha) + (alpha - 1.0) * std::log1p(-s.dpm->nu(t));
                return lp;
              },
              Support::positive, 401);
        }));
  }
  return out;
}

}  // namespace mmrank::testing
