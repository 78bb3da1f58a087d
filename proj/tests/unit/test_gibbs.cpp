// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <array>

#include "conditional_suite.hpp"
#include "doctest.h"
#include "mmrank/gibbs.hpp"
#include "mmrank/synthetic.hpp"
#include "oracles.hpp"

using namespace mmrank;
using testing::sample_moments;

namespace {

using Update = std::function<void(ModelState&, SweepContext const&)>;

struct Tiny {
  Dataset raw;
  Hyperparams hyper;
  TrainingData data;
  ModelState state;
  GibbsConfig config;
};

// One feature per row of \p values, one label task.
Tiny tiny(Eigen::MatrixXd values, LabelVector labels, int factors) {
  Tiny t;
  t.raw.values = std::move(values);
  t.raw.labels.push_back(std::move(labels));
  t.hyper.factors = factors;
  t.hyper.init = InitScheme::random;
  t.data = TrainingData::from(t.raw, Likelihood::max_margin_rank);
  t.state = init_state(t.data, t.hyper, 1);
  return t;
}

// Repeated draws of one scalar from a frozen state.
std::vector<double> draws(Tiny const& t, Update const& update,
                          std::function<double(ModelState const&)> const& pick, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    ModelState s = t.state;
    SweepContext ctx{t.data, t.hyper, t.config, 17, j};
    update(s, ctx);
    out[j] = pick(s);
  }
  return out;
}

bool near_mean(std::vector<double> const& x, double mean, double sd) {
  return std::abs(sample_moments(x).mean - mean) < 3.0 * sd / std::sqrt(static_cast<double>(x.size()));
}

Dataset synthetic(std::size_t d, std::size_t n, std::uint64_t seed, bool dpm = false) {
  SyntheticSpec spec;
  spec.dims = d;
  spec.samples = n;
  spec.factors = 2;
  spec.dpm = dpm;
  spec.seed = seed;
  return generate_synthetic(spec).data;
}

}  // namespace

TEST_CASE("current bounds take the extremum over a tie group") {
  Eigen::MatrixXd x(1, 3);
  x << 1, 1, 2;
  auto t = tiny(x, {0, 0, 0}, 1);
  t.state.loadings.A << 1.0;
  t.state.scores.Z << 0.3, 0.7, 0.0;
  const auto b = current_w_bounds(t.state, t.data.ranks, 0, 2);
  REQUIRE(b.lower);
  CHECK(*b.lower == 0.7);
  CHECK_FALSE(b.upper);
  const auto c = current_w_bounds(t.state, t.data.ranks, 0, 0);
  CHECK_FALSE(c.lower);
  REQUIRE(c.upper);
  CHECK(*c.upper == 0.0);
  Eigen::MatrixXd y(1, 3);
  y << 3, 1, 2;
  auto u = tiny(y, {0, 0, 0}, 1);
  u.state.loadings.A << 1.0;
  u.state.scores.Z << 0.5, -0.25, 0.125;
  CHECK(*current_w_bounds(u.state, u.data.ranks, 0, 0).lower == 0.125);
}

TEST_CASE("rank augmentation draws") {
  Eigen::MatrixXd x(1, 2);
  x << 1, 2;
  auto t = tiny(x, {0, 0}, 1);
  t.state.loadings.A << 1.0;
  // w^l + eps - w = 0 + 0.05 - 0.55 = -0.5: 1/lambda^l ~ IG(2, 1).
  t.state.scores.Z << 0.0, 0.55;
  const auto v = draws(t, update_rank_augmentation, [](ModelState const& s) { return s.rank_aug.inv_lower(0, 1); },
                       100000);
  CHECK(near_mean(v, 2.0, std::sqrt(8.0)));
  // Absent neighbors stay at zero.
  const auto none = draws(t, update_rank_augmentation,
                          [](ModelState const& s) { return s.rank_aug.inv_lower(0, 0) + s.rank_aug.inv_upper(0, 1); }, 100);
  for (double e : none) CHECK(e == 0.0);
  // A vanishing residual is clamped and stays finite.
  t.state.scores.Z << 0.0, 0.05;
  for (double e : draws(t, update_rank_augmentation, [](ModelState const& s) { return s.rank_aug.inv_lower(0, 1); }, 1000))
    REQUIRE((std::isfinite(e) && e > 0.0));
}

TEST_CASE("hinge augmentation draws") {
  Eigen::MatrixXd x(1, 3);
  x << 1, 1, 1;
  auto t = tiny(x, {1, -1, 0}, 1);
  t.state.scores.Z << 0.5, 1.0, 3.0;
  t.state.classifiers[0].components[0].beta << 1.0;
  auto up = [](ModelState& s, SweepContext const& c) { update_classifier_augmentation(s, c, 0); };
  // y beta z = 0.5: residual 0.5, 1/lambda^c ~ IG(2, 1).
  const auto v = draws(t, up, [](ModelState const& s) { return s.classifiers[0].inv_lambda_c(0); }, 100000);
  CHECK(near_mean(v, 2.0, std::sqrt(8.0)));
  for (double e : draws(t, up, [](ModelState const& s) { return s.classifiers[0].inv_lambda_c(2); }, 100))
    CHECK(e == 0.0);
  // Residual exactly zero.
  t.state.scores.Z << 1.0, 1.0, 3.0;
  for (double e : draws(t, up, [](ModelState const& s) { return s.classifiers[0].inv_lambda_c(0); }, 1000))
    REQUIRE((std::isfinite(e) && e > 0.0));
}

TEST_CASE("loadings without data terms follow the prior") {
  Eigen::MatrixXd x(1, 2);
  x << 4, 4;
  auto t = tiny(x, {0, 0}, 1);
  t.state.loadings.xi << 2.5;
  const auto v = draws(t, update_loadings, [](ModelState const& s) { return s.loadings.A(0, 0); }, 40000);
  const auto m = sample_moments(v);
  CHECK(near_mean(v, 0.0, std::sqrt(2.5)));
  CHECK(m.var == doctest::Approx(2.5).epsilon(0.03));
  CHECK(testing::ks_one_sample(v, [](double a) { return 0.5 * std::erfc(-a / std::sqrt(5.0)); }) > 0.01);
}

TEST_CASE("loadings conditional by hand on a tiny state") {
  // d = 1, K = 1, N = 3 with distinct values; all inverse scales 1.
  Eigen::MatrixXd x(1, 3);
  x << 1, 2, 3;
  auto t = tiny(x, {0, 0, 0}, 1);
  t.state.loadings.A << 0.4;
  t.state.scores.Z << -1.0, 0.5, 2.0;
  t.state.loadings.xi << 0.8;
  // Constraint pairs (lower, upper) = (0,1), (1,2); each sample sees its
  // neighbors' current w. Pseudo-likelihood terms per sample n with a lower
  // neighbor l: N(w_l + eps - a z_n; -1/g, 1/g) with g = 1 (lambda = 1), and
  // with an upper neighbor u: N(a z_n + eps - w_u; -1/g, 1/g).
  const double a0 = 0.4, eps = 0.05, z[] = {-1.0, 0.5, 2.0};
  double prec = 1.0 / 0.8, lin = 0.0;
  // Sample 1 and 2 have lower neighbors 0 and 1; samples 0 and 1 have uppers 1 and 2.
  for (int n : {1, 2}) {
    const double wl = a0 * z[n - 1];
    // (wl + eps - a z + 1)^2 / 2 -> a^2 z^2 / 2 - a z (wl + eps + 1)
    prec += z[n] * z[n];
    lin += z[n] * (wl + eps + 1.0);
  }
  for (int n : {0, 1}) {
    const double wu = a0 * z[n + 1];
    // (a z + eps - wu + 1)^2 / 2 -> a^2 z^2 / 2 + a z (eps - wu + 1)
    prec += z[n] * z[n];
    lin -= z[n] * (eps - wu + 1.0);
  }
  const double var = 1.0 / prec, mean = lin / prec;
  const auto v = draws(t, update_loadings, [](ModelState const& s) { return s.loadings.A(0, 0); }, 100000);
  const auto m = sample_moments(v);
  CHECK(near_mean(v, mean, std::sqrt(var)));
  CHECK(m.var == doctest::Approx(var).epsilon(0.02));
  CHECK(testing::ks_one_sample(v, [&](double a) { return 0.5 * std::erfc(-(a - mean) / std::sqrt(2.0 * var)); }) > 0.01);
}

TEST_CASE("scores conditional") {
  Eigen::MatrixXd x(1, 2);
  x << 4, 4;
  auto t = tiny(x, {1, 0}, 1);
  t.state.classifiers[0].components[0].beta << 1.0;
  t.state.classifiers[0].inv_lambda_c << 1.0, 0.0;
  // sigma^2 = 1/2, mu = 1/2 * (1 + 1) = 1.
  const auto v = draws(t, update_scores, [](ModelState const& s) { return s.scores.Z(0, 0); }, 100000);
  CHECK(near_mean(v, 1.0, std::sqrt(0.5)));
  CHECK(sample_moments(v).var == doctest::Approx(0.5).epsilon(0.02));
  // No data and no label terms: the prior.
  const auto w = draws(t, update_scores, [](ModelState const& s) { return s.scores.Z(0, 1); }, 100000);
  CHECK(near_mean(w, 0.0, 1.0));
  CHECK(sample_moments(w).var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("scores in DPM mode with a standard component match linear mode") {
  const auto raw = synthetic(5, 20, 3);
  Hyperparams h;
  h.factors = 2;
  h.init = InitScheme::random;
  const auto data = TrainingData::from(raw, Likelihood::max_margin_rank);
  ModelState lin = init_state(data, h, 2);
  Hyperparams hd = h;
  hd.classifier = ClassifierKind::dpm;
  hd.truncation = 1;
  ModelState mix = init_state(data, hd, 2);
  lin.classifiers[0].components[0].beta << 0.7, -0.3;
  mix.classifiers[0].components[0].beta << 0.7, -0.3;
  GibbsConfig g;
  for (std::uint64_t sweep = 0; sweep < 5; ++sweep) {
    update_scores(lin, {data, h, g, 4, sweep});
    update_scores(mix, {data, hd, g, 4, sweep});
  }
  CHECK(lin.scores.Z == mix.scores.Z);
}

TEST_CASE("classifier conditional by hand") {
  Eigen::MatrixXd x(1, 2);
  x << 4, 4;
  auto t = tiny(x, {1, 0}, 1);
  t.state.scores.Z << 1.0, 0.0;
  t.state.classifiers[0].inv_lambda_c << 1.0, 0.0;
  t.state.classifiers[0].components[0].b << 1e12;  // b^-1 effectively zero
  auto up = [](ModelState& s, SweepContext const& c) { update_classifier(s, c, 0); };
  const auto v = draws(t, up, [](ModelState const& s) { return s.classifiers[0].components[0].beta(0); }, 100000);
  CHECK(near_mean(v, 2.0, 1.0));
  CHECK(sample_moments(v).var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("an empty mixture component keeps its prior") {
  const auto raw = synthetic(3, 12, 5);
  Hyperparams h;
  h.factors = 2;
  h.truncation = 3;
  h.classifier = ClassifierKind::dpm;
  h.init = InitScheme::random;
  Tiny t;
  t.raw = raw;
  t.hyper = h;
  t.data = TrainingData::from(raw, Likelihood::max_margin_rank);
  t.state = init_state(t.data, h, 1);
  for (auto& a : t.state.dpm->assign) a = a == 2 ? 0 : a;
  t.state.classifiers[0].components[2].b << 0.6, 2.0;
  auto up = [](ModelState& s, SweepContext const& c) { update_classifier(s, c, 0); };
  for (Eigen::Index k = 0; k < 2; ++k) {
    const double b = k == 0 ? 0.6 : 2.0;
    const auto v = draws(t, up, [k](ModelState const& s) { return s.classifiers[0].components[2].beta(k); }, 40000);
    CHECK(near_mean(v, 0.0, std::sqrt(b)));
    CHECK(sample_moments(v).var == doctest::Approx(b).epsilon(0.03));
  }
}

TEST_CASE("shrinkage updates") {
  Eigen::MatrixXd x(2, 3);
  x << 1, 2, 3, 3, 1, 2;
  auto t = tiny(x, {0, 0, 0}, 2);
  t.state.loadings.A << 0.0, 0.5, -1.0, 0.2;
  t.state.loadings.xi << 0.3, 1.0, 2.0, 0.7;
  t.state.loadings.phi << 1.5, 0.4;
  t.state.loadings.phi_tilde = 0.8;
  const double r = t.hyper.r_a, s_ = t.hyper.s_a;
  // eta | . ~ Ga(r + s, xi + phi) given the freshly drawn xi and the
  // incoming phi: compare with the Rao-Blackwellized mean.
  std::vector<double> eta, rb;
  for (std::size_t j = 0; j < 100000; ++j) {
    ModelState st = t.state;
    update_shrinkage_loadings(st, {t.data, t.hyper, t.config, 17, j});
    eta.push_back(st.loadings.eta(1, 0));
    rb.push_back((r + s_) / (st.loadings.xi(1, 0) + 1.5));
  }
  const auto me = sample_moments(eta);
  CHECK(std::abs(me.mean - sample_moments(rb).mean) < 3.0 * std::sqrt(me.var / 100000.0));
  // A zero loading gives a finite, positive local variance.
  for (double v : draws(t, update_shrinkage_loadings, [](ModelState const& s) { return s.loadings.xi(0, 0); }, 2000))
    REQUIRE((std::isfinite(v) && v > 0.0));
}

TEST_CASE("degenerate truncation assigns everything to one component") {
  const auto raw = synthetic(4, 15, 6);
  Hyperparams h;
  h.factors = 2;
  h.truncation = 1;
  h.classifier = ClassifierKind::dpm;
  const auto data = TrainingData::from(raw, Likelihood::max_margin_rank);
  GibbsConfig g;
  g.iterations = 10;
  g.burnin = 0;
  g.thin = 1;
  const auto s = run_gibbs(data, h, g, 3);
  for (int a : s.final_state.dpm->assign) CHECK(a == 0);
  CHECK(s.mean_weights.size() == 1);
  CHECK(s.mean_weights(0) == 1.0);
}

TEST_CASE("DPM separates two distant clusters of scores") {
  const std::size_t N = 200;
  Dataset raw;
  raw.values = Eigen::MatrixXd::Ones(1, N);
  raw.labels.emplace_back(N, 0);
  Hyperparams h;
  h.factors = 2;
  h.classifier = ClassifierKind::dpm;
  h.init = InitScheme::random;
  const auto data = TrainingData::from(raw, Likelihood::max_margin_rank);
  ModelState s = init_state(data, h, 7);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  std::vector<int> truth(N);
  for (std::size_t n = 0; n < N; ++n) {
    truth[n] = n % 2;
    s.scores.Z(0, static_cast<Eigen::Index>(n)) = (truth[n] ? 5.0 : -5.0) + nd(gen);
    s.scores.Z(1, static_cast<Eigen::Index>(n)) = nd(gen);
  }
  GibbsConfig g;
  for (std::uint64_t sweep = 0; sweep < 50; ++sweep) update_dpm(s, {data, h, g, 9, sweep});
  std::map<int, std::array<int, 2>> table;
  for (std::size_t n = 0; n < N; ++n) ++table[s.dpm->assign[n]][static_cast<std::size_t>(truth[n])];
  int correct = 0;
  for (auto const& [comp, counts] : table) correct += std::max(counts[0], counts[1]);
  CHECK(static_cast<double>(correct) / N >= 0.99);
  // Each component is pure, and both clusters are represented.
  std::set<int> majority;
  for (auto const& [comp, counts] : table) majority.insert(counts[0] > counts[1] ? 0 : 1);
  CHECK(majority.size() == 2);
}

TEST_CASE("serial runs are bitwise reproducible") {
  const auto raw = synthetic(10, 40, 8);
  const auto data = TrainingData::from(raw, Likelihood::max_margin_rank);
  Hyperparams h;
  h.factors = 4;
  GibbsConfig g;
  g.iterations = 40;
  g.burnin = 20;
  g.keep_samples = true;
  const auto a = run_gibbs(data, h, g, 5);
  const auto b = run_gibbs(data, h, g, 5);
  CHECK(a.mean_A == b.mean_A);
  CHECK(a.mean_Z == b.mean_Z);
  CHECK(a.mean_beta[0] == b.mean_beta[0]);
  CHECK(a.trace == b.trace);
  CHECK(a.retained == 10);
  CHECK(a.beta_samples.size() == 10);
  CHECK(a.beta_samples[0].size() == 1);
  const auto c = run_gibbs(data, h, g, 6);
  CHECK_FALSE(a.mean_A == c.mean_A);
}

TEST_CASE("parallel sweeps are reproducible across thread counts") {
  const auto raw = synthetic(10, 40, 8, true);
  const auto data = TrainingData::from(raw, Likelihood::max_margin_rank);
  Hyperparams h;
  h.factors = 3;
  h.classifier = ClassifierKind::dpm;
  GibbsConfig g;
  g.iterations = 30;
  g.burnin = 10;
  g.parallel = true;
  g.threads = 1;
  const auto a = run_gibbs(data, h, g, 5);
  g.threads = 3;
  const auto b = run_gibbs(data, h, g, 5);
  CHECK(a.mean_A == b.mean_A);
  CHECK(a.mean_Z == b.mean_Z);
  CHECK(a.trace == b.trace);
  for (double v : a.trace) CHECK(std::isfinite(v));
}

TEST_CASE("Gaussian mode runs without rank augmentation") {
  const auto raw = synthetic(6, 30, 2);
  const auto data = TrainingData::from(raw, Likelihood::gaussian);
  Hyperparams h;
  h.factors = 3;
  h.likelihood = Likelihood::gaussian;
  GibbsConfig g;
  g.iterations = 30;
  g.burnin = 10;
  const auto s = run_gibbs(data, h, g, 1);
  CHECK(s.final_state.rank_aug.inv_lower.size() == 0);
  CHECK(s.mean_A.allFinite());
}

TEST_CASE("configuration validation") {
  GibbsConfig g;
  g.burnin = g.iterations;
  CHECK_THROWS(g.validate());
  g = {};
  g.thin = 0;
  CHECK_THROWS(g.validate());
}

TEST_CASE("every conditional matches its grid oracle") {
  // Reduced-draw version of the acceptance suite.
  for (auto const& c : testing::run_conditional_suite(8000, 3)) {
    CAPTURE(c.name);
    CAPTURE(c.mean_error);
    CAPTURE(c.var_error);
    CAPTURE(c.p_value);
    CHECK(c.mean_error <= 0.08);
    CHECK(c.var_error <= 0.2);
    CHECK(c.p_value > 0.001);
  }
}
