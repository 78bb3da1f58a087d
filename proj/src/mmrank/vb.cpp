// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mmrank/vb.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mmrank/errors.hpp"
#include "mmrank/parallel.hpp"
#include "mmrank/random.hpp"
#include "mmrank/special_math.hpp"

namespace mmrank {
namespace {

constexpr double kSecondMomentFloor = 1e-20;

double inverse_moment(double residual) { return 1.0 / clamped_magnitude(residual); }

double max_relative_change(Eigen::MatrixXd const& before, Eigen::MatrixXd const& after) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < after.size(); ++j) {
    const double m = after.data()[j];
    worst = std::max(worst, std::abs(m - before.data()[j]) / (std::abs(m) + 1e-8));
  }
  return worst;
}

void check_finite(Eigen::MatrixXd const& m, char const* name, int iteration) {
  if (!m.allFinite())
    throw NumericError(std::string("non-finite <") + name + "> at VB iteration " +
                       std::to_string(iteration));
}

}  // namespace

void VbConfig::validate() const {
  if (!(tolerance > 0.0)) throw ConfigError("VB tolerance must be positive");
  if (max_iterations < 1) throw ConfigError("VB iteration cap must be at least 1");
  if (threads < 1) throw ConfigError("thread count must be at least 1");
}

GigMoments local_variance_moments(double rate, double coef_sq, double shape) {
  const double a = 2.0 * rate;
  const double b = std::max(coef_sq, kSecondMomentFloor);
  const double p = shape - 0.5;
  return {gig_moment(a, b, p, 1.0), gig_moment(a, b, p, -1.0)};
}

VariationalMoments init_moments(TrainingData const& data, Hyperparams const& hyper,
                                std::uint64_t seed) {
  hyper.validate();
  const auto d = static_cast<Eigen::Index>(data.dims);
  const auto N = static_cast<Eigen::Index>(data.samples);
  const Eigen::Index K = hyper.factors;
  VariationalMoments m;

  InitialFactors factors = initial_factors(data, hyper, seed);
  m.A = std::move(factors.A);
  m.A_sq = m.A.cwiseProduct(m.A).array() + 0.01;
  m.xi = Eigen::MatrixXd::Ones(d, K);
  m.xi_inv = Eigen::MatrixXd::Ones(d, K);
  m.eta = Eigen::MatrixXd::Ones(d, K);
  m.phi = Eigen::VectorXd::Ones(K);

  m.Z = std::move(factors.Z);
  if (hyper.init == InitScheme::random) m.Z *= 0.1;
  m.Z_sq = m.Z.cwiseProduct(m.Z).array() + 0.01;

  if (data.rank_mode()) {
    m.inv_lower = Eigen::MatrixXd::Zero(d, N);
    m.inv_upper = Eigen::MatrixXd::Zero(d, N);
    for (Eigen::Index i = 0; i < d; ++i) {
      auto const& f = data.ranks.feature(static_cast<std::size_t>(i));
      for (Eigen::Index n = 0; n < N; ++n) {
        if (f.has_lower(static_cast<std::size_t>(n))) m.inv_lower(i, n) = 1.0;
        if (f.has_upper(static_cast<std::size_t>(n))) m.inv_upper(i, n) = 1.0;
      }
    }
  }

  for (auto const& labels : data.labels) {
    VbClassifierMoments c;
    c.beta = Eigen::VectorXd::Zero(K);
    c.beta_sq = Eigen::VectorXd::Ones(K);
    c.b = Eigen::VectorXd::Ones(K);
    c.b_inv = Eigen::VectorXd::Ones(K);
    c.e = Eigen::VectorXd::Ones(K);
    c.inv_lambda_c = Eigen::VectorXd::Zero(N);
    for (Eigen::Index n = 0; n < N; ++n)
      if (labels[static_cast<std::size_t>(n)] != 0) c.inv_lambda_c(n) = 1.0;
    m.classifiers.push_back(std::move(c));
  }
  return m;
}

void vb_update_lambdas(VariationalMoments& m, TrainingData const& data, Hyperparams const& hyper) {
  if (data.rank_mode()) {
    const std::size_t N = data.samples;
    std::vector<double> lo(N), up(N);
    for (std::size_t i = 0; i < data.dims; ++i) {
      auto const& f = data.ranks.feature(i);
      if (f.is_constant()) continue;
      const auto row = static_cast<Eigen::Index>(i);
      const Eigen::VectorXd w = (m.A.row(row) * m.Z).transpose();
      f.neighbor_extrema({w.data(), N}, lo, up);
      for (std::size_t n = 0; n < N; ++n) {
        const auto col = static_cast<Eigen::Index>(n);
        if (f.has_lower(n)) m.inv_lower(row, col) = inverse_moment(lo[n] + hyper.epsilon - w(col));
        if (f.has_upper(n)) m.inv_upper(row, col) = inverse_moment(w(col) + hyper.epsilon - up[n]);
      }
    }
  }
  for (std::size_t t = 0; t < data.tasks(); ++t) {
    auto& c = m.classifiers[t];
    for (std::size_t n = 0; n < data.samples; ++n) {
      const int y = data.labels[t][n];
      const auto col = static_cast<Eigen::Index>(n);
      c.inv_lambda_c(col) = y == 0 ? 0.0 : inverse_moment(1.0 - y * c.beta.dot(m.Z.col(col)));
    }
  }
}

void vb_update_loadings(VariationalMoments& m, TrainingData const& data, Hyperparams const& hyper,
                        int threads) {
  const std::size_t N = data.samples;
  const double eps = hyper.epsilon;
  const Eigen::Index K = m.A.cols();
  parallel_for(data.dims, threads, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    Eigen::VectorXd w = (m.A.row(row) * m.Z).transpose();
    RankedFeature const* f = data.rank_mode() ? &data.ranks.feature(i) : nullptr;
    const bool active = f != nullptr && !f->is_constant();
    std::vector<double> lo(N), up(N);
    if (active) f->neighbor_extrema({w.data(), N}, lo, up);

    for (Eigen::Index k = 0; k < K; ++k) {
      const double a = m.A(row, k);
      double prec = m.xi_inv(row, k);
      double lin = 0.0;
      if (active) {
        for (std::size_t n = 0; n < N; ++n) {
          const auto col = static_cast<Eigen::Index>(n);
          const double il = m.inv_lower(row, col);
          const double iu = m.inv_upper(row, col);
          const double lam = il + iu;
          const double z = m.Z(k, col);
          prec += m.Z_sq(k, col) * lam;
          const double delta = il * (lo[n] + eps - w(col)) - iu * (w(col) + eps - up[n]) +
                               a * z * lam + (f->has_lower(n) ? 1.0 : 0.0) -
                               (f->has_upper(n) ? 1.0 : 0.0);
          lin += z * delta;
        }
      } else if (!data.rank_mode()) {
        for (std::size_t n = 0; n < N; ++n) {
          const auto col = static_cast<Eigen::Index>(n);
          const double z = m.Z(k, col);
          prec += m.Z_sq(k, col);
          lin += z * (data.standardized(row, col) - w(col) + a * z);
        }
      }
      const double var = 1.0 / prec;
      const double a_new = var * lin;
      m.A(row, k) = a_new;
      m.A_sq(row, k) = a_new * a_new + var;
      w += m.Z.row(k).transpose() * (a_new - a);
      if (active) f->neighbor_extrema({w.data(), N}, lo, up);
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      const auto g = local_variance_moments(m.eta(row, k), m.A_sq(row, k), hyper.r_a);
      m.xi(row, k) = g.mean;
      m.xi_inv(row, k) = g.inv_mean;
      m.eta(row, k) = (hyper.r_a + hyper.s_a) / (g.mean + m.phi(k));
    }
  });
  const double d = static_cast<double>(data.dims);
  for (Eigen::Index k = 0; k < K; ++k)
    m.phi(k) = (0.5 + d * hyper.s_a) / (m.phi_tilde + m.eta.col(k).sum());
  m.phi_tilde = (0.5 + 0.5 * static_cast<double>(K)) / (1.0 + m.phi.sum());
}

void vb_update_scores(VariationalMoments& m, TrainingData const& data, Hyperparams const& hyper,
                      int threads) {
  const std::size_t d = data.dims;
  const std::size_t N = data.samples;
  const double eps = hyper.epsilon;
  const Eigen::MatrixXd W = m.A * m.Z;
  Eigen::MatrixXd lo, up;
  if (data.rank_mode()) {
    lo.setZero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(N));
    up.setZero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(N));
    std::vector<double> w(N), rl(N), ru(N);
    for (std::size_t i = 0; i < d; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      for (std::size_t n = 0; n < N; ++n) w[n] = W(row, static_cast<Eigen::Index>(n));
      data.ranks.feature(i).neighbor_extrema(w, rl, ru);
      for (std::size_t n = 0; n < N; ++n) {
        lo(row, static_cast<Eigen::Index>(n)) = rl[n];
        up(row, static_cast<Eigen::Index>(n)) = ru[n];
      }
    }
  }
  const std::size_t tasks = data.tasks();

  parallel_for(N, threads, [&](std::size_t n) {
    const auto col = static_cast<Eigen::Index>(n);
    Eigen::VectorXd w = W.col(col);
    std::vector<double> margin(tasks, 0.0);
    for (std::size_t t = 0; t < tasks; ++t) margin[t] = m.classifiers[t].beta.dot(m.Z.col(col));

    for (Eigen::Index k = 0; k < m.Z.rows(); ++k) {
      const double z = m.Z(k, col);
      double prec = 1.0;
      double lin = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const double a = m.A(row, k);
        if (data.rank_mode()) {
          auto const& f = data.ranks.feature(i);
          const bool hl = f.has_lower(n), hu = f.has_upper(n);
          if (!hl && !hu) continue;
          const double il = m.inv_lower(row, col);
          const double iu = m.inv_upper(row, col);
          const double lam = il + iu;
          prec += m.A_sq(row, k) * lam;
          const double delta = il * (lo(row, col) + eps - w(row)) -
                               iu * (w(row) + eps - up(row, col)) + a * z * lam +
                               (hl ? 1.0 : 0.0) - (hu ? 1.0 : 0.0);
          lin += a * delta;
        } else {
          prec += m.A_sq(row, k);
          lin += a * (data.standardized(row, col) - w(row) + a * z);
        }
      }
      for (std::size_t t = 0; t < tasks; ++t) {
        const int y = data.labels[t][n];
        if (y == 0) continue;
        auto const& c = m.classifiers[t];
        const double ic = c.inv_lambda_c(col);
        prec += c.beta_sq(k) * ic;
        lin += y * c.beta(k) * (ic * (1.0 - y * (margin[t] - c.beta(k) * z)) + 1.0);
      }
      const double var = 1.0 / prec;
      const double z_new = var * lin;
      m.Z(k, col) = z_new;
      m.Z_sq(k, col) = z_new * z_new + var;
      w += m.A.col(k) * (z_new - z);
      for (std::size_t t = 0; t < tasks; ++t) margin[t] += m.classifiers[t].beta(k) * (z_new - z);
    }
  });
}

void vb_update_classifier(VariationalMoments& m, TrainingData const& data,
                          Hyperparams const& hyper, std::size_t task) {
  auto& c = m.classifiers[task];
  auto const& labels = data.labels[task];
  const Eigen::Index K = m.Z.rows();
  std::vector<std::size_t> members;
  for (std::size_t n = 0; n < data.samples; ++n)
    if (labels[n] != 0) members.push_back(n);
  std::vector<double> margin(members.size());
  for (std::size_t j = 0; j < members.size(); ++j)
    margin[j] = c.beta.dot(m.Z.col(static_cast<Eigen::Index>(members[j])));

  for (Eigen::Index k = 0; k < K; ++k) {
    const double beta = c.beta(k);
    double prec = c.b_inv(k);
    double lin = 0.0;
    for (std::size_t j = 0; j < members.size(); ++j) {
      const auto col = static_cast<Eigen::Index>(members[j]);
      const int y = labels[members[j]];
      const double z = m.Z(k, col);
      const double ic = c.inv_lambda_c(col);
      prec += m.Z_sq(k, col) * ic;
      lin += y * z * (ic * (1.0 - y * (margin[j] - beta * z)) + 1.0);
    }
    const double var = 1.0 / prec;
    const double beta_new = var * lin;
    c.beta(k) = beta_new;
    c.beta_sq(k) = beta_new * beta_new + var;
    for (std::size_t j = 0; j < members.size(); ++j)
      margin[j] += (beta_new - beta) * m.Z(k, static_cast<Eigen::Index>(members[j]));
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto g = local_variance_moments(c.e(k), c.beta_sq(k), hyper.r_beta);
    c.b(k) = g.mean;
    c.b_inv(k) = g.inv_mean;
    c.e(k) = (hyper.r_beta + hyper.s_beta) / (g.mean + c.phi);
  }
  c.phi = (0.5 + static_cast<double>(K) * hyper.s_beta) / (c.phi_tilde + c.e.sum());
  c.phi_tilde = 1.0 / (1.0 + c.phi);
}

VbResult run_vb(TrainingData const& data, Hyperparams const& hyper, VbConfig const& config,
                std::uint64_t seed) {
  config.validate();
  if (hyper.classifier != ClassifierKind::linear)
    throw ConfigError("variational inference supports the linear classifier only");
  VbResult out;
  auto& m = out.moments;
  m = init_moments(data, hyper, seed);

  for (int it = 1; it <= config.max_iterations; ++it) {
    const Eigen::MatrixXd A_prev = m.A;
    std::vector<Eigen::VectorXd> beta_prev;
    for (auto const& c : m.classifiers) beta_prev.push_back(c.beta);

    vb_update_lambdas(m, data, hyper);
    vb_update_loadings(m, data, hyper, config.threads);
    vb_update_scores(m, data, hyper, config.threads);
    for (std::size_t t = 0; t < data.tasks(); ++t) vb_update_classifier(m, data, hyper, t);

    check_finite(m.A, "A", it);
    check_finite(m.Z, "Z", it);
    double change = max_relative_change(A_prev, m.A);
    for (std::size_t t = 0; t < m.classifiers.size(); ++t) {
      check_finite(m.classifiers[t].beta, "beta", it);
      change = std::max(change, max_relative_change(beta_prev[t], m.classifiers[t].beta));
    }
    out.report.trace.push_back(change);
    out.report.iterations = it;
    out.report.final_change = change;
    if (change < config.tolerance) {
      out.report.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace mmrank
