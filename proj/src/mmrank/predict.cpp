// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mmrank/predict.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "mmrank/errors.hpp"
#include "mmrank/parallel.hpp"
#include "mmrank/special_math.hpp"

namespace mmrank {

TrainedModel model_from_gibbs(PosteriorSummary const& summary, TrainingData const& data,
                              Hyperparams const& hyper) {
  TrainedModel m;
  m.hyper = hyper;
  m.engine = "gibbs";
  m.A = summary.mean_A;
  m.Z = summary.mean_Z;
  m.beta = summary.mean_beta;
  if (hyper.classifier == ClassifierKind::dpm) {
    m.mu = summary.mean_mu;
    m.psi = summary.mean_psi;
    m.weights = summary.mean_weights;
  }
  m.ranks = data.ranks;
  m.standardization = data.standardization;
  return m;
}

TrainedModel model_from_vb(VbResult const& result, TrainingData const& data,
                           Hyperparams const& hyper) {
  TrainedModel m;
  m.hyper = hyper;
  m.engine = "vb";
  m.A = result.moments.A;
  m.Z = result.moments.Z;
  for (auto const& c : result.moments.classifiers) m.beta.emplace_back(c.beta);
  m.ranks = data.ranks;
  m.standardization = data.standardization;
  return m;
}

Predictor::Predictor(TrainedModel const& model) : model_(model) {
  if (model.hyper.likelihood != Likelihood::max_margin_rank) return;
  if (model.ranks.dims() != model.dims())
    throw DataError("model rank index does not match its loadings");
  const Eigen::MatrixXd W = model.A * model.Z;
  const auto N = static_cast<std::size_t>(W.cols());
  gmax_.resize(model.dims());
  gmin_.resize(model.dims());
  std::vector<double> w(N);
  for (std::size_t i = 0; i < model.dims(); ++i) {
    auto const& f = model.ranks.feature(i);
    for (std::size_t n = 0; n < N; ++n) w[n] = W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n));
    gmax_[i].resize(f.num_groups());
    gmin_[i].resize(f.num_groups());
    f.group_extrema(w, gmax_[i], gmin_[i]);
  }
}

void Predictor::check_dims(Eigen::Index rows) const {
  if (static_cast<std::size_t>(rows) != model_.dims())
    throw DataError("test data has " + std::to_string(rows) + " features, model expects " +
                    std::to_string(model_.dims()));
}

Eigen::VectorXd Predictor::responsibilities(Eigen::VectorXd const& z) const {
  const Eigen::Index T = model_.psi.size();
  const double half_k = 0.5 * static_cast<double>(z.size());
  Eigen::VectorXd r(T);
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < T; ++t) {
    const double q = model_.weights(t);
    if (!(q > 0.0)) {
      r(t) = -std::numeric_limits<double>::infinity();
      continue;
    }
    const double dist = (z - model_.mu.row(t).transpose()).squaredNorm();
    r(t) = std::log(q) + half_k * std::log(model_.psi(t)) - 0.5 * model_.psi(t) * dist;
    top = std::max(top, r(t));
  }
  r = (r.array() - top).exp();
  return r / r.sum();
}

Eigen::VectorXd Predictor::infer_scores(Eigen::VectorXd const& x, int iterations) const {
  check_dims(x.size());
  if (!x.allFinite()) throw DataError("non-finite value in test sample");
  auto const& A = model_.A;
  const Eigen::Index K = A.cols();
  const Eigen::Index d = A.rows();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(K);

  auto prior = [&](double& prec, Eigen::VectorXd& mean) {
    if (!model_.dpm()) {
      prec = 1.0;
      mean.setZero(K);
      return;
    }
    const Eigen::VectorXd r = responsibilities(z);
    prec = r.dot(model_.psi);
    mean = (model_.mu.transpose() * r.cwiseProduct(model_.psi)) / prec;
  };

  double prior_prec = 1.0;
  Eigen::VectorXd prior_mean(K);

  if (model_.hyper.likelihood == Likelihood::gaussian) {
    const Eigen::VectorXd xs = (x - model_.standardization.mean).cwiseQuotient(model_.standardization.sd);
    const Eigen::MatrixXd gram = A.transpose() * A;
    const Eigen::VectorXd proj = A.transpose() * xs;
    const int rounds = model_.dpm() ? std::max(iterations, 1) : 1;
    for (int it = 0; it < rounds; ++it) {
      prior(prior_prec, prior_mean);
      Eigen::MatrixXd P = gram;
      P.diagonal().array() += prior_prec;
      z = P.ldlt().solve(proj + prior_prec * prior_mean);
    }
    return z;
  }

  const double eps = model_.hyper.epsilon;
  std::vector<double> wl(static_cast<std::size_t>(d), 0.0), wu(static_cast<std::size_t>(d), 0.0);
  std::vector<char> hl(static_cast<std::size_t>(d), 0), hu(static_cast<std::size_t>(d), 0);
  for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) {
    const auto [lower, upper] = model_.ranks.feature(i).bounds_for(x(static_cast<Eigen::Index>(i)));
    if (lower) {
      hl[i] = 1;
      wl[i] = gmax_[i][*lower];
    }
    if (upper) {
      hu[i] = 1;
      wu[i] = gmin_[i][*upper];
    }
  }

  // Joint conditional mean of z given the inverse scales. Coordinate sweeps
  // stall once a few residuals reach the clamp and pin every single axis.
  Eigen::VectorXd il(d), iu(d), target(d);
  for (int it = 0; it < iterations; ++it) {
    prior(prior_prec, prior_mean);
    const Eigen::VectorXd w = A * z;
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto s = static_cast<std::size_t>(i);
      il(i) = hl[s] ? 1.0 / clamped_magnitude(wl[s] + eps - w(i)) : 0.0;
      iu(i) = hu[s] ? 1.0 / clamped_magnitude(w(i) + eps - wu[s]) : 0.0;
      target(i) = (hl[s] ? il(i) * (wl[s] + eps) + 1.0 : 0.0) + (hu[s] ? iu(i) * (wu[s] - eps) - 1.0 : 0.0);
    }
    Eigen::MatrixXd P = A.transpose() * (il + iu).asDiagonal() * A;
    P.diagonal().array() += prior_prec;
    z = P.ldlt().solve(A.transpose() * target + prior_prec * prior_mean);
  }
  return z;
}

Prediction Predictor::predict(Eigen::VectorXd const& x, PredictOptions const& options) const {
  Prediction p;
  p.z_star = infer_scores(x, options.iterations);
  if (model_.dpm()) {
    p.responsibilities = responsibilities(p.z_star);
    if (options.hard_assignment) {
      Eigen::Index best = 0;
      p.responsibilities.maxCoeff(&best);
      p.responsibilities.setZero();
      p.responsibilities(best) = 1.0;
    }
  }
  for (auto const& beta : model_.beta) {
    double v = 0.0;
    if (model_.dpm()) {
      for (Eigen::Index t = 0; t < beta.cols(); ++t)
        if (p.responsibilities(t) > 0.0) v += p.responsibilities(t) * beta.col(t).dot(p.z_star);
    } else {
      v = beta.col(0).dot(p.z_star);
    }
    p.decision.push_back(v);
    p.label.push_back(decision_label(v));
  }
  return p;
}

std::vector<Prediction> Predictor::predict_all(Eigen::MatrixXd const& X,
                                               PredictOptions const& options) const {
  if (X.cols() > 0) check_dims(X.rows());
  std::vector<Prediction> out(static_cast<std::size_t>(X.cols()));
  parallel_for(out.size(), options.threads, [&](std::size_t n) {
    out[n] = predict(X.col(static_cast<Eigen::Index>(n)), options);
  });
  return out;
}

Eigen::VectorXd infer_test_scores(Eigen::VectorXd const& x, TrainedModel const& model,
                                  int iterations) {
  return Predictor(model).infer_scores(x, iterations);
}

Prediction predict(Eigen::VectorXd const& x, TrainedModel const& model,
                   PredictOptions const& options) {
  return Predictor(model).predict(x, options);
}

}  // namespace mmrank
