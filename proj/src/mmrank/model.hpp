// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmrank/rank_index.hpp"

namespace mmrank {

enum class Likelihood { max_margin_rank, gaussian };
enum class ClassifierKind { linear, dpm };
//! Starting point of both engines: small random loadings with standard
//! normal scores, or a truncated SVD of rank normal scores (standardized
//! values in Gaussian mode).
enum class InitScheme { random, spectral };

std::string to_string(Likelihood);
std::string to_string(ClassifierKind);
std::string to_string(InitScheme);
Likelihood parse_likelihood(std::string const&);
ClassifierKind parse_classifier(std::string const&);
InitScheme parse_init(std::string const&);

/// Model hyperparameters. Defaults: horseshoe shrinkage (r = s = 1/2) for
/// loadings and classifier, margin 0.05, K = 20 factors, T = 5 components,
/// psi ~ Ga(1.1, 0.001), alpha ~ Ga(1, 1).
struct Hyperparams {
  int factors = 20;
  int truncation = 5;
  double epsilon = 0.05;
  double r_a = 0.5;
  double s_a = 0.5;
  double r_beta = 0.5;
  double s_beta = 0.5;
  double psi_shape = 1.1;
  double psi_rate = 0.001;
  double alpha_shape = 1.0;
  double alpha_rate = 1.0;
  Likelihood likelihood = Likelihood::max_margin_rank;
  ClassifierKind classifier = ClassifierKind::linear;
  InitScheme init = InitScheme::spectral;

  //! Mixture components carried by each classifier (1 in linear mode).
  int components() const { return classifier == ClassifierKind::dpm ? truncation : 1; }
  void validate() const;
};

/// Label entries: -1, +1, or 0 for missing.
using LabelVector = std::vector<std::int8_t>;

/// d x N observations plus M label tasks over the same N samples.
struct Dataset {
  Eigen::MatrixXd values;
  std::vector<LabelVector> labels;
  std::vector<std::string> sample_ids;
  std::vector<std::string> feature_names;

  std::size_t dims() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t samples() const { return static_cast<std::size_t>(values.cols()); }
  std::size_t tasks() const { return labels.size(); }

  void validate() const;
  Dataset subset(std::vector<std::size_t> const& columns) const;
};

/// Per-feature centering and scaling for the Gaussian likelihood.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;

  bool empty() const { return mean.size() == 0; }
  static Standardization fit(Eigen::MatrixXd const& x);
  Eigen::MatrixXd apply(Eigen::MatrixXd const& x) const;
};

/// What the inference engines see of a dataset: ranks in rank mode, the
/// standardized matrix in Gaussian mode, and the labels.
struct TrainingData {
  Likelihood likelihood = Likelihood::max_margin_rank;
  RankIndex ranks;
  Eigen::MatrixXd standardized;
  Standardization standardization;
  std::vector<LabelVector> labels;
  std::size_t dims = 0;
  std::size_t samples = 0;

  static TrainingData from(Dataset const& data, Likelihood likelihood);
  std::size_t tasks() const { return labels.size(); }
  bool rank_mode() const { return likelihood == Likelihood::max_margin_rank; }
};

struct LoadingsState {
  Eigen::MatrixXd A;    // d x K
  Eigen::MatrixXd xi;   // local variances
  Eigen::MatrixXd eta;  // local rates
  Eigen::VectorXd phi;  // per-column global shrinkage
  double phi_tilde = 1.0;
};

struct ScoresState {
  Eigen::MatrixXd Z;  // K x N
};

/// Coefficients of one (task, component) classifier with its TPBN chain.
struct ClassifierCoefficients {
  Eigen::VectorXd beta;
  Eigen::VectorXd b;
  Eigen::VectorXd e;
  double phi = 1.0;
  double phi_tilde = 1.0;
};

/// One label task. Linear mode carries a single component. The hinge
/// augmentation is stored as inverse scales 1/lambda_c; missing labels hold 0.
struct ClassifierState {
  std::vector<ClassifierCoefficients> components;
  Eigen::VectorXd inv_lambda_c;
};

/// Inverse augmentation scales 1/lambda^l, 1/lambda^u (d x N). Entries
/// without a lower (upper) neighbor group hold 0 and drop out of every sum.
struct RankAugmentation {
  Eigen::MatrixXd inv_lower;
  Eigen::MatrixXd inv_upper;
};

struct DpmState {
  std::vector<int> assign;  // component of each sample, 0-based
  Eigen::MatrixXd mu;       // T x K
  Eigen::VectorXd psi;
  Eigen::VectorXd nu;  // nu(T-1) == 1
  double alpha = 1.0;
};

/// q_t = nu_t prod_{l<t} (1 - nu_l).
Eigen::VectorXd stick_weights(Eigen::VectorXd const& nu);

struct ModelState {
  LoadingsState loadings;
  ScoresState scores;
  std::vector<ClassifierState> classifiers;
  RankAugmentation rank_aug;
  std::optional<DpmState> dpm;

  int component_of(std::size_t n) const { return dpm ? dpm->assign[n] : 0; }
  //! Prior precision and mean of z_n (1 and 0 outside DPM mode).
  double prior_precision(std::size_t n) const { return dpm ? dpm->psi(component_of(n)) : 1.0; }
  double prior_mean(std::size_t n, Eigen::Index k) const {
    return dpm ? dpm->mu(component_of(n), k) : 0.0;
  }
};

struct InitialFactors {
  Eigen::MatrixXd A;  // d x K
  Eigen::MatrixXd Z;  // K x N
};

/// Starting loadings and scores under hyper.init. The spectral scheme is
/// deterministic; the random scheme reads the init streams of \p seed.
InitialFactors initial_factors(TrainingData const& data, Hyperparams const& hyper,
                               std::uint64_t seed);

/// Rank-based normal scores of every row, scaled so that adjacent tie groups
/// near the centre sit about 2 eps apart.
Eigen::MatrixXd rank_normal_scores(RankIndex const& ranks, double epsilon);

/// Standard normal quantile.
double normal_quantile(double p);

ModelState init_state(TrainingData const& data, Hyperparams const& hyper, std::uint64_t seed);

/// Throws NumericError naming the offending variable when a positivity or
/// finiteness invariant fails.
void check_state(ModelState const& state, std::string const& where);

/// Terms of the monitoring objective.
struct PseudoJoint {
  double rank_loss = 0.0;       // -sum of eps-sensitive rank losses
  double hinge_loss = 0.0;      // -sum of hinge losses
  double gaussian_loglik = 0.0;  // Gaussian mode data term
  double log_prior = 0.0;
  double total() const { return rank_loss + hinge_loss + gaussian_loglik + log_prior; }
};

PseudoJoint log_pseudo_joint(ModelState const& state, TrainingData const& data,
                             Hyperparams const& hyper);

}  // namespace mmrank
