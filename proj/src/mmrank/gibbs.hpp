// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mmrank/model.hpp"
#include "mmrank/random.hpp"

namespace mmrank {

struct GibbsConfig {
  int iterations = 1000;
  int burnin = 500;
  int thin = 2;
  //! Parallel sweeps: score columns read w-bounds from a snapshot taken at the
  //! start of the block, so columns can be updated concurrently.
  bool parallel = false;
  int threads = 1;
  //! Include the hinge pseudo-likelihood in the DPM assignment weights.
  bool assignment_label_factor = true;
  //! Hold DPM locations and precisions at their current values.
  bool freeze_dpm_location = false;
  bool keep_samples = false;

  void validate() const;
};

/// State of one sweep: which seed and sweep index the entity streams derive from.
struct SweepContext {
  TrainingData const& data;
  Hyperparams const& hyper;
  GibbsConfig const& config;
  std::uint64_t seed = 0;
  std::uint64_t sweep = 0;

  RandomStream stream(StreamKind kind, std::uint64_t index) const {
    return RandomStream(seed, {sweep, kind, index});
  }
};

struct WBounds {
  std::optional<double> lower;
  std::optional<double> upper;
};

/// Extremes of a_i^T z over the tie groups adjacent to sample n.
WBounds current_w_bounds(ModelState const& state, RankIndex const& idx, std::size_t i,
                         std::size_t n);

void update_rank_augmentation(ModelState& state, SweepContext const& ctx);
void update_classifier_augmentation(ModelState& state, SweepContext const& ctx, std::size_t task);
void update_loadings(ModelState& state, SweepContext const& ctx);
void update_shrinkage_loadings(ModelState& state, SweepContext const& ctx);
void update_scores(ModelState& state, SweepContext const& ctx);
void update_classifier(ModelState& state, SweepContext const& ctx, std::size_t task);
void update_dpm(ModelState& state, SweepContext const& ctx);

/// One full pass over every conditional in the fixed order: rank
/// augmentation, classifier augmentation, loadings, loading shrinkage,
/// scores, classifiers, DPM.
void gibbs_sweep(ModelState& state, SweepContext const& ctx);

/// Retained beta draws of one sweep: per task, K x C.
using BetaSample = std::vector<Eigen::MatrixXd>;

struct PosteriorSummary {
  Eigen::MatrixXd mean_A;
  Eigen::MatrixXd mean_Z;
  std::vector<Eigen::MatrixXd> mean_beta;  // per task, K x C
  std::vector<Eigen::MatrixXd> sd_beta;
  Eigen::MatrixXd mean_mu;                 // T x K, DPM only
  Eigen::VectorXd mean_psi;
  Eigen::VectorXd mean_weights;
  std::vector<BetaSample> beta_samples;    // when keep_samples
  std::vector<double> trace;               // log pseudo-joint per sweep
  std::size_t retained = 0;
  ModelState final_state;
};

PosteriorSummary run_gibbs(TrainingData const& data, Hyperparams const& hyper,
                           GibbsConfig const& config, std::uint64_t seed);

}  // namespace mmrank
