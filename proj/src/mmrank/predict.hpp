// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmrank/gibbs.hpp"
#include "mmrank/model.hpp"
#include "mmrank/vb.hpp"

namespace mmrank {

/// Everything needed to score test points: posterior-mean loadings and
/// scores, per-task coefficients, the training rank structure (rank mode) or
/// standardization statistics (Gaussian mode).
struct TrainedModel {
  Hyperparams hyper;
  std::string engine;
  Eigen::MatrixXd A;                 // d x K
  Eigen::MatrixXd Z;                 // K x N
  std::vector<Eigen::MatrixXd> beta;  // per task, K x C
  Eigen::MatrixXd mu;                // DPM: T x K
  Eigen::VectorXd psi;
  Eigen::VectorXd weights;
  RankIndex ranks;
  Standardization standardization;

  std::size_t dims() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t tasks() const { return beta.size(); }
  bool dpm() const { return hyper.classifier == ClassifierKind::dpm; }
};

TrainedModel model_from_gibbs(PosteriorSummary const& summary, TrainingData const& data,
                              Hyperparams const& hyper);
TrainedModel model_from_vb(VbResult const& result, TrainingData const& data,
                           Hyperparams const& hyper);

struct PredictOptions {
  int iterations = 50;
  //! DPM: score with the single most responsible component.
  bool hard_assignment = false;
  int threads = 1;
};

struct Prediction {
  Eigen::VectorXd z_star;
  std::vector<double> decision;
  std::vector<int> label;
  Eigen::VectorXd responsibilities;  // DPM only
};

/// Sign rule with ties resolved to +1.
inline int decision_label(double v) { return v >= 0.0 ? 1 : -1; }

/// Scores test columns against one trained model. Caches the per-group
/// extrema of the training w = A Z used as test-time rank bounds.
class Predictor {
 public:
  explicit Predictor(TrainedModel const& model);

  //! Deterministic fixed-point estimate of z* for one raw test column.
  Eigen::VectorXd infer_scores(Eigen::VectorXd const& x, int iterations) const;
  Prediction predict(Eigen::VectorXd const& x, PredictOptions const& options = {}) const;
  //! One prediction per column of the d x N* raw test matrix.
  std::vector<Prediction> predict_all(Eigen::MatrixXd const& X,
                                      PredictOptions const& options = {}) const;
  //! DPM responsibilities of one score vector.
  Eigen::VectorXd responsibilities(Eigen::VectorXd const& z) const;

 private:
  void check_dims(Eigen::Index rows) const;

  TrainedModel const& model_;
  std::vector<std::vector<double>> gmax_;
  std::vector<std::vector<double>> gmin_;
};

Eigen::VectorXd infer_test_scores(Eigen::VectorXd const& x, TrainedModel const& model,
                                  int iterations = 50);
Prediction predict(Eigen::VectorXd const& x, TrainedModel const& model,
                   PredictOptions const& options = {});

}  // namespace mmrank
