// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "mmrank/model.hpp"

namespace mmrank {

struct VbConfig {
  double tolerance = 1e-5;
  int max_iterations = 500;
  int threads = 1;
  void validate() const;
};

struct VbClassifierMoments {
  Eigen::VectorXd beta;
  Eigen::VectorXd beta_sq;
  Eigen::VectorXd b;
  Eigen::VectorXd b_inv;
  Eigen::VectorXd e;
  double phi = 1.0;
  double phi_tilde = 1.0;
  Eigen::VectorXd inv_lambda_c;  // 0 for missing labels
};

/// Mean-field moments. Second moments are raw (E[x^2]), not variances.
struct VariationalMoments {
  Eigen::MatrixXd A, A_sq;
  Eigen::MatrixXd xi, xi_inv, eta;
  Eigen::VectorXd phi;
  double phi_tilde = 1.0;
  Eigen::MatrixXd Z, Z_sq;
  std::vector<VbClassifierMoments> classifiers;
  Eigen::MatrixXd inv_lower, inv_upper;  // 0 where the neighbor side is absent
};

/// E[x] and E[1/x] of the local-variance conditional GIG(2 rate, coef_sq,
/// shape - 1/2).
struct GigMoments {
  double mean;
  double inv_mean;
};
GigMoments local_variance_moments(double rate, double coef_sq, double shape);

VariationalMoments init_moments(TrainingData const& data, Hyperparams const& hyper,
                                std::uint64_t seed);

void vb_update_lambdas(VariationalMoments& m, TrainingData const& data, Hyperparams const& hyper);
void vb_update_loadings(VariationalMoments& m, TrainingData const& data, Hyperparams const& hyper,
                        int threads = 1);
void vb_update_scores(VariationalMoments& m, TrainingData const& data, Hyperparams const& hyper,
                      int threads = 1);
void vb_update_classifier(VariationalMoments& m, TrainingData const& data,
                          Hyperparams const& hyper, std::size_t task);

struct VbReport {
  int iterations = 0;
  bool converged = false;
  double final_change = 0.0;
  std::vector<double> trace;  // relative change per iteration
};

struct VbResult {
  VariationalMoments moments;
  VbReport report;
};

VbResult run_vb(TrainingData const& data, Hyperparams const& hyper, VbConfig const& config,
                std::uint64_t seed);

}  // namespace mmrank
