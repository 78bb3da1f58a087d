// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmrank/model.hpp"
#include "mmrank/predict.hpp"
#include "mmrank/train.hpp"

namespace mmrank {

/// Mann-Whitney AUC: fraction of (positive, negative) pairs ordered
/// correctly, ties counting 1/2. Entries with label 0 are ignored. Throws
/// DataError when either class is absent.
double auc(std::span<const double> decisions, std::span<const std::int8_t> labels);

/// Fraction of labeled entries whose sign rule disagrees with the label.
double error_rate(std::span<const double> decisions, std::span<const std::int8_t> labels);

/// Fold id in [0, folds) per sample, stratified by label value and
/// reproducible for a fixed seed.
std::vector<int> stratified_folds(LabelVector const& labels, int folds, std::uint64_t seed);

struct FoldMetrics {
  std::string model;
  int fold = 0;
  std::size_t task = 0;
  std::size_t n_test = 0;
  double error = 0.0;
  double auc = 0.0;  // NaN when the held-out fold holds one class
  double seconds = 0.0;
};

struct TaskSummary {
  std::string model;
  std::size_t task = 0;
  double error_mean = 0.0;
  double error_sd = 0.0;
  double auc_mean = 0.0;
  double auc_sd = 0.0;
  double seconds_mean = 0.0;
};

struct CvReport {
  std::vector<FoldMetrics> folds;
  std::vector<TaskSummary> summary;
};

CvReport kfold_cv(Dataset const& data, TrainSettings const& settings, int folds,
                  std::uint64_t seed, PredictOptions const& predict_options = {});

}  // namespace mmrank
