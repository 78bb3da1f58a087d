// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mmrank/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "mmrank/errors.hpp"
#include "mmrank/random.hpp"

namespace mmrank {
namespace {

void require_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw DataError("decision and label vectors differ in length");
}

struct MeanSd {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
};

MeanSd mean_sd(std::vector<double> const& v) {
  std::vector<double> x;
  for (double e : v)
    if (std::isfinite(e)) x.push_back(e);
  MeanSd out;
  if (x.empty()) return out;
  out.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double e : x) ss += (e - out.mean) * (e - out.mean);
  out.sd = x.size() > 1 ? std::sqrt(ss / static_cast<double>(x.size() - 1)) : 0.0;
  return out;
}

}  // namespace

double auc(std::span<const double> decisions, std::span<const std::int8_t> labels) {
  require_same_length(decisions.size(), labels.size());
  std::vector<std::size_t> order;
  for (std::size_t n = 0; n < labels.size(); ++n)
    if (labels[n] != 0) order.push_back(n);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return decisions[a] < decisions[b]; });
  double pos = 0.0, neg = 0.0, rank_sum = 0.0;
  for (std::size_t j = 0; j < order.size();) {
    std::size_t end = j;
    while (end < order.size() && decisions[order[end]] == decisions[order[j]]) ++end;
    const double mid_rank = 0.5 * static_cast<double>(j + 1 + end);
    for (std::size_t q = j; q < end; ++q) {
      if (labels[order[q]] > 0) {
        pos += 1.0;
        rank_sum += mid_rank;
      } else {
        neg += 1.0;
      }
    }
    j = end;
  }
  if (pos == 0.0 || neg == 0.0) throw DataError("AUC is undefined when only one class is present");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double error_rate(std::span<const double> decisions, std::span<const std::int8_t> labels) {
  require_same_length(decisions.size(), labels.size());
  double wrong = 0.0, total = 0.0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] == 0) continue;
    total += 1.0;
    if (decision_label(decisions[n]) != labels[n]) wrong += 1.0;
  }
  if (total == 0.0) throw DataError("error rate is undefined without labeled samples");
  return wrong / total;
}

std::vector<int> stratified_folds(LabelVector const& labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("at least two folds are required");
  if (static_cast<std::size_t>(folds) > labels.size())
    throw ConfigError("more folds than samples");
  std::vector<int> out(labels.size(), 0);
  std::size_t dealt = 0;
  const std::int8_t strata[] = {-1, 1, 0};
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<std::size_t> members;
    for (std::size_t n = 0; n < labels.size(); ++n)
      if (labels[n] == strata[s]) members.push_back(n);
    RandomStream rng(seed, {0, StreamKind::folds, s});
    for (std::size_t i = members.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
      std::swap(members[i - 1], members[std::min(j, i - 1)]);
    }
    for (std::size_t n : members) out[n] = static_cast<int>(dealt++ % static_cast<std::size_t>(folds));
  }
  return out;
}

CvReport kfold_cv(Dataset const& data, TrainSettings const& settings, int folds,
                  std::uint64_t seed, PredictOptions const& predict_options) {
  data.validate();
  settings.validate();
  if (data.tasks() == 0) throw ConfigError("cross-validation needs at least one label task");
  const std::vector<int> fold_of = stratified_folds(data.labels[0], folds, seed);
  const std::string label = settings.label();
  CvReport report;

  for (int f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t n = 0; n < data.samples(); ++n)
      (fold_of[n] == f ? test_idx : train_idx).push_back(n);
    const Dataset train_set = data.subset(train_idx);
    const Dataset test_set = data.subset(test_idx);
    for (std::size_t m = 0; m < data.tasks(); ++m) {
      const auto& y = train_set.labels[m];
      const bool has_pos = std::find(y.begin(), y.end(), 1) != y.end();
      const bool has_neg = std::find(y.begin(), y.end(), -1) != y.end();
      if (!has_pos || !has_neg)
        throw ConfigError("fold " + std::to_string(f + 1) + ": training labels of task " +
                          std::to_string(m + 1) + " contain a single class");
    }

    const auto start = std::chrono::steady_clock::now();
    const TrainResult trained = train(train_set, settings);
    const Predictor predictor(trained.model);
    const auto preds = predictor.predict_all(test_set.values, predict_options);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    for (std::size_t m = 0; m < data.tasks(); ++m) {
      std::vector<double> decisions(preds.size());
      for (std::size_t j = 0; j < preds.size(); ++j) decisions[j] = preds[j].decision[m];
      FoldMetrics fm;
      fm.model = label;
      fm.fold = f + 1;
      fm.task = m + 1;
      fm.n_test = test_idx.size();
      auto const& ty = test_set.labels[m];
      try {
        fm.error = error_rate(decisions, ty);
      } catch (DataError const&) {
        fm.error = std::numeric_limits<double>::quiet_NaN();
      }
      try {
        fm.auc = auc(decisions, ty);
      } catch (DataError const&) {
        fm.auc = std::numeric_limits<double>::quiet_NaN();
      }
      fm.seconds = seconds;
      report.folds.push_back(fm);
    }
  }

  for (std::size_t m = 0; m < data.tasks(); ++m) {
    std::vector<double> err, area, secs;
    for (auto const& fm : report.folds)
      if (fm.task == m + 1) {
        err.push_back(fm.error);
        area.push_back(fm.auc);
        secs.push_back(fm.seconds);
      }
    const auto e = mean_sd(err), a = mean_sd(area), s = mean_sd(secs);
    report.summary.push_back({label, m + 1, e.mean, e.sd, a.mean, a.sd, s.mean});
  }
  return report;
}

}  // namespace mmrank
