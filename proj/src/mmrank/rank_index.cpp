// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mmrank/rank_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mmrank/errors.hpp"

namespace mmrank {

RankedFeature::RankedFeature(std::span<const double> row) {
  const std::size_t n = row.size();
  members_.resize(n);
  std::iota(members_.begin(), members_.end(), std::size_t{0});
  std::stable_sort(members_.begin(), members_.end(),
                   [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
  group_of_.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const double v = row[members_[pos]];
    if (values_.empty() || v != values_.back()) {
      values_.push_back(v);
      offsets_.push_back(pos);
    }
    group_of_[members_[pos]] = values_.size() - 1;
  }
  offsets_.push_back(n);
}

RankedFeature::RankedFeature(std::vector<double> values, std::vector<std::size_t> offsets,
                             std::vector<std::size_t> members)
    : values_(std::move(values)), offsets_(std::move(offsets)), members_(std::move(members)) {
  if (offsets_.size() != values_.size() + 1 || offsets_.front() != 0 ||
      offsets_.back() != members_.size())
    throw DataError("rank feature: inconsistent group offsets");
  for (std::size_t g = 1; g < values_.size(); ++g)
    if (!(values_[g - 1] < values_[g])) throw DataError("rank feature: values not increasing");
  group_of_.assign(members_.size(), std::numeric_limits<std::size_t>::max());
  for (std::size_t g = 0; g < values_.size(); ++g) {
    if (offsets_[g + 1] <= offsets_[g]) throw DataError("rank feature: empty tie group");
    for (std::size_t p = offsets_[g]; p < offsets_[g + 1]; ++p) {
      const std::size_t s = members_[p];
      if (s >= members_.size() || group_of_[s] != std::numeric_limits<std::size_t>::max())
        throw DataError("rank feature: members are not a permutation");
      group_of_[s] = g;
    }
  }
}

std::span<const std::size_t> RankedFeature::group(std::size_t g) const {
  return std::span<const std::size_t>(members_).subspan(offsets_[g], offsets_[g + 1] - offsets_[g]);
}

std::pair<std::optional<std::size_t>, std::optional<std::size_t>> RankedFeature::bounds_for(
    double x) const {
  const auto it = std::lower_bound(values_.begin(), values_.end(), x);
  const auto pos = static_cast<std::size_t>(it - values_.begin());
  const bool match = it != values_.end() && *it == x;
  std::optional<std::size_t> lower, upper;
  if (pos > 0) lower = pos - 1;
  const std::size_t up = match ? pos + 1 : pos;
  if (up < values_.size()) upper = up;
  return {lower, upper};
}

void RankedFeature::group_extrema(std::span<const double> w, std::span<double> gmax,
                                  std::span<double> gmin) const {
  for (std::size_t g = 0; g < values_.size(); ++g) {
    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t p = offsets_[g]; p < offsets_[g + 1]; ++p) {
      const double v = w[members_[p]];
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
    gmax[g] = hi;
    gmin[g] = lo;
  }
}

void RankedFeature::neighbor_extrema(std::span<const double> w, std::span<double> lower,
                                     std::span<double> upper) const {
  const std::size_t groups = values_.size();
  double prev_max = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t p = offsets_[g]; p < offsets_[g + 1]; ++p) hi = std::max(hi, w[members_[p]]);
    for (std::size_t p = offsets_[g]; p < offsets_[g + 1]; ++p)
      lower[members_[p]] = g > 0 ? prev_max : 0.0;
    prev_max = hi;
  }
  double next_min = 0.0;
  for (std::size_t g = groups; g-- > 0;) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t p = offsets_[g]; p < offsets_[g + 1]; ++p) lo = std::min(lo, w[members_[p]]);
    for (std::size_t p = offsets_[g]; p < offsets_[g + 1]; ++p)
      upper[members_[p]] = g + 1 < groups ? next_min : 0.0;
    next_min = lo;
  }
}

bool operator==(RankedFeature const& a, RankedFeature const& b) {
  return std::ranges::equal(a.offsets(), b.offsets()) &&
         std::ranges::equal(a.members(), b.members()) && a.num_groups() == b.num_groups();
}

RankIndex::RankIndex(std::vector<RankedFeature> features) : features_(std::move(features)) {
  for (auto const& f : features_)
    if (f.num_samples() != samples()) throw DataError("rank index: features disagree on N");
}

std::vector<std::size_t> RankIndex::constant_features() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].is_constant()) out.push_back(i);
  return out;
}

bool operator==(RankIndex const& a, RankIndex const& b) {
  return std::ranges::equal(a.features(), b.features());
}

RankIndex build_rank_index(Eigen::MatrixXd const& x) {
  if (x.cols() < 2) throw DataError("rank index: need at least two samples");
  std::vector<RankedFeature> features;
  features.reserve(static_cast<std::size_t>(x.rows()));
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index n = 0; n < x.cols(); ++n) {
      const double v = x(i, n);
      if (!std::isfinite(v))
        throw DataError("non-finite value at feature " + std::to_string(i + 1) + ", sample " +
                        std::to_string(n + 1));
      row[static_cast<std::size_t>(n)] = v;
    }
    features.emplace_back(row);
  }
  return RankIndex(std::move(features));
}

NeighborGroups lower_upper_groups(RankIndex const& idx, std::size_t i, std::size_t n) {
  auto const& f = idx.feature(i);
  NeighborGroups out;
  const std::size_t g = f.group_of(n);
  if (g > 0) out.lower = f.group(g - 1);
  if (g + 1 < f.num_groups()) out.upper = f.group(g + 1);
  return out;
}

NeighborGroups test_bounds(RankIndex const& idx, std::size_t i, double x_star) {
  auto const& f = idx.feature(i);
  const auto [lower, upper] = f.bounds_for(x_star);
  NeighborGroups out;
  if (lower) out.lower = f.group(*lower);
  if (upper) out.upper = f.group(*upper);
  return out;
}

}  // namespace mmrank
