// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace mmrank {

/*!
 * Tie-group structure of one feature row.
 *
 * Samples with equal values share a tie group and impose no ordering on each
 * other. Group g holds the samples whose value equals values()[g]; values are
 * strictly increasing, so the lower neighbor group of g is g - 1 and the
 * upper is g + 1.
 */
class RankedFeature {
 public:
  RankedFeature() = default;
  //! Build from one row; values must be finite.
  explicit RankedFeature(std::span<const double> row);
  //! Rebuild from persisted parts (sorted distinct values, group offsets into
  //! the member list, members ordered by group).
  RankedFeature(std::vector<double> values, std::vector<std::size_t> offsets,
                std::vector<std::size_t> members);

  std::size_t num_groups() const { return values_.size(); }
  std::size_t num_samples() const { return group_of_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<const std::size_t> offsets() const { return offsets_; }
  std::span<const std::size_t> members() const { return members_; }
  std::span<const std::size_t> group(std::size_t g) const;
  std::size_t group_of(std::size_t n) const { return group_of_[n]; }
  bool is_constant() const { return values_.size() < 2; }

  bool has_lower(std::size_t n) const { return group_of_[n] > 0; }
  bool has_upper(std::size_t n) const { return group_of_[n] + 1 < values_.size(); }

  //! Groups a test value falls between. A value equal to a training value
  //! takes the neighbors of that value's group.
  std::pair<std::optional<std::size_t>, std::optional<std::size_t>> bounds_for(double x) const;

  /// Lower/upper extremum of \p w over each sample's neighbor groups: entry n
  /// of \p lower is the max of w over the group below n, entry n of
  /// \p upper the min over the group above. Absent sides are written as 0.
  void neighbor_extrema(std::span<const double> w, std::span<double> lower,
                        std::span<double> upper) const;
  //! Per-group max and min of \p w.
  void group_extrema(std::span<const double> w, std::span<double> gmax,
                     std::span<double> gmin) const;

 private:
  std::vector<double> values_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> members_;
  std::vector<std::size_t> group_of_;
};

struct NeighborGroups {
  std::span<const std::size_t> lower;
  std::span<const std::size_t> upper;
};

class RankIndex {
 public:
  RankIndex() = default;
  explicit RankIndex(std::vector<RankedFeature> features);

  std::size_t dims() const { return features_.size(); }
  std::size_t samples() const { return features_.empty() ? 0 : features_.front().num_samples(); }
  RankedFeature const& feature(std::size_t i) const { return features_[i]; }
  std::vector<RankedFeature> const& features() const { return features_; }
  //! Rows with a single distinct value; they contribute no rank constraints.
  std::vector<std::size_t> constant_features() const;

  //! Structural equality: identical tie groups in identical order. Values
  //! are not compared, so a row and its monotone transform compare equal.
  friend bool operator==(RankIndex const& a, RankIndex const& b);

 private:
  std::vector<RankedFeature> features_;
};

bool operator==(RankedFeature const& a, RankedFeature const& b);

/// Build the rank index of a d x N matrix. Throws DataError on non-finite
/// entries or N < 2.
RankIndex build_rank_index(Eigen::MatrixXd const& x);

NeighborGroups lower_upper_groups(RankIndex const& idx, std::size_t i, std::size_t n);
NeighborGroups test_bounds(RankIndex const& idx, std::size_t i, double x_star);

}  // namespace mmrank
