// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "mmrank/rank_index.hpp"

namespace mmrank {

/// Per-group max/min of one row of W, kept current as single entries change.
/// Used when scores are updated column by column and later columns must see
/// the bounds implied by columns already refreshed.
class GroupExtrema {
 public:
  GroupExtrema(RankedFeature const& feature, Eigen::MatrixXd const& W, Eigen::Index row)
      : feature_(&feature), W_(&W), row_(row),
        gmax_(feature.num_groups()), gmin_(feature.num_groups()) {
    for (std::size_t g = 0; g < feature.num_groups(); ++g) rescan(g);
  }

  //! Max of w over the group below n; only meaningful when has_lower(n).
  double lower(std::size_t n) const { return gmax_[feature_->group_of(n) - 1]; }
  //! Min of w over the group above n; only meaningful when has_upper(n).
  double upper(std::size_t n) const { return gmin_[feature_->group_of(n) + 1]; }

  //! W(row, n) was overwritten; \p old_value is what it held before.
  void changed(std::size_t n, double old_value) {
    const std::size_t g = feature_->group_of(n);
    const double v = (*W_)(row_, static_cast<Eigen::Index>(n));
    bool stale = false;
    if (v >= gmax_[g]) gmax_[g] = v;
    else if (old_value == gmax_[g]) stale = true;
    if (v <= gmin_[g]) gmin_[g] = v;
    else if (old_value == gmin_[g]) stale = true;
    if (stale) rescan(g);
  }

 private:
  void rescan(std::size_t g) {
    auto members = feature_->group(g);
    double hi = (*W_)(row_, static_cast<Eigen::Index>(members[0]));
    double lo = hi;
    for (std::size_t s : members) {
      const double v = (*W_)(row_, static_cast<Eigen::Index>(s));
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
    gmax_[g] = hi;
    gmin_[g] = lo;
  }

  RankedFeature const* feature_;
  Eigen::MatrixXd const* W_;
  Eigen::Index row_;
  std::vector<double> gmax_;
  std::vector<double> gmin_;
};

}  // namespace mmrank
