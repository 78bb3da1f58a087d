// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmrank/model.hpp"

namespace mmrank {

enum class Transform { identity, exp, cube };

std::string to_string(Transform);
Transform parse_transform(std::string const&);

struct SyntheticSpec {
  std::size_t dims = 50;
  std::size_t samples = 400;
  std::size_t factors = 3;
  double sparsity = 0.5;  // fraction of nonzero loadings
  double label_noise = 0.0;
  Transform transform = Transform::identity;
  //! Two clusters at +/- separation * e1 whose classifiers are +/- e2.
  bool dpm = false;
  double separation = 3.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticTruth {
  Eigen::MatrixXd A;     // d x K
  Eigen::MatrixXd Z;     // K x N
  Eigen::MatrixXd beta;  // K x C (C = 2 in the cluster layout)
  std::vector<int> cluster;
};

struct SyntheticData {
  Dataset data;
  SyntheticTruth truth;
};

/// W = A Z + N(0, 1) noise, X = transform(W), y = sign(beta^T z + noise).
SyntheticData generate_synthetic(SyntheticSpec const& spec);

}  // namespace mmrank
