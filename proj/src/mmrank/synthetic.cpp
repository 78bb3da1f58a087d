// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mmrank/synthetic.hpp"

#include <cmath>

#include "mmrank/errors.hpp"
#include "mmrank/predict.hpp"
#include "mmrank/random.hpp"

namespace mmrank {

std::string to_string(Transform t) {
  switch (t) {
    case Transform::exp: return "exp";
    case Transform::cube: return "cube";
    default: return "id";
  }
}

Transform parse_transform(std::string const& s) {
  if (s == "id" || s == "identity") return Transform::identity;
  if (s == "exp") return Transform::exp;
  if (s == "cube") return Transform::cube;
  throw ConfigError("unknown transform '" + s + "' (expected id, exp or cube)");
}

void SyntheticSpec::validate() const {
  if (dims < 1 || samples < 2) throw ConfigError("synthetic data needs d >= 1 and N >= 2");
  if (factors < 1 || factors > dims) throw ConfigError("synthetic factor count must lie in [1, d]");
  if (!(sparsity > 0.0 && sparsity <= 1.0)) throw ConfigError("sparsity must lie in (0, 1]");
  if (!(label_noise >= 0.0)) throw ConfigError("label noise must be non-negative");
  if (dpm && factors < 2) throw ConfigError("the cluster layout needs at least two factors");
  if (!(separation >= 0.0)) throw ConfigError("cluster separation must be non-negative");
}

SyntheticData generate_synthetic(SyntheticSpec const& spec) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.dims);
  const auto N = static_cast<Eigen::Index>(spec.samples);
  const auto K = static_cast<Eigen::Index>(spec.factors);
  auto stream = [&](std::uint64_t index) {
    return RandomStream(spec.seed, {0, StreamKind::synthetic, index});
  };

  SyntheticData out;
  auto& truth = out.truth;

  auto rng_a = stream(0);
  truth.A = Eigen::MatrixXd::Zero(d, K);
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index i = 0; i < d; ++i) {
      const bool on = rng_a.uniform() < spec.sparsity;
      const double v = rng_a.normal();
      if (on) truth.A(i, k) = v;
    }

  auto rng_z = stream(1);
  auto rng_c = stream(5);
  truth.Z.resize(K, N);
  if (spec.dpm) truth.cluster.resize(spec.samples);
  for (Eigen::Index n = 0; n < N; ++n) {
    for (Eigen::Index k = 0; k < K; ++k) truth.Z(k, n) = rng_z.normal();
    if (spec.dpm) {
      const int c = rng_c.uniform() < 0.5 ? 0 : 1;
      truth.cluster[static_cast<std::size_t>(n)] = c;
      truth.Z(0, n) += c == 0 ? spec.separation : -spec.separation;
    }
  }

  auto rng_b = stream(3);
  if (spec.dpm) {
    truth.beta = Eigen::MatrixXd::Zero(K, 2);
    truth.beta(1, 0) = 1.0;
    truth.beta(1, 1) = -1.0;
  } else {
    truth.beta.resize(K, 1);
    for (Eigen::Index k = 0; k < K; ++k) truth.beta(k, 0) = rng_b.normal();
  }

  auto rng_w = stream(2);
  Eigen::MatrixXd W = truth.A * truth.Z;
  for (Eigen::Index n = 0; n < N; ++n)
    for (Eigen::Index i = 0; i < d; ++i) W(i, n) += rng_w.normal();

  auto& data = out.data;
  data.values.resize(d, N);
  for (Eigen::Index n = 0; n < N; ++n)
    for (Eigen::Index i = 0; i < d; ++i) {
      const double w = W(i, n);
      switch (spec.transform) {
        case Transform::exp: data.values(i, n) = std::exp(w); break;
        case Transform::cube: data.values(i, n) = w * w * w; break;
        default: data.values(i, n) = w;
      }
    }

  auto rng_y = stream(4);
  LabelVector y(spec.samples);
  for (Eigen::Index n = 0; n < N; ++n) {
    const int c = spec.dpm ? truth.cluster[static_cast<std::size_t>(n)] : 0;
    const double noise = rng_y.normal();
    const double score = truth.beta.col(c).dot(truth.Z.col(n)) + spec.label_noise * noise;
    y[static_cast<std::size_t>(n)] = static_cast<std::int8_t>(decision_label(score));
  }
  data.labels.push_back(std::move(y));
  for (Eigen::Index n = 0; n < N; ++n) data.sample_ids.push_back("s" + std::to_string(n + 1));
  for (Eigen::Index i = 0; i < d; ++i) data.feature_names.push_back("f" + std::to_string(i + 1));
  return out;
}

}  // namespace mmrank
