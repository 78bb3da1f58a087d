// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mmrank {

/// Which family of variables a stream feeds. Part of the stream key, so two
/// kinds never share draws even at equal sweep/entity indices.
enum class StreamKind : std::uint32_t {
  init = 1,
  rank_augmentation,
  classifier_augmentation,
  loadings,
  loading_shrinkage,
  loading_global,
  scores,
  classifier,
  dpm_assignment,
  dpm_component,
  dpm_global,
  folds,
  synthetic,
  test,
};

struct StreamKey {
  std::uint64_t sweep = 0;
  StreamKind kind = StreamKind::test;
  std::uint64_t index = 0;
};

/*!
 * Counter-keyed pseudo-random stream.
 *
 * The state is a xoshiro256** generator whose 256-bit seed is derived from
 * (seed, sweep, kind, index) by SplitMix64 mixing. Every entity updated
 * within a sweep owns its own stream, so results do not depend on the order
 * in which workers visit entities.
 */
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed, StreamKey key = {});

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  //! Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  //! Gamma with shape/rate parameterization.
  double gamma(double shape, double rate);
  double beta(double a, double b);
  //! Index drawn with probability proportional to \c weights[i].
  template <class Range>
  std::size_t categorical(Range const& weights, double total);

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

template <class Range>
std::size_t RandomStream::categorical(Range const& weights, double total) {
  double u = uniform() * total;
  std::size_t last = 0;
  std::size_t i = 0;
  for (double w : weights) {
    if (w > 0.0) {
      last = i;
      if (u < w) return i;
      u -= w;
    }
    ++i;
  }
  return last;
}

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace mmrank
