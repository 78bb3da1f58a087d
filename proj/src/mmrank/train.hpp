// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmrank/gibbs.hpp"
#include "mmrank/model.hpp"
#include "mmrank/predict.hpp"
#include "mmrank/vb.hpp"

namespace mmrank {

enum class Engine { gibbs, vb };

std::string to_string(Engine);
Engine parse_engine(std::string const&);

struct TrainSettings {
  Hyperparams hyper;
  Engine engine = Engine::gibbs;
  GibbsConfig gibbs;
  VbConfig vb;
  std::uint64_t seed = 1;

  //! Throws ConfigError for out-of-scope combinations (VB with DPM).
  void validate() const;
  //! Short label such as R-L-BSVM or G-NL-BSVM.
  std::string label() const;
};

struct TrainResult {
  TrainedModel model;
  std::vector<double> trace;  // Gibbs: log pseudo-joint; VB: relative change
  int iterations = 0;
  bool converged = true;
};

TrainResult train(Dataset const& data, TrainSettings const& settings);

}  // namespace mmrank
