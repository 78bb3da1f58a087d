// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mmrank/train.hpp"

#include "mmrank/errors.hpp"

namespace mmrank {

std::string to_string(Engine e) { return e == Engine::vb ? "vb" : "gibbs"; }

Engine parse_engine(std::string const& s) {
  if (s == "gibbs") return Engine::gibbs;
  if (s == "vb") return Engine::vb;
  throw ConfigError("unknown engine '" + s + "' (expected gibbs or vb)");
}

void TrainSettings::validate() const {
  hyper.validate();
  if (engine == Engine::vb && hyper.classifier == ClassifierKind::dpm)
    throw ConfigError("--engine vb with --classifier dpm is not supported: "
                      "variational inference covers the linear classifier only");
  if (engine == Engine::gibbs) gibbs.validate();
  else vb.validate();
}

std::string TrainSettings::label() const {
  const char* lik = hyper.likelihood == Likelihood::gaussian ? "G" : "R";
  const char* cls = hyper.classifier == ClassifierKind::dpm ? "NL" : "L";
  return std::string(lik) + "-" + cls + "-BSVM";
}

TrainResult train(Dataset const& data, TrainSettings const& settings) {
  settings.validate();
  const TrainingData td = TrainingData::from(data, settings.hyper.likelihood);
  TrainResult out;
  if (settings.engine == Engine::gibbs) {
    PosteriorSummary summary = run_gibbs(td, settings.hyper, settings.gibbs, settings.seed);
    out.model = model_from_gibbs(summary, td, settings.hyper);
    out.trace = std::move(summary.trace);
    out.iterations = settings.gibbs.iterations;
  } else {
    VbResult result = run_vb(td, settings.hyper, settings.vb, settings.seed);
    out.model = model_from_vb(result, td, settings.hyper);
    out.trace = std::move(result.report.trace);
    out.iterations = result.report.iterations;
    out.converged = result.report.converged;
  }
  return out;
}

}  // namespace mmrank
