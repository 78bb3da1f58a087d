// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>
#include "json.hpp"

#include "mmrank/predict.hpp"
#include "mmrank/synthetic.hpp"

namespace mmrank {

inline constexpr int kContainerVersion = 1;

struct Section {
  std::string name;
  Eigen::MatrixXd data;
};

/*!
 * Single-file store: an 8-byte magic, the manifest length as a little-endian
 * u64, the JSON manifest, then each section as little-endian float64 in
 * column-major order. The manifest lists every section with its shape, byte
 * offset and CRC-32.
 */
struct Container {
  nlohmann::json manifest;  // without the "sections" table, which is derived
  std::vector<Section> sections;

  Section const& section(std::string const& name) const;
  bool has(std::string const& name) const;
  void add(std::string name, Eigen::MatrixXd data);
};

std::string serialize(Container const& c);
//! Throws ChecksumError on a CRC mismatch and DataError on malformed input.
Container deserialize(std::string const& bytes);

void save_container(std::string const& path, Container const& c);
Container load_container(std::string const& path);

/// Free-form provenance stored verbatim under "created".
Container pack_model(TrainedModel const& model, nlohmann::json created = nlohmann::json::object());
TrainedModel unpack_model(Container const& c);

Container pack_truth(SyntheticTruth const& truth, SyntheticSpec const& spec);
SyntheticTruth unpack_truth(Container const& c);

nlohmann::json hyper_to_json(Hyperparams const& h);
Hyperparams hyper_from_json(nlohmann::json const& j);

}  // namespace mmrank
