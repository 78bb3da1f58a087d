// Copyright 2026 The mmrank Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mmrank {

/// Invalid distribution or special-function parameters.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or inconsistent input data (ragged CSV, non-finite values,
/// dimension mismatch at prediction time, corrupt container).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corrupt model container: a section checksum does not match the manifest.
class ChecksumError : public DataError {
 public:
  using DataError::DataError;
};

/// Inconsistent options or hyperparameters.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An inference engine produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmrank
