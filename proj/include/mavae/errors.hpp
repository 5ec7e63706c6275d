// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mavae {

// Error categories map onto CLI exit codes (see cli/commands.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (unknown keys, out-of-range values, bad plans).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent data on disk or in memory.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A required file or directory is missing or not writable.
class PathError : public Error {
 public:
  using Error::Error;
};

}  // namespace mavae
