// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The podtile Authors

#pragma once

#include <stdexcept>
#include <string>

namespace podtile {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (corpus files, qrels, config).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Transport-level failure that may succeed on a later attempt.
class RetryableError : public Error {
 public:
  using Error::Error;
};

}  // namespace podtile
