// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mk {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Extents that are zero, overflow, or do not agree between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Out-of-range or otherwise invalid scalar parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed TensorFile contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Missing or unreadable files.
class FileError : public Error {
 public:
  using Error::Error;
};

// Checkpoint contents that do not match the requested configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// API used out of order, e.g. a tape replayed twice.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Raised when a benchmark request exceeds the element budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

// A linear-attention denominator fell below the degeneracy threshold.
class DegenerateSimilarityError : public Error {
 public:
  DegenerateSimilarityError(std::size_t row, double denominator)
      : Error("degenerate similarity at row " + std::to_string(row) +
              ": denominator " + std::to_string(denominator)),
        row_(row),
        denominator_(denominator) {}

  std::size_t row() const noexcept { return row_; }
  double denominator() const noexcept { return denominator_; }

 private:
  std::size_t row_;
  double denominator_;
};

// A randomized search ran out of trials.
class SearchExhaustedError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced inside an iterative procedure. `index` names the step,
// block or iteration at which it was detected.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& where, std::size_t index)
      : Error("non-finite value in " + where + " " + std::to_string(index)),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace mk
