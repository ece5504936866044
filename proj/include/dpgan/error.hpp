// Copyright 2026 The DPGAN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace dpgan {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kNumeric = 3,
  kIo = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

// Invalid specification, configuration file, or parameter combination.
class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kConfig; }
};

// Tensor width or length mismatch.
class ShapeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Privacy budget calibration that has no solution in the search range.
class CalibrationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class AccountingError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Non-finite values in gradients, parameters or statistics. Carries the
// offending example (or coordinate) index when one is known, and the training
// step when raised from inside the training loop.
class NumericError : public Error {
 public:
  static constexpr std::int64_t kNoIndex = -1;

  explicit NumericError(std::string what, std::int64_t index = kNoIndex,
                        std::int64_t step = kNoIndex)
      : Error(format(what, index, step)),
        base_(std::move(what)),
        index_(index),
        step_(step) {}

  ExitCode exit_code() const noexcept override { return ExitCode::kNumeric; }
  std::int64_t index() const noexcept { return index_; }
  std::int64_t step() const noexcept { return step_; }

  // Same error, tagged with the training step at which it surfaced.
  NumericError at_step(std::int64_t step) const {
    return NumericError(base_, index_, step);
  }

 private:
  static std::string format(const std::string& what, std::int64_t index,
                            std::int64_t step) {
    std::string msg = what;
    if (index != kNoIndex) msg += " (example " + std::to_string(index) + ")";
    if (step != kNoIndex) msg += " at step " + std::to_string(step);
    return msg;
  }

  std::string base_;
  std::int64_t index_;
  std::int64_t step_;
};

// File-system or format failure. `offset` is the byte position where a
// malformed input was detected, or -1.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what, std::int64_t offset = -1)
      : Error(offset >= 0 ? what + " at byte offset " + std::to_string(offset)
                          : what),
        offset_(offset) {}

  ExitCode exit_code() const noexcept override { return ExitCode::kIo; }
  std::int64_t offset() const noexcept { return offset_; }

 private:
  std::int64_t offset_;
};

}  // namespace dpgan
