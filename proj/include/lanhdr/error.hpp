/*
 * Copyright 2026 The lanhdr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace lanhdr {

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorCategory {
  kInvalidInput,
  kContractViolation,
  kDegenerateInput,
  kConfig,
  kData,
  kRuntime,
  kDivergence,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& what)
      : Error(ErrorCategory::kInvalidInput, what) {}
};

/// A caller broke a shape/scale precondition.
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what)
      : Error(ErrorCategory::kContractViolation, what) {}
};

class DegenerateInputError : public Error {
 public:
  explicit DegenerateInputError(const std::string& what)
      : Error(ErrorCategory::kDegenerateInput, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::kConfig, what) {}
};

/// I/O, codec, manifest and dataset problems.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorCategory::kData, what) {}
};

class RuntimeError : public Error {
 public:
  explicit RuntimeError(const std::string& what) : Error(ErrorCategory::kRuntime, what) {}
};

class TrainingDivergenceError : public Error {
 public:
  explicit TrainingDivergenceError(const std::string& what)
      : Error(ErrorCategory::kDivergence, what) {}
};

/// Process exit code for an error category.
inline int exit_code_for(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::kConfig:
      return 2;
    case ErrorCategory::kData:
      return 3;
    case ErrorCategory::kDivergence:
      return 5;
    case ErrorCategory::kInvalidInput:
    case ErrorCategory::kContractViolation:
    case ErrorCategory::kDegenerateInput:
    case ErrorCategory::kRuntime:
      return 4;
  }
  return 4;
}

namespace detail {

template <typename E = ContractViolation>
inline void require(bool condition, const std::string& message) {
  if (!condition) throw E(message);
}

}  // namespace detail
}  // namespace lanhdr
