// Copyright 2026 The gmmsem Authors
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

#ifndef GMMSEM_ERROR_HPP_
#define GMMSEM_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gmmsem {

/// Bad input data: dimension mismatches, malformed files, non-finite values.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter vector that violates the mixture-model invariants.
class InvalidModelError : public DataError {
 public:
  using DataError::DataError;
};

/// Bad configuration or arguments supplied by the caller.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A component received no usable support in an M-step. Recoverable by
/// repair_component; carries the component index.
class DegenerateComponentError : public std::runtime_error {
 public:
  DegenerateComponentError(std::size_t component, const std::string& what)
      : std::runtime_error(what), component_(component) {}
  std::size_t component() const noexcept { return component_; }

 private:
  std::size_t component_;
};

/// Repair of a degenerate component failed after its bounded retries.
class UnrecoverableDegeneracyError : public DegenerateComponentError {
 public:
  using DegenerateComponentError::DegenerateComponentError;
};

}  // namespace gmmsem

#endif  // GMMSEM_ERROR_HPP_
