// Copyright 2026 The lcshap Authors.
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

#ifndef LCSHAP_ERRORS_H_
#define LCSHAP_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lcshap {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class UnsupportedTopologyError : public Error {
 public:
  using Error::Error;
};

// An enumeration or evaluation budget was exhausted. `count()` is the number
// of items reached when the budget tripped.
class BudgetExceededError : public Error {
 public:
  BudgetExceededError(const std::string& what, std::size_t count)
      : Error(what), count_(count) {}
  std::size_t count() const { return count_; }

 private:
  std::size_t count_;
};

// Exact methods refuse problems with more players than their limit.
class LimitExceededError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public Error {
 public:
  SingularSystemError(const std::string& what, std::size_t null_space_dim)
      : Error(what), null_space_dim_(null_space_dim) {}
  std::size_t null_space_dim() const { return null_space_dim_; }

 private:
  std::size_t null_space_dim_;
};

// A model failed to evaluate a batch. `indices()` are the positions of the
// affected instances within the request.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::vector<std::size_t> indices)
      : Error(what), indices_(std::move(indices)) {}
  const std::vector<std::size_t>& indices() const { return indices_; }

 private:
  std::vector<std::size_t> indices_;
};

class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string line)
      : Error(what + ": " + line), line_(std::move(line)) {}
  const std::string& line() const { return line_; }

 private:
  std::string line_;
};

class ZeroMassError : public Error {
 public:
  using Error::Error;
};

}  // namespace lcshap

#endif  // LCSHAP_ERRORS_H_
