// Copyright 2026 The attrkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace attrkit {

// Base of every error raised by the library. Domain errors (bad data,
// violated constraints) and I/O errors are kept apart so that callers can
// map them onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input at a given line (1-based) and field.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + (field.empty() ? "" : ", field '" + field + "'") +
              ": " + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// One or more structural constraint violations, all reported at once.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "validation failed";
    for (const auto& s : v) out += "\n  " + s;
    return out;
  }

  std::vector<std::string> violations_;
};

// Lookup of a category, dimension, primitive or token that does not exist.
class LookupError : public Error {
 public:
  using Error::Error;
};

// Numerical degeneracy: zero-norm vectors, non-finite losses.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace attrkit
