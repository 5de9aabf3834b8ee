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
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "attrkit/error.hpp"
#include "attrkit/jsonl.hpp"

namespace attrkit {

// A located problem with one input line.
struct Diagnostic {
  std::size_t line = 0;
  std::string message;
};

// Streaming reader over a line-delimited file of records of type T.
//
// Lines that fail to parse or validate are collected as diagnostics and
// skipped. In strict mode the first bad line throws instead.
template <typename T>
class RecordStream {
 public:
  using Parser = std::function<T(const Json&, std::size_t)>;

  RecordStream(std::unique_ptr<std::istream> in, Parser parse, bool strict)
      : in_(std::move(in)), reader_(*in_), parse_(std::move(parse)), strict_(strict) {}

  RecordStream(const RecordStream&) = delete;
  RecordStream& operator=(const RecordStream&) = delete;

  std::optional<T> next() {
    while (auto line = reader_.next_line()) {
      try {
        return parse_(JsonlReader::parse_object(*line), line->number);
      } catch (const ParseError& e) {
        if (strict_) throw;
        diagnostics_.push_back({e.line(), e.what()});
      } catch (const Error& e) {
        if (strict_) throw ParseError(line->number, "", e.what());
        diagnostics_.push_back({line->number, "line " + std::to_string(line->number) + ": " + e.what()});
      }
    }
    return std::nullopt;
  }

  std::vector<T> drain() {
    std::vector<T> out;
    while (auto r = next()) out.push_back(std::move(*r));
    return out;
  }

  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::unique_ptr<std::istream> in_;
  JsonlReader reader_;
  Parser parse_;
  bool strict_;
  std::vector<Diagnostic> diagnostics_;
};

inline std::unique_ptr<std::istream> open_input(const std::string& path) {
  auto in = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline std::unique_ptr<std::istream> text_input(std::string text) {
  return std::make_unique<std::istringstream>(std::move(text));
}

}  // namespace attrkit
