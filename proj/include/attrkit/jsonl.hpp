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
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace attrkit {

// Insertion-ordered JSON; every file this library writes is a function of
// record contents and order only.
using Json = nlohmann::ordered_json;

// Line-delimited JSON reader. Blank lines are skipped; line numbers are
// 1-based physical line numbers in the source.
class JsonlReader {
 public:
  explicit JsonlReader(std::istream& in) : in_(in) {}

  struct Line {
    std::size_t number = 0;
    std::string text;
  };

  // Next non-blank physical line, or nullopt at end of input.
  std::optional<Line> next_line();

  // Parses a line into a JSON object; throws ParseError on syntax errors or
  // when the value is not an object.
  static Json parse_object(const Line& line);

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

// Typed field access with located errors.
const Json& require_field(const Json& obj, const char* key, std::size_t line);
std::string require_string(const Json& obj, const char* key, std::size_t line);
double require_number(const Json& obj, const char* key, std::size_t line);
const Json& require_array(const Json& obj, const char* key, std::size_t line);
const Json& require_object(const Json& obj, const char* key, std::size_t line);
std::vector<double> require_number_array(const Json& obj, const char* key, std::size_t line);
std::vector<std::string> require_string_array(const Json& obj, const char* key,
                                              std::size_t line);

std::string dump_line(const Json& record);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file then renames it over the destination.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Streaming form of write_file_atomic. Nothing appears at the destination
// until commit(); an uncommitted writer removes its temp file.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(std::filesystem::path path);
  ~AtomicFileWriter();
  AtomicFileWriter(const AtomicFileWriter&) = delete;
  AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

  void write(std::string_view data);
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

}  // namespace attrkit
