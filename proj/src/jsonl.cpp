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

#include "attrkit/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "attrkit/error.hpp"

namespace attrkit {

namespace {

bool is_blank(const std::string& s) {
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\r' && c != '\n') return false;
  }
  return true;
}

}  // namespace

std::optional<JsonlReader::Line> JsonlReader::next_line() {
  std::string text;
  while (std::getline(in_, text)) {
    ++line_no_;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (is_blank(text)) continue;
    return Line{line_no_, std::move(text)};
  }
  if (in_.bad()) throw IoError("read failure after line " + std::to_string(line_no_));
  return std::nullopt;
}

Json JsonlReader::parse_object(const Line& line) {
  Json value;
  try {
    value = Json::parse(line.text);
  } catch (const Json::parse_error& e) {
    throw ParseError(line.number, "", std::string("malformed JSON: ") + e.what());
  }
  if (!value.is_object()) throw ParseError(line.number, "", "record is not an object");
  return value;
}

const Json& require_field(const Json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, key, "missing field");
  return *it;
}

std::string require_string(const Json& obj, const char* key, std::size_t line) {
  const Json& v = require_field(obj, key, line);
  if (!v.is_string()) throw ParseError(line, key, "expected string");
  return v.get<std::string>();
}

double require_number(const Json& obj, const char* key, std::size_t line) {
  const Json& v = require_field(obj, key, line);
  if (!v.is_number()) throw ParseError(line, key, "expected number");
  return v.get<double>();
}

const Json& require_array(const Json& obj, const char* key, std::size_t line) {
  const Json& v = require_field(obj, key, line);
  if (!v.is_array()) throw ParseError(line, key, "expected array");
  return v;
}

const Json& require_object(const Json& obj, const char* key, std::size_t line) {
  const Json& v = require_field(obj, key, line);
  if (!v.is_object()) throw ParseError(line, key, "expected object");
  return v;
}

std::vector<double> require_number_array(const Json& obj, const char* key, std::size_t line) {
  std::vector<double> out;
  for (const auto& v : require_array(obj, key, line)) {
    if (!v.is_number()) throw ParseError(line, key, "expected array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::string> require_string_array(const Json& obj, const char* key,
                                              std::size_t line) {
  std::vector<std::string> out;
  for (const auto& v : require_array(obj, key, line)) {
    if (!v.is_string()) throw ParseError(line, key, "expected array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string dump_line(const Json& record) {
  return record.dump() + "\n";
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  AtomicFileWriter out(path);
  out.write(content);
  out.commit();
}

AtomicFileWriter::AtomicFileWriter(std::filesystem::path path)
    : path_(std::move(path)), tmp_(path_) {
  tmp_ += ".tmp";
  out_.open(tmp_, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open '" + tmp_.string() + "' for writing");
}

AtomicFileWriter::~AtomicFileWriter() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_, ec);
  }
}

void AtomicFileWriter::write(std::string_view data) {
  out_.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out_) throw IoError("write failure on '" + tmp_.string() + "'");
}

void AtomicFileWriter::commit() {
  out_.flush();
  if (!out_) throw IoError("write failure on '" + tmp_.string() + "'");
  out_.close();
  std::error_code ec;
  std::filesystem::rename(tmp_, path_, ec);
  if (ec) throw IoError("cannot move output into place at '" + path_.string() + "'");
  committed_ = true;
}

}  // namespace attrkit
