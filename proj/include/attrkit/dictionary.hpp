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
#include <functional>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace attrkit {

// One attribute dimension: a key and its mutually exclusive primitives, in
// authored order.
struct Dimension {
  std::string key;
  std::vector<std::string> values;

  friend bool operator==(const Dimension&, const Dimension&) = default;
};

struct CategorySpec {
  std::string name;
  std::vector<Dimension> dimensions;

  friend bool operator==(const CategorySpec&, const CategorySpec&) = default;
};

// Per-category attribute dictionary.
//
// Construction validates every structural constraint and throws
// ValidationError listing all violations:
//   - category names unique, dimension keys unique within a category;
//   - every dimension has at least two primitives, none repeated;
//   - a primitive is owned by exactly one dimension of its category;
//   - names are non-empty, have no surrounding whitespace and cannot be
//     confused with the prompt separator.
// Strings are compared byte-exactly. The object is immutable afterwards and
// safe for concurrent reads.
class AttributeDictionary {
 public:
  AttributeDictionary() = default;
  explicit AttributeDictionary(std::vector<CategorySpec> categories);

  // All violations of the constraints above; empty when valid.
  static std::vector<std::string> check(const std::vector<CategorySpec>& categories);

  const std::vector<CategorySpec>& categories() const noexcept { return categories_; }
  bool empty() const noexcept { return categories_.empty(); }

  bool has_category(std::string_view name) const;
  const CategorySpec& category(std::string_view name) const;
  const Dimension& dimension(std::string_view category, std::string_view key) const;
  bool has_dimension(std::string_view category, std::string_view key) const;
  std::size_t dimension_index(std::string_view category, std::string_view key) const;
  // Index of the dimension owning `primitive`, or npos.
  std::size_t owner_index(std::string_view category, std::string_view primitive) const;

  std::vector<std::string> category_names() const;
  std::size_t max_dimensions() const noexcept;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  using Index = std::map<std::string, std::size_t, std::less<>>;

  std::size_t category_pos(std::string_view name) const;

  std::vector<CategorySpec> categories_;
  Index category_index_;
  std::vector<Index> dimension_index_;
  std::vector<Index> primitive_owner_;
};

// Line-delimited dictionary document: one {"category", "dimensions":
// [{"key", "values"}]} object per line. Throws ParseError (with line and
// field) on malformed input and ValidationError on constraint violations.
AttributeDictionary parse_dictionary(std::istream& in);
AttributeDictionary parse_dictionary_text(std::string_view text);
AttributeDictionary load_dictionary(const std::string& path);

std::string serialize_dictionary(const AttributeDictionary& dict);

struct Assignment {
  std::string dimension;
  std::string primitive;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// Attributes annotated on one object. Assignments may cover any subset of
// the category's dimensions.
struct InstanceAttributeSet {
  std::string proto_tag;
  std::vector<Assignment> assignments;

  friend bool operator==(const InstanceAttributeSet&, const InstanceAttributeSet&) = default;
};

enum class ViolationKind {
  unknown_category,
  unknown_dimension,
  unknown_primitive,
  duplicate_dimension,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

// Violations are data; an empty result means the instance is valid.
std::vector<Violation> validate_instance(const AttributeDictionary& dict,
                                         const InstanceAttributeSet& inst);

std::string dimension_of(const AttributeDictionary& dict, std::string_view category,
                         std::string_view primitive);

// The dimension's other primitives in dictionary order.
std::vector<std::string> antagonists(const AttributeDictionary& dict, std::string_view category,
                                     std::string_view dimension_key, std::string_view primitive);

// Checks a name against the token rules used by prompt serialization.
// Returns an empty string when acceptable, otherwise the reason.
std::string name_problem(std::string_view name);

}  // namespace attrkit
