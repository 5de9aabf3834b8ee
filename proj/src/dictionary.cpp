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

#include "attrkit/dictionary.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "attrkit/error.hpp"
#include "attrkit/jsonl.hpp"

namespace attrkit {

std::string name_problem(std::string_view name) {
  if (name.empty()) return "is empty";
  auto space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  if (space(name.front()) || space(name.back())) return "has surrounding whitespace";
  if (name.find(" + ") != std::string_view::npos) return "contains the prompt separator ' + '";
  if (name.starts_with("+ ") || name.ends_with(" +")) return "is ambiguous next to the prompt separator";
  return {};
}

std::vector<std::string> AttributeDictionary::check(const std::vector<CategorySpec>& categories) {
  std::vector<std::string> out;
  std::set<std::string, std::less<>> seen_categories;
  for (const auto& cat : categories) {
    const std::string where = "category '" + cat.name + "'";
    if (auto p = name_problem(cat.name); !p.empty()) out.push_back(where + ": name " + p);
    if (!seen_categories.insert(cat.name).second) out.push_back(where + ": duplicate category");

    std::set<std::string, std::less<>> keys;
    std::map<std::string, std::string, std::less<>> owner;
    for (const auto& dim : cat.dimensions) {
      const std::string dwhere = where + ", dimension '" + dim.key + "'";
      if (dim.key.empty()) out.push_back(dwhere + ": key is empty");
      if (!keys.insert(dim.key).second) out.push_back(dwhere + ": duplicate dimension key");
      if (dim.values.size() < 2) {
        out.push_back(dwhere + ": needs at least 2 primitives, has " +
                      std::to_string(dim.values.size()));
      }
      std::set<std::string, std::less<>> local;
      for (const auto& v : dim.values) {
        if (auto p = name_problem(v); !p.empty()) {
          out.push_back(dwhere + ": primitive '" + v + "' " + p);
        }
        if (!local.insert(v).second) {
          out.push_back(dwhere + ": duplicate primitive '" + v + "'");
          continue;
        }
        auto [it, fresh] = owner.emplace(v, dim.key);
        if (!fresh) {
          out.push_back(dwhere + ": primitive '" + v + "' already belongs to dimension '" +
                        it->second + "'");
        }
      }
    }
  }
  return out;
}

AttributeDictionary::AttributeDictionary(std::vector<CategorySpec> categories)
    : categories_(std::move(categories)) {
  if (auto problems = check(categories_); !problems.empty()) {
    throw ValidationError(std::move(problems));
  }
  dimension_index_.resize(categories_.size());
  primitive_owner_.resize(categories_.size());
  for (std::size_t c = 0; c < categories_.size(); ++c) {
    category_index_.emplace(categories_[c].name, c);
    const auto& dims = categories_[c].dimensions;
    for (std::size_t d = 0; d < dims.size(); ++d) {
      dimension_index_[c].emplace(dims[d].key, d);
      for (const auto& v : dims[d].values) primitive_owner_[c].emplace(v, d);
    }
  }
}

std::size_t AttributeDictionary::category_pos(std::string_view name) const {
  auto it = category_index_.find(name);
  if (it == category_index_.end()) {
    throw LookupError("unknown category '" + std::string(name) + "'");
  }
  return it->second;
}

bool AttributeDictionary::has_category(std::string_view name) const {
  return category_index_.find(name) != category_index_.end();
}

const CategorySpec& AttributeDictionary::category(std::string_view name) const {
  return categories_[category_pos(name)];
}

bool AttributeDictionary::has_dimension(std::string_view category, std::string_view key) const {
  auto it = category_index_.find(category);
  if (it == category_index_.end()) return false;
  const auto& idx = dimension_index_[it->second];
  return idx.find(key) != idx.end();
}

std::size_t AttributeDictionary::dimension_index(std::string_view category,
                                                 std::string_view key) const {
  const auto c = category_pos(category);
  auto it = dimension_index_[c].find(key);
  if (it == dimension_index_[c].end()) {
    throw LookupError("unknown dimension '" + std::string(key) + "' in category '" +
                      std::string(category) + "'");
  }
  return it->second;
}

const Dimension& AttributeDictionary::dimension(std::string_view category,
                                                std::string_view key) const {
  return categories_[category_pos(category)].dimensions[dimension_index(category, key)];
}

std::size_t AttributeDictionary::owner_index(std::string_view category,
                                             std::string_view primitive) const {
  const auto c = category_pos(category);
  auto it = primitive_owner_[c].find(primitive);
  return it == primitive_owner_[c].end() ? npos : it->second;
}

std::vector<std::string> AttributeDictionary::category_names() const {
  std::vector<std::string> out;
  out.reserve(categories_.size());
  for (const auto& c : categories_) out.push_back(c.name);
  return out;
}

std::size_t AttributeDictionary::max_dimensions() const noexcept {
  std::size_t m = 0;
  for (const auto& c : categories_) m = std::max(m, c.dimensions.size());
  return m;
}

AttributeDictionary parse_dictionary(std::istream& in) {
  JsonlReader reader(in);
  std::vector<CategorySpec> categories;
  while (auto line = reader.next_line()) {
    const Json rec = JsonlReader::parse_object(*line);
    CategorySpec cat;
    cat.name = require_string(rec, "category", line->number);
    for (const auto& d : require_array(rec, "dimensions", line->number)) {
      if (!d.is_object()) throw ParseError(line->number, "dimensions", "expected object entries");
      Dimension dim;
      dim.key = require_string(d, "key", line->number);
      dim.values = require_string_array(d, "values", line->number);
      cat.dimensions.push_back(std::move(dim));
    }
    categories.push_back(std::move(cat));
  }
  return AttributeDictionary(std::move(categories));
}

AttributeDictionary parse_dictionary_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_dictionary(in);
}

AttributeDictionary load_dictionary(const std::string& path) {
  return parse_dictionary_text(read_file(path));
}

std::string serialize_dictionary(const AttributeDictionary& dict) {
  std::string out;
  for (const auto& cat : dict.categories()) {
    Json rec;
    rec["category"] = cat.name;
    rec["dimensions"] = Json::array();
    for (const auto& dim : cat.dimensions) {
      rec["dimensions"].push_back(Json{{"key", dim.key}, {"values", dim.values}});
    }
    out += dump_line(rec);
  }
  return out;
}

std::vector<Violation> validate_instance(const AttributeDictionary& dict,
                                         const InstanceAttributeSet& inst) {
  std::vector<Violation> out;
  if (!dict.has_category(inst.proto_tag)) {
    out.push_back({ViolationKind::unknown_category, "unknown category '" + inst.proto_tag + "'"});
    return out;
  }
  std::set<std::string, std::less<>> assigned;
  for (const auto& a : inst.assignments) {
    if (!dict.has_dimension(inst.proto_tag, a.dimension)) {
      out.push_back({ViolationKind::unknown_dimension,
                     "unknown dimension '" + a.dimension + "' for '" + inst.proto_tag + "'"});
      continue;
    }
    if (!assigned.insert(a.dimension).second) {
      out.push_back({ViolationKind::duplicate_dimension,
                     "dimension '" + a.dimension + "' assigned more than once"});
    }
    const auto& values = dict.dimension(inst.proto_tag, a.dimension).values;
    if (std::find(values.begin(), values.end(), a.primitive) == values.end()) {
      out.push_back({ViolationKind::unknown_primitive,
                     "unknown primitive '" + a.primitive + "' for dimension '" + a.dimension + "'"});
    }
  }
  return out;
}

std::string dimension_of(const AttributeDictionary& dict, std::string_view category,
                         std::string_view primitive) {
  const auto idx = dict.owner_index(category, primitive);
  if (idx == AttributeDictionary::npos) {
    throw LookupError("unknown primitive '" + std::string(primitive) + "' in category '" +
                      std::string(category) + "'");
  }
  return dict.category(category).dimensions[idx].key;
}

std::vector<std::string> antagonists(const AttributeDictionary& dict, std::string_view category,
                                     std::string_view dimension_key, std::string_view primitive) {
  const auto& values = dict.dimension(category, dimension_key).values;
  std::vector<std::string> out;
  bool found = false;
  for (const auto& v : values) {
    if (v == primitive) {
      found = true;
    } else {
      out.push_back(v);
    }
  }
  if (!found) {
    throw LookupError("primitive '" + std::string(primitive) + "' is not in dimension '" +
                      std::string(dimension_key) + "'");
  }
  return out;
}

}  // namespace attrkit
