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

#include "attrkit/instance.hpp"

#include <cmath>

namespace attrkit {

BoundingBox parse_bbox(const Json& obj, std::size_t line) {
  const auto v = require_number_array(obj, "bbox", line);
  if (v.size() != 4) throw ParseError(line, "bbox", "expected [x, y, width, height]");
  for (double x : v) {
    if (!std::isfinite(x)) throw ParseError(line, "bbox", "non-finite coordinate");
  }
  return {v[0], v[1], v[2], v[3]};
}

Json instance_to_json(const InstanceRecord& r) {
  Json rec;
  rec["instance_id"] = r.instance_id;
  rec["image_id"] = r.image_id;
  rec["bbox"] = r.bbox;
  rec["category"] = r.attributes.proto_tag;
  Json attrs = Json::object();
  for (const auto& a : r.attributes.assignments) attrs[a.dimension] = a.primitive;
  rec["attributes"] = std::move(attrs);
  if (!r.feature.empty()) rec["feature"] = r.feature;
  return rec;
}

InstanceRecord instance_from_json(const Json& obj, std::size_t line,
                                  const AttributeDictionary* dict) {
  InstanceRecord r;
  r.instance_id = require_string(obj, "instance_id", line);
  if (obj.contains("image_id")) r.image_id = require_string(obj, "image_id", line);
  if (obj.contains("bbox")) r.bbox = parse_bbox(obj, line);
  r.attributes.proto_tag = require_string(obj, "category", line);
  if (obj.contains("attributes")) {
    for (const auto& [key, value] : require_object(obj, "attributes", line).items()) {
      if (!value.is_string()) throw ParseError(line, "attributes", "expected string values");
      r.attributes.assignments.push_back({key, value.get<std::string>()});
    }
  }
  if (obj.contains("feature")) r.feature = require_number_array(obj, "feature", line);
  if (dict) {
    auto problems = validate_instance(*dict, r.attributes);
    if (!problems.empty()) throw ParseError(line, "attributes", problems.front().message);
  }
  return r;
}

std::string serialize_instances(const std::vector<InstanceRecord>& records) {
  std::string out;
  for (const auto& r : records) out += dump_line(instance_to_json(r));
  return out;
}

RecordStream<InstanceRecord> ingest_instances(std::unique_ptr<std::istream> in,
                                              const AttributeDictionary* dict, bool strict) {
  return RecordStream<InstanceRecord>(
      std::move(in), [dict](const Json& obj, std::size_t line) { return instance_from_json(obj, line, dict); },
      strict);
}

}  // namespace attrkit
