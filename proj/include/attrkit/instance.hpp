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

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "attrkit/dictionary.hpp"
#include "attrkit/encoder.hpp"
#include "attrkit/jsonl.hpp"
#include "attrkit/record_stream.hpp"

namespace attrkit {

using BoundingBox = std::array<double, 4>;  // x, y, width, height in pixels

// One annotated object: identity, box, ProtoTag with (possibly partial)
// attributes, and an optional raw visual feature.
//
// Line format: {"instance_id", "image_id"?, "bbox"?: [x, y, w, h],
// "category", "attributes"?: {key: primitive}, "feature"?: [...]}.
struct InstanceRecord {
  std::string instance_id;
  std::string image_id;
  BoundingBox bbox{};
  InstanceAttributeSet attributes;
  Vec feature;
};

Json instance_to_json(const InstanceRecord& r);
// Validates attributes against `dict` when it is non-null.
InstanceRecord instance_from_json(const Json& obj, std::size_t line,
                                  const AttributeDictionary* dict);

std::string serialize_instances(const std::vector<InstanceRecord>& records);

RecordStream<InstanceRecord> ingest_instances(std::unique_ptr<std::istream> in,
                                              const AttributeDictionary* dict, bool strict = false);

BoundingBox parse_bbox(const Json& obj, std::size_t line);

}  // namespace attrkit
