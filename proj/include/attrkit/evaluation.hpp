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
#include <span>
#include <string>
#include <vector>

#include "attrkit/dictionary.hpp"
#include "attrkit/encoder.hpp"
#include "attrkit/instance.hpp"
#include "attrkit/jsonl.hpp"

namespace attrkit {

enum class EvalMode { atomic, compositional };

// Accuracy of one dimension combination.
struct EvalGroup {
  std::string category;
  std::vector<std::string> dimensions;
  std::size_t candidates = 0;
  std::size_t evaluated = 0;
  std::size_t correct = 0;

  double accuracy() const {
    return evaluated ? static_cast<double>(correct) / static_cast<double>(evaluated) : 0.0;
  }
};

struct EvalReport {
  EvalMode mode = EvalMode::atomic;
  std::size_t n_attrs = 1;
  std::size_t instances = 0;
  std::vector<EvalGroup> groups;
  // Mean accuracy over groups that evaluated at least one instance.
  double mean_accuracy = 0.0;
};

// Prompt-matching verification. For every combination of n_attrs
// dimensions (n_attrs = 1 in atomic mode) the candidates are all prompts
// over that combination; an instance annotated on every dimension of the
// combination counts as correct when its true prompt ranks first, strictly.
EvalReport evaluate_prompt_matching(const EncoderParams& params, const AttributeDictionary& dict,
                                    std::span<const InstanceRecord> benchmark, EvalMode mode,
                                    std::size_t n_attrs);

Json eval_report_to_json(const EvalReport& report);

}  // namespace attrkit
