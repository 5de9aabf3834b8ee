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
#include <cstdint>
#include <string>
#include <vector>

#include "attrkit/dictionary.hpp"
#include "attrkit/encoder.hpp"
#include "attrkit/instance.hpp"
#include "attrkit/prompt.hpp"
#include "attrkit/sacl.hpp"

namespace attrkit {

// Synthetic separable attribute task. Every instance of `category` carries
// one uniformly drawn primitive per dimension; its visual feature is the
// concatenation of per-dimension one-hot codes plus Gaussian noise.

// A three-dimension Plane dictionary plus two attribute-free categories
// that serve as fallback negatives.
AttributeDictionary toy_dictionary();

std::size_t toy_feature_dim(const AttributeDictionary& dict, const std::string& category);

std::vector<InstanceRecord> generate_toy_instances(const AttributeDictionary& dict,
                                                const std::string& category, std::size_t n,
                                                double noise, std::uint64_t seed,
                                                const std::string& id_prefix = "toy");

// One stochastic positive and its negatives per instance, each drawn from
// the instance's own prompt stream.
std::vector<TrainingExample> build_training_set(const AttributeDictionary& dict,
                                                const std::vector<InstanceRecord>& instances,
                                                const PromptGenConfig& cfg);

// Every token any prompt over `dict` can contain.
std::vector<std::string> dictionary_tokens(const AttributeDictionary& dict);

// The complete-attribute prompt of an instance, in dictionary order.
Prompt full_prompt(const AttributeDictionary& dict, const InstanceAttributeSet& inst);

// Fraction of instances whose complete-attribute prompt ranks strictly
// above every single-swap counterfactual.
double counterfactual_ranking_accuracy(const EncoderParams& params,
                                       const AttributeDictionary& dict,
                                       const std::vector<InstanceRecord>& instances);

}  // namespace attrkit
