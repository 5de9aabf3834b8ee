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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attrkit/dictionary.hpp"
#include "attrkit/random.hpp"

namespace attrkit {

// Joins the ProtoTag and primitives of a prompt. Bit-exact.
inline constexpr std::string_view kPromptSeparator = " + ";

enum class PromptKind { positive, negative, fallback, compositional };

std::string_view to_string(PromptKind kind);

// A ProtoTag followed by an ordered list of distinct primitives.
class Prompt {
 public:
  Prompt(std::string proto_tag, std::vector<std::string> primitives,
         PromptKind kind = PromptKind::positive);

  const std::string& proto_tag() const noexcept { return proto_tag_; }
  const std::vector<std::string>& primitives() const noexcept { return primitives_; }
  const std::string& serialized() const noexcept { return serialized_; }
  PromptKind kind() const noexcept { return kind_; }

  // [proto_tag] followed by the primitives.
  std::vector<std::string> tokens() const;

  // Token equality; the kind is a label and does not participate.
  friend bool operator==(const Prompt& a, const Prompt& b) {
    return a.serialized_ == b.serialized_;
  }

 private:
  std::string proto_tag_;
  std::vector<std::string> primitives_;
  std::string serialized_;
  PromptKind kind_;
};

std::string serialize(const Prompt& prompt);
std::string serialize_tokens(std::span<const std::string> tokens);

// Inverse of serialize for names accepted by the dictionary.
std::vector<std::string> parse_prompt_tokens(std::string_view serialized);

// Builds a prompt from a token list whose first element is the ProtoTag.
Prompt prompt_from_tokens(std::span<const std::string> tokens,
                          PromptKind kind = PromptKind::positive);

struct PromptGenConfig {
  double keep_prob = 0.5;
  std::size_t num_negatives = 3;
  std::size_t replacements = 1;
  std::uint64_t seed = 0;

  // Throws Error when keep_prob is outside (0, 1] or replacements is 0.
  void validate() const;
};

// Random stream for the prompts of one instance: a function of the run seed
// and the instance id only, so any instance can be regenerated on its own.
Rng prompt_stream(std::uint64_t seed, std::string_view instance_id);

// Stochastic positive view: each assigned primitive is kept with
// probability keep_prob, then the survivors are uniformly permuted. The
// ProtoTag is never dropped or moved. An empty survivor set is allowed.
Prompt generate_positive(const InstanceAttributeSet& inst, const PromptGenConfig& cfg, Rng& rng);

// k negatives for `positive`. Each counterfactual swaps exactly
// cfg.replacements primitives of the positive for antagonists from the same
// dimension, keeping positions and the ProtoTag. Candidates are enumerated
// in dictionary order and sampled without replacement. When the positive
// has fewer than `replacements` primitives or the counterfactual space has
// fewer than k members, category fallback negatives fill the remainder.
std::vector<Prompt> generate_negatives(const AttributeDictionary& dict, const Prompt& positive,
                                       const InstanceAttributeSet& inst,
                                       const PromptGenConfig& cfg, Rng& rng);

// k bare ProtoTags of other categories: without replacement until the
// categories run out, then with replacement. Throws LookupError when no
// other category exists and k > 0.
std::vector<Prompt> generate_category_fallback_negatives(const AttributeDictionary& dict,
                                                         std::string_view proto_tag,
                                                         std::size_t k, Rng& rng);
std::vector<Prompt> generate_category_fallback_negatives(std::span<const std::string> categories,
                                                         std::string_view proto_tag,
                                                         std::size_t k, Rng& rng);

// Every combination of n_attrs distinct dimensions with one primitive each,
// in dictionary order (dimension subsets lexicographic, then primitives
// with the last dimension varying fastest).
std::vector<Prompt> generate_compositional_prompts(const AttributeDictionary& dict,
                                                   std::string_view category,
                                                   std::size_t n_attrs);

// Atomic prompts: ProtoTag plus one primitive, for every primitive of the
// category in dictionary order.
std::vector<Prompt> generate_atomic_prompts(const AttributeDictionary& dict,
                                            std::string_view category);

}  // namespace attrkit
