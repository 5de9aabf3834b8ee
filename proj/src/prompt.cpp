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

#include "attrkit/prompt.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>

#include "attrkit/error.hpp"

namespace attrkit {

namespace {

// Above this many counterfactual candidates, negatives are drawn by
// rejection sampling instead of full enumeration.
constexpr std::size_t kEnumerationLimit = std::size_t{1} << 16;

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
    return std::numeric_limits<std::size_t>::max();
  }
  return a * b;
}

std::size_t saturating_add(std::size_t a, std::size_t b) {
  return b > std::numeric_limits<std::size_t>::max() - a ? std::numeric_limits<std::size_t>::max()
                                                         : a + b;
}

// Advances `idx` (strictly increasing, values < n) to the next combination
// in lexicographic order. Returns false after the last one.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) {
  const std::size_t r = idx.size();
  for (std::size_t i = r; i-- > 0;) {
    if (idx[i] < n - r + i) {
      ++idx[i];
      for (std::size_t j = i + 1; j < r; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

// Advances a mixed-radix counter, last digit fastest.
bool next_odometer(std::vector<std::size_t>& digits, const std::vector<std::size_t>& radix) {
  for (std::size_t i = digits.size(); i-- > 0;) {
    if (++digits[i] < radix[i]) return true;
    digits[i] = 0;
  }
  return false;
}

std::vector<std::size_t> first_combination(std::size_t r) {
  std::vector<std::size_t> idx(r);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

std::string dimension_for(const AttributeDictionary& dict, const InstanceAttributeSet& inst,
                          const std::string& primitive) {
  for (const auto& a : inst.assignments) {
    if (a.primitive == primitive) return a.dimension;
  }
  return dimension_of(dict, inst.proto_tag, primitive);
}

}  // namespace

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::positive:
      return "positive";
    case PromptKind::negative:
      return "negative";
    case PromptKind::fallback:
      return "fallback";
    case PromptKind::compositional:
      return "compositional";
  }
  return "unknown";
}

Prompt::Prompt(std::string proto_tag, std::vector<std::string> primitives, PromptKind kind)
    : proto_tag_(std::move(proto_tag)), primitives_(std::move(primitives)), kind_(kind) {
  std::set<std::string_view> seen;
  for (const auto& p : primitives_) {
    if (!seen.insert(p).second) {
      throw ValidationError({"prompt '" + proto_tag_ + "' repeats primitive '" + p + "'"});
    }
  }
  serialized_ = proto_tag_;
  for (const auto& p : primitives_) {
    serialized_ += kPromptSeparator;
    serialized_ += p;
  }
}

std::vector<std::string> Prompt::tokens() const {
  std::vector<std::string> out;
  out.reserve(primitives_.size() + 1);
  out.push_back(proto_tag_);
  out.insert(out.end(), primitives_.begin(), primitives_.end());
  return out;
}

std::string serialize(const Prompt& prompt) { return prompt.serialized(); }

std::string serialize_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += kPromptSeparator;
    out += tokens[i];
  }
  return out;
}

std::vector<std::string> parse_prompt_tokens(std::string_view serialized) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = serialized.find(kPromptSeparator, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(serialized.substr(start));
      return out;
    }
    out.emplace_back(serialized.substr(start, pos - start));
    start = pos + kPromptSeparator.size();
  }
}

Prompt prompt_from_tokens(std::span<const std::string> tokens, PromptKind kind) {
  if (tokens.empty()) throw ValidationError({"prompt has no ProtoTag"});
  return Prompt(tokens.front(), std::vector<std::string>(tokens.begin() + 1, tokens.end()), kind);
}

void PromptGenConfig::validate() const {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw Error("keep_prob must be in (0, 1], got " + std::to_string(keep_prob));
  }
  if (replacements == 0) throw Error("replacements must be at least 1");
}

Rng prompt_stream(std::uint64_t seed, std::string_view instance_id) {
  return Rng::substream(seed, "prompts/" + std::string(instance_id));
}

Prompt generate_positive(const InstanceAttributeSet& inst, const PromptGenConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<std::string> kept;
  for (const auto& a : inst.assignments) {
    if (rng.bernoulli(cfg.keep_prob)) kept.push_back(a.primitive);
  }
  rng.shuffle(std::span<std::string>(kept));
  return Prompt(inst.proto_tag, std::move(kept), PromptKind::positive);
}

std::vector<Prompt> generate_negatives(const AttributeDictionary& dict, const Prompt& positive,
                                       const InstanceAttributeSet& inst,
                                       const PromptGenConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t k = cfg.num_negatives;
  const std::size_t r = cfg.replacements;
  std::vector<Prompt> out;
  if (k == 0) return out;

  const auto& prims = positive.primitives();
  const std::size_t m = prims.size();

  std::vector<std::vector<std::string>> rivals;
  rivals.reserve(m);
  for (const auto& p : prims) {
    rivals.push_back(antagonists(dict, positive.proto_tag(), dimension_for(dict, inst, p), p));
  }

  auto build = [&](const std::vector<std::size_t>& positions,
                   const std::vector<std::size_t>& choice) {
    std::vector<std::string> swapped = prims;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      swapped[positions[i]] = rivals[positions[i]][choice[i]];
    }
    return Prompt(positive.proto_tag(), std::move(swapped), PromptKind::negative);
  };

  if (m >= r) {
    std::size_t total = 0;
    for (auto combo = first_combination(r);;) {
      std::size_t count = 1;
      for (auto i : combo) count = saturating_mul(count, rivals[i].size());
      total = saturating_add(total, count);
      if (total > kEnumerationLimit || !next_combination(combo, m)) break;
    }

    if (total <= kEnumerationLimit) {
      std::vector<Prompt> pool;
      pool.reserve(total);
      for (auto combo = first_combination(r);;) {
        std::vector<std::size_t> radix;
        for (auto i : combo) radix.push_back(rivals[i].size());
        std::vector<std::size_t> digits(r, 0);
        do {
          pool.push_back(build(combo, digits));
        } while (next_odometer(digits, radix));
        if (!next_combination(combo, m)) break;
      }
      // Partial Fisher-Yates: the first `take` slots are a uniform sample
      // without replacement.
      const std::size_t take = std::min(k, pool.size());
      for (std::size_t i = 0; i < take; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
      }
    } else {
      std::set<std::string> used{positive.serialized()};
      std::vector<std::size_t> order(m);
      const std::size_t max_attempts = 64 * k + 1024;
      for (std::size_t attempt = 0; attempt < max_attempts && out.size() < k; ++attempt) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = 0; i < r; ++i) {
          const auto j = i + static_cast<std::size_t>(rng.below(m - i));
          std::swap(order[i], order[j]);
        }
        std::vector<std::size_t> positions(order.begin(), order.begin() + static_cast<long>(r));
        std::sort(positions.begin(), positions.end());
        std::vector<std::size_t> choice;
        for (auto i : positions) choice.push_back(static_cast<std::size_t>(rng.below(rivals[i].size())));
        Prompt candidate = build(positions, choice);
        if (used.insert(candidate.serialized()).second) out.push_back(std::move(candidate));
      }
    }
  }

  if (out.size() < k) {
    auto fill = generate_category_fallback_negatives(dict, positive.proto_tag(), k - out.size(), rng);
    out.insert(out.end(), std::make_move_iterator(fill.begin()),
               std::make_move_iterator(fill.end()));
  }
  return out;
}

std::vector<Prompt> generate_category_fallback_negatives(const AttributeDictionary& dict,
                                                         std::string_view proto_tag,
                                                         std::size_t k, Rng& rng) {
  const auto names = dict.category_names();
  return generate_category_fallback_negatives(names, proto_tag, k, rng);
}

std::vector<Prompt> generate_category_fallback_negatives(std::span<const std::string> categories,
                                                         std::string_view proto_tag,
                                                         std::size_t k, Rng& rng) {
  std::vector<Prompt> out;
  if (k == 0) return out;
  std::vector<std::string> others;
  for (const auto& c : categories) {
    if (c != proto_tag && std::find(others.begin(), others.end(), c) == others.end()) {
      others.push_back(c);
    }
  }
  if (others.empty()) {
    throw LookupError("no category other than '" + std::string(proto_tag) +
                      "' is available for fallback negatives");
  }
  const std::size_t n = others.size();
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t pick;
    if (i < n) {
      pick = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(others[i], others[pick]);
      pick = i;
    } else {
      pick = static_cast<std::size_t>(rng.below(n));
    }
    out.emplace_back(others[pick], std::vector<std::string>{}, PromptKind::fallback);
  }
  return out;
}

std::vector<Prompt> generate_compositional_prompts(const AttributeDictionary& dict,
                                                   std::string_view category,
                                                   std::size_t n_attrs) {
  const auto& cat = dict.category(category);
  const std::size_t m = cat.dimensions.size();
  if (n_attrs > m) {
    throw Error("category '" + cat.name + "' has " + std::to_string(m) +
                " dimensions, cannot combine " + std::to_string(n_attrs));
  }
  std::vector<Prompt> out;
  for (auto combo = first_combination(n_attrs);;) {
    std::vector<std::size_t> radix;
    for (auto i : combo) radix.push_back(cat.dimensions[i].values.size());
    std::vector<std::size_t> digits(n_attrs, 0);
    do {
      std::vector<std::string> prims;
      for (std::size_t i = 0; i < n_attrs; ++i) {
        prims.push_back(cat.dimensions[combo[i]].values[digits[i]]);
      }
      out.emplace_back(cat.name, std::move(prims), PromptKind::compositional);
    } while (next_odometer(digits, radix));
    if (!next_combination(combo, m)) break;
  }
  return out;
}

std::vector<Prompt> generate_atomic_prompts(const AttributeDictionary& dict,
                                            std::string_view category) {
  return generate_compositional_prompts(dict, category, 1);
}

}  // namespace attrkit
