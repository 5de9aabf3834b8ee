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

#include "attrkit/toy_task.hpp"

#include <set>

#include "attrkit/error.hpp"

namespace attrkit {

AttributeDictionary toy_dictionary() {
  return AttributeDictionary({
      {"Plane",
       {{"Propulsion type", {"Jet", "Propeller"}},
        {"Number of engines", {"One-engine", "Twin-engine", "Four-engine", "Eight-engine"}},
        {"Wing configuration", {"Straight wing", "Swept wing", "Swept delta wing"}}}},
      {"Ship", {}},
      {"Vehicle", {}},
  });
}

std::size_t toy_feature_dim(const AttributeDictionary& dict, const std::string& category) {
  std::size_t n = 0;
  for (const auto& dim : dict.category(category).dimensions) n += dim.values.size();
  return n;
}

std::vector<InstanceRecord> generate_toy_instances(const AttributeDictionary& dict,
                                                const std::string& category, std::size_t n,
                                                double noise, std::uint64_t seed,
                                                const std::string& id_prefix) {
  const auto& cat = dict.category(category);
  const std::size_t d_in = toy_feature_dim(dict, category);
  if (d_in == 0) throw Error("toy task needs a category with dimensions");
  Rng rng = Rng::substream(seed, "toy-task:" + id_prefix);
  std::vector<InstanceRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    InstanceRecord inst;
    inst.instance_id = id_prefix + "-" + std::to_string(i);
    inst.image_id = id_prefix + "-img-" + std::to_string(i / 4);
    inst.bbox = {static_cast<double>(rng.below(1000)), static_cast<double>(rng.below(1000)),
                 static_cast<double>(8 + rng.below(120)), static_cast<double>(8 + rng.below(120))};
    inst.attributes.proto_tag = cat.name;
    inst.feature.assign(d_in, 0.0);
    std::size_t offset = 0;
    for (const auto& dim : cat.dimensions) {
      const auto pick = static_cast<std::size_t>(rng.below(dim.values.size()));
      inst.attributes.assignments.push_back({dim.key, dim.values[pick]});
      inst.feature[offset + pick] = 1.0;
      offset += dim.values.size();
    }
    for (auto& x : inst.feature) x += rng.normal(0.0, noise);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<TrainingExample> build_training_set(const AttributeDictionary& dict,
                                                const std::vector<InstanceRecord>& instances,
                                                const PromptGenConfig& cfg) {
  std::vector<TrainingExample> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) {
    Rng rng = prompt_stream(cfg.seed, inst.instance_id);
    Prompt pos = generate_positive(inst.attributes, cfg, rng);
    auto negs = generate_negatives(dict, pos, inst.attributes, cfg, rng);
    out.push_back({inst.feature, std::move(pos), std::move(negs)});
  }
  return out;
}

std::vector<std::string> dictionary_tokens(const AttributeDictionary& dict) {
  std::vector<std::string> out;
  std::set<std::string, std::less<>> seen;
  for (const auto& cat : dict.categories()) {
    if (seen.insert(cat.name).second) out.push_back(cat.name);
    for (const auto& dim : cat.dimensions) {
      for (const auto& v : dim.values) {
        if (seen.insert(v).second) out.push_back(v);
      }
    }
  }
  return out;
}

Prompt full_prompt(const AttributeDictionary& dict, const InstanceAttributeSet& inst) {
  std::vector<std::string> prims;
  for (const auto& dim : dict.category(inst.proto_tag).dimensions) {
    for (const auto& a : inst.assignments) {
      if (a.dimension == dim.key) prims.push_back(a.primitive);
    }
  }
  return Prompt(inst.proto_tag, std::move(prims));
}

double counterfactual_ranking_accuracy(const EncoderParams& params,
                                       const AttributeDictionary& dict,
                                       const std::vector<InstanceRecord>& instances) {
  if (instances.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& inst : instances) {
    std::vector<Prompt> candidates{full_prompt(dict, inst.attributes)};
    const auto truth = candidates.front();
    for (std::size_t i = 0; i < truth.primitives().size(); ++i) {
      const auto& prim = truth.primitives()[i];
      for (const auto& rival :
           antagonists(dict, truth.proto_tag(), dimension_of(dict, truth.proto_tag(), prim), prim)) {
        auto swapped = truth.primitives();
        swapped[i] = rival;
        candidates.emplace_back(truth.proto_tag(), std::move(swapped), PromptKind::negative);
      }
    }
    const auto ranked = rank_prompts(params, inst.feature, candidates);
    // Strict: a tie with a counterfactual is not a win.
    if (ranked.front().prompt == truth &&
        (ranked.size() == 1 || ranked[1].similarity < ranked[0].similarity)) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(instances.size());
}

}  // namespace attrkit
