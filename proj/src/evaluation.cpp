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

#include "attrkit/evaluation.hpp"

#include <map>

#include "attrkit/prompt.hpp"
#include "attrkit/sacl.hpp"

namespace attrkit {

EvalReport evaluate_prompt_matching(const EncoderParams& params, const AttributeDictionary& dict,
                                    std::span<const InstanceRecord> benchmark, EvalMode mode,
                                    std::size_t n_attrs) {
  EvalReport report;
  report.mode = mode;
  report.n_attrs = mode == EvalMode::atomic ? 1 : n_attrs;
  report.instances = benchmark.size();

  struct GroupPrompts {
    std::size_t group;
    std::vector<Prompt> prompts;
  };
  // Per category: the candidate prompt set of each dimension combination.
  std::map<std::string, std::vector<GroupPrompts>, std::less<>> by_category;
  auto groups_for = [&](const std::string& category) -> std::vector<GroupPrompts>& {
    auto it = by_category.find(category);
    if (it != by_category.end()) return it->second;
    std::vector<GroupPrompts> built;
    const auto& cat = dict.category(category);
    if (report.n_attrs <= cat.dimensions.size()) {
      std::map<std::vector<std::string>, std::size_t> index;
      for (auto& p : generate_compositional_prompts(dict, category, report.n_attrs)) {
        std::vector<std::string> dims;
        for (const auto& prim : p.primitives()) dims.push_back(dimension_of(dict, category, prim));
        auto [pos, fresh] = index.emplace(dims, built.size());
        if (fresh) {
          report.groups.push_back({category, dims, 0, 0, 0});
          built.push_back({report.groups.size() - 1, {}});
        }
        built[pos->second].prompts.push_back(std::move(p));
      }
      for (auto& g : built) report.groups[g.group].candidates = g.prompts.size();
    }
    return by_category.emplace(category, std::move(built)).first->second;
  };

  for (const auto& inst : benchmark) {
    const auto& category = inst.attributes.proto_tag;
    for (auto& g : groups_for(category)) {
      std::vector<std::string> truth;
      for (const auto& key : report.groups[g.group].dimensions) {
        for (const auto& a : inst.attributes.assignments) {
          if (a.dimension == key) truth.push_back(a.primitive);
        }
      }
      if (truth.size() != report.groups[g.group].dimensions.size()) continue;
      const Prompt expected(category, truth);
      const auto ranked = rank_prompts(params, inst.feature, g.prompts);
      auto& group = report.groups[g.group];
      ++group.evaluated;
      if (ranked.front().prompt == expected &&
          (ranked.size() == 1 || ranked[1].similarity < ranked[0].similarity)) {
        ++group.correct;
      }
    }
  }

  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& g : report.groups) {
    if (g.evaluated) {
      sum += g.accuracy();
      ++used;
    }
  }
  report.mean_accuracy = used ? sum / static_cast<double>(used) : 0.0;
  return report;
}

Json eval_report_to_json(const EvalReport& r) {
  Json doc;
  doc["mode"] = r.mode == EvalMode::atomic ? "atomic" : "compositional";
  doc["n_attrs"] = r.n_attrs;
  doc["instances"] = r.instances;
  Json groups = Json::array();
  for (const auto& g : r.groups) {
    groups.push_back(Json{{"category", g.category},
                          {"dimensions", g.dimensions},
                          {"candidates", g.candidates},
                          {"evaluated", g.evaluated},
                          {"correct", g.correct},
                          {"accuracy", g.accuracy()}});
  }
  doc["groups"] = std::move(groups);
  doc["mean_accuracy"] = r.mean_accuracy;
  return doc;
}

}  // namespace attrkit
