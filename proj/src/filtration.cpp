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

#include "attrkit/filtration.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <unordered_map>

#include "attrkit/error.hpp"
#include "attrkit/sacl.hpp"

namespace attrkit {

namespace {

Json bbox_json(const BoundingBox& b) { return Json::array({b[0], b[1], b[2], b[3]}); }

void check_probs(const Vec& probs, const Dimension& dim, std::size_t line) {
  if (probs.size() != dim.values.size()) {
    throw ParseError(line, "dimension_probs",
                     "dimension '" + dim.key + "' expects " + std::to_string(dim.values.size()) +
                         " probabilities, got " + std::to_string(probs.size()));
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ParseError(line, "dimension_probs", "probability outside [0, 1] in '" + dim.key + "'");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
    throw ParseError(line, "dimension_probs", "probabilities of '" + dim.key + "' do not sum to 1");
  }
}

}  // namespace

Json candidate_to_json(const CandidateAnnotation& c) {
  Json rec;
  rec["instance_id"] = c.instance_id;
  rec["image_id"] = c.image_id;
  rec["bbox"] = bbox_json(c.bbox);
  rec["category"] = c.category;
  Json probs = Json::object();
  for (const auto& dp : c.dimension_probs) probs[dp.dimension] = dp.probs;
  rec["dimension_probs"] = std::move(probs);
  return rec;
}

CandidateAnnotation candidate_from_json(const Json& obj, std::size_t line,
                                        const AttributeDictionary& dict) {
  CandidateAnnotation c;
  c.instance_id = require_string(obj, "instance_id", line);
  c.image_id = require_string(obj, "image_id", line);
  c.bbox = parse_bbox(obj, line);
  c.category = require_string(obj, "category", line);
  if (!dict.has_category(c.category)) {
    throw ParseError(line, "category", "unknown category '" + c.category + "'");
  }
  for (const auto& [key, value] : require_object(obj, "dimension_probs", line).items()) {
    if (!dict.has_dimension(c.category, key)) {
      throw ParseError(line, "dimension_probs", "unknown dimension '" + key + "'");
    }
    DimensionProbs dp;
    dp.dimension = key;
    if (!value.is_array()) throw ParseError(line, "dimension_probs", "expected arrays");
    for (const auto& p : value) {
      if (!p.is_number()) throw ParseError(line, "dimension_probs", "expected numbers");
      dp.probs.push_back(p.get<double>());
    }
    check_probs(dp.probs, dict.dimension(c.category, key), line);
    c.dimension_probs.push_back(std::move(dp));
  }
  return c;
}

Json filtered_to_json(const FilteredAnnotation& f) {
  Json rec;
  rec["instance_id"] = f.instance_id;
  rec["image_id"] = f.image_id;
  rec["bbox"] = bbox_json(f.bbox);
  rec["category"] = f.category;
  Json attrs = Json::object();
  for (const auto& a : f.attributes) attrs[a.dimension] = a.primitive;
  rec["attributes"] = std::move(attrs);
  if (!f.passing.empty()) {
    Json passing = Json::object();
    for (const auto& p : f.passing) passing[p.dimension] = p.primitives;
    rec["passing"] = std::move(passing);
  }
  return rec;
}

FilteredAnnotation filtered_from_json(const Json& obj, std::size_t line,
                                      const AttributeDictionary& dict) {
  FilteredAnnotation f;
  f.instance_id = require_string(obj, "instance_id", line);
  f.image_id = require_string(obj, "image_id", line);
  f.bbox = parse_bbox(obj, line);
  f.category = require_string(obj, "category", line);
  for (const auto& [key, value] : require_object(obj, "attributes", line).items()) {
    if (!value.is_string()) throw ParseError(line, "attributes", "expected string values");
    f.attributes.push_back({key, value.get<std::string>()});
  }
  if (obj.contains("passing")) {
    for (const auto& [key, value] : require_object(obj, "passing", line).items()) {
      PassingSet p;
      p.dimension = key;
      if (!value.is_array()) throw ParseError(line, "passing", "expected arrays");
      for (const auto& v : value) {
        if (!v.is_string()) throw ParseError(line, "passing", "expected strings");
        p.primitives.push_back(v.get<std::string>());
      }
      f.passing.push_back(std::move(p));
    }
  }
  const auto problems = validate_instance(dict, {f.category, f.attributes});
  if (!problems.empty()) throw ParseError(line, "attributes", problems.front().message);
  return f;
}

RecordStream<CandidateAnnotation> ingest_candidates(std::unique_ptr<std::istream> in,
                                                    const AttributeDictionary& dict, bool strict) {
  return RecordStream<CandidateAnnotation>(
      std::move(in),
      [&dict](const Json& obj, std::size_t line) { return candidate_from_json(obj, line, dict); },
      strict);
}

RecordStream<CalibrationRecord> ingest_calibration(std::unique_ptr<std::istream> in,
                                                   const AttributeDictionary* dict, bool strict) {
  return RecordStream<CalibrationRecord>(
      std::move(in),
      [dict](const Json& obj, std::size_t line) {
        auto r = calibration_record_from_json(obj, line);
        if (dict) {
          const auto& k = r.attribute_class;
          if (!dict->has_dimension(k.category, k.dimension) ||
              dict->owner_index(k.category, k.primitive) !=
                  dict->dimension_index(k.category, k.dimension)) {
            throw ParseError(line, "primitive", "unknown attribute class '" + to_string(k) + "'");
          }
        }
        return r;
      },
      strict);
}

RecordStream<FilteredAnnotation> ingest_filtered(std::unique_ptr<std::istream> in,
                                                 const AttributeDictionary& dict, bool strict) {
  return RecordStream<FilteredAnnotation>(
      std::move(in),
      [&dict](const Json& obj, std::size_t line) { return filtered_from_json(obj, line, dict); },
      strict);
}

void PipelineStats::merge(const PipelineStats& o) {
  image_ids.insert(o.image_ids.begin(), o.image_ids.end());
  instances += o.instances;
  attributes += o.attributes;
  multi_pass_count += o.multi_pass_count;
  for (const auto& [c, n] : o.category_instances) category_instances[c] += n;
  for (const auto& [k, s] : o.per_class) {
    auto& mine = per_class[k];
    mine.passed += s.passed;
    mine.retained += s.retained;
    mine.true_count += s.true_count;
    mine.true_retained += s.true_retained;
    mine.false_retained += s.false_retained;
  }
  has_ground_truth = has_ground_truth || o.has_ground_truth;
  diagnostics.insert(diagnostics.end(), o.diagnostics.begin(), o.diagnostics.end());
}

void PipelineStats::count(const FilteredAnnotation& f) {
  image_ids.insert(f.image_id);
  ++instances;
  ++category_instances[f.category];
  attributes += f.attributes.size();
  for (const auto& a : f.attributes) ++per_class[{f.category, a.dimension, a.primitive}].retained;
}

Json stats_to_json(const PipelineStats& s) {
  Json doc;
  doc["images"] = s.images();
  doc["instances"] = s.instances;
  doc["attributes"] = s.attributes;
  doc["multi_pass_count"] = s.multi_pass_count;
  Json per_class = Json::array();
  std::size_t judged = 0;
  std::size_t false_total = 0;
  for (const auto& [k, c] : s.per_class) {
    Json e;
    e["category"] = k.category;
    e["dimension"] = k.dimension;
    e["primitive"] = k.primitive;
    e["passed"] = c.passed;
    e["retained"] = c.retained;
    auto it = s.category_instances.find(k.category);
    const std::size_t denom = it == s.category_instances.end() ? 0 : it->second;
    e["retention_rate"] = denom ? static_cast<double>(c.retained) / static_cast<double>(denom) : 0.0;
    if (s.has_ground_truth) {
      e["true_count"] = c.true_count;
      e["true_retained"] = c.true_retained;
      e["false_retained"] = c.false_retained;
      if (c.true_count) {
        e["coverage"] = static_cast<double>(c.true_retained) / static_cast<double>(c.true_count);
      }
      const std::size_t j = c.true_retained + c.false_retained;
      if (j) e["fdr"] = static_cast<double>(c.false_retained) / static_cast<double>(j);
      judged += j;
      false_total += c.false_retained;
    }
    per_class.push_back(std::move(e));
  }
  doc["per_class"] = std::move(per_class);
  if (s.has_ground_truth) {
    doc["fdr"] = judged ? static_cast<double>(false_total) / static_cast<double>(judged) : 0.0;
  }
  if (!s.diagnostics.empty()) doc["diagnostics"] = s.diagnostics;
  return doc;
}

ScoringInput scoring_input(const InstanceRecord& r) {
  return {r.instance_id, r.image_id, r.bbox, r.attributes.proto_tag, r.feature};
}

std::vector<CandidateAnnotation> score_candidates(const EncoderParams& params,
                                                  const AttributeDictionary& dict,
                                                  std::span<const ScoringInput> instances) {
  std::vector<CandidateAnnotation> out;
  out.reserve(instances.size());
  for (const auto& in : instances) {
    const std::string ctx = "instance '" + in.instance_id + "': ";
    try {
      CandidateAnnotation c{in.instance_id, in.image_id, in.bbox, in.category, {}};
      for (const auto& dim : dict.category(in.category).dimensions) {
        c.dimension_probs.push_back(
            {dim.key, attribute_probabilities(params, in.feature, dict, in.category, dim.key)});
      }
      out.push_back(std::move(c));
    } catch (const LookupError& e) {
      throw LookupError(ctx + e.what());
    } catch (const NumericError& e) {
      throw NumericError(ctx + e.what());
    } catch (const Error& e) {
      throw Error(ctx + e.what());
    }
  }
  return out;
}

AnnotationFilter::AnnotationFilter(const AttributeDictionary& dict, const ThresholdTable& table,
                                   FilterOptions options)
    : dict_(dict), table_(table), options_(options) {}

FilteredAnnotation AnnotationFilter::process(const CandidateAnnotation& c) {
  FilteredAnnotation f{c.instance_id, c.image_id, c.bbox, c.category, {}, {}};
  for (const auto& dp : c.dimension_probs) {
    const auto& dim = dict_.dimension(c.category, dp.dimension);
    if (dp.probs.size() != dim.values.size()) {
      throw Error("instance '" + c.instance_id + "': dimension '" + dp.dimension +
                  "' has the wrong number of probabilities");
    }
    std::size_t best = dim.values.size();
    std::size_t passed = 0;
    PassingSet passing{dp.dimension, {}};
    for (std::size_t i = 0; i < dim.values.size(); ++i) {
      const AttributeClass k{c.category, dp.dimension, dim.values[i]};
      if (dp.probs[i] >= table_.at(k).tau) {
        ++passed;
        ++stats_.per_class[k].passed;
        if (options_.keep_passing_sets) passing.primitives.push_back(dim.values[i]);
        if (best == dim.values.size() || dp.probs[i] > dp.probs[best]) best = i;
      }
    }
    if (passed > 1) ++stats_.multi_pass_count;
    if (best < dim.values.size()) f.attributes.push_back({dp.dimension, dim.values[best]});
    if (options_.keep_passing_sets && passed) f.passing.push_back(std::move(passing));
  }
  stats_.count(f);
  return f;
}

FilterResult filter_annotations(std::span<const CandidateAnnotation> candidates,
                                const AttributeDictionary& dict, const ThresholdTable& table,
                                FilterOptions options, std::size_t jobs) {
  FilterResult result;
  result.filtered.resize(candidates.size());
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, candidates.size()));
  const std::size_t shard = (candidates.size() + jobs - 1) / jobs;

  std::vector<AnnotationFilter> filters;
  filters.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) filters.emplace_back(dict, table, options);
  std::vector<std::exception_ptr> errors(jobs);

  auto run = [&](std::size_t w) {
    try {
      const std::size_t begin = std::min(candidates.size(), w * shard);
      const std::size_t end = std::min(candidates.size(), begin + shard);
      for (std::size_t i = begin; i < end; ++i) result.filtered[i] = filters[w].process(candidates[i]);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  if (jobs == 1) {
    run(0);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) workers.emplace_back(run, w);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (const auto& f : filters) result.stats.merge(f.stats());
  return result;
}

void evaluate_against(PipelineStats& stats, std::span<const FilteredAnnotation> filtered,
                      std::span<const FilteredAnnotation> ground_truth) {
  stats.has_ground_truth = true;
  std::unordered_map<std::string, const FilteredAnnotation*> truth;
  for (const auto& g : ground_truth) {
    if (!truth.emplace(g.instance_id, &g).second) {
      stats.diagnostics.push_back("duplicate ground-truth instance '" + g.instance_id + "'");
    }
  }
  std::unordered_map<std::string, bool> seen;
  for (const auto& f : filtered) {
    auto it = truth.find(f.instance_id);
    if (it == truth.end()) {
      stats.diagnostics.push_back("no ground truth for instance '" + f.instance_id + "'");
      continue;
    }
    seen[f.instance_id] = true;
    const FilteredAnnotation& g = *it->second;
    for (const auto& t : g.attributes) {
      ++stats.per_class[{g.category, t.dimension, t.primitive}].true_count;
    }
    for (const auto& a : f.attributes) {
      auto match = std::find_if(g.attributes.begin(), g.attributes.end(),
                                [&](const Assignment& t) { return t.dimension == a.dimension; });
      if (match == g.attributes.end()) continue;
      auto& cs = stats.per_class[{f.category, a.dimension, a.primitive}];
      if (match->primitive == a.primitive) {
        ++cs.true_retained;
      } else {
        ++cs.false_retained;
      }
    }
  }
  for (const auto& g : ground_truth) {
    if (!seen.contains(g.instance_id)) {
      stats.diagnostics.push_back("ground-truth instance '" + g.instance_id + "' was not filtered");
    }
  }
}

PipelineStats dataset_stats(std::span<const FilteredAnnotation> filtered,
                            std::optional<std::span<const FilteredAnnotation>> ground_truth) {
  PipelineStats stats;
  for (const auto& f : filtered) stats.count(f);
  if (ground_truth) evaluate_against(stats, filtered, *ground_truth);
  return stats;
}

std::string serialize_filtered(std::span<const FilteredAnnotation> filtered) {
  std::string out;
  for (const auto& f : filtered) out += dump_line(filtered_to_json(f));
  return out;
}

std::string serialize_stats(const PipelineStats& stats) { return stats_to_json(stats).dump(2) + "\n"; }

void export_dataset(std::span<const FilteredAnnotation> filtered, const PipelineStats& stats,
                    const std::string& annotations_path, const std::string& stats_path) {
  write_file_atomic(annotations_path, serialize_filtered(filtered));
  write_file_atomic(stats_path, serialize_stats(stats));
}

}  // namespace attrkit
