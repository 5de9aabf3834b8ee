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
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attrkit/conformal.hpp"
#include "attrkit/dictionary.hpp"
#include "attrkit/encoder.hpp"
#include "attrkit/instance.hpp"
#include "attrkit/record_stream.hpp"

namespace attrkit {

struct DimensionProbs {
  std::string dimension;
  Vec probs;  // dictionary order of the dimension's primitives

  friend bool operator==(const DimensionProbs&, const DimensionProbs&) = default;
};

// A detected object with per-dimension attribute probabilities.
struct CandidateAnnotation {
  std::string instance_id;
  std::string image_id;
  BoundingBox bbox{};
  std::string category;
  std::vector<DimensionProbs> dimension_probs;

  friend bool operator==(const CandidateAnnotation&, const CandidateAnnotation&) = default;
};

struct PassingSet {
  std::string dimension;
  std::vector<std::string> primitives;

  friend bool operator==(const PassingSet&, const PassingSet&) = default;
};

// A filtered object: at most one retained primitive per dimension.
struct FilteredAnnotation {
  std::string instance_id;
  std::string image_id;
  BoundingBox bbox{};
  std::string category;
  std::vector<Assignment> attributes;
  // Raw prediction sets before exclusivity, only when requested.
  std::vector<PassingSet> passing;

  friend bool operator==(const FilteredAnnotation&, const FilteredAnnotation&) = default;
};

// Probability vectors must sum to 1 within this tolerance.
inline constexpr double kProbabilitySumTolerance = 1e-9;

Json candidate_to_json(const CandidateAnnotation& c);
CandidateAnnotation candidate_from_json(const Json& obj, std::size_t line,
                                        const AttributeDictionary& dict);
Json filtered_to_json(const FilteredAnnotation& f);
FilteredAnnotation filtered_from_json(const Json& obj, std::size_t line,
                                      const AttributeDictionary& dict);

RecordStream<CandidateAnnotation> ingest_candidates(std::unique_ptr<std::istream> in,
                                                    const AttributeDictionary& dict,
                                                    bool strict = false);
RecordStream<CalibrationRecord> ingest_calibration(std::unique_ptr<std::istream> in,
                                                   const AttributeDictionary* dict,
                                                   bool strict = false);
RecordStream<FilteredAnnotation> ingest_filtered(std::unique_ptr<std::istream> in,
                                                 const AttributeDictionary& dict,
                                                 bool strict = false);

struct ClassStats {
  std::size_t passed = 0;    // in the prediction set
  std::size_t retained = 0;  // kept after exclusivity
  // Filled only when ground truth is supplied.
  std::size_t true_count = 0;
  std::size_t true_retained = 0;
  std::size_t false_retained = 0;
};

// Dataset counts. Every field merges by addition (images by set union), so
// stats of shards combine into the stats of their concatenation in any
// order.
struct PipelineStats {
  std::set<std::string> image_ids;
  std::size_t instances = 0;
  std::size_t attributes = 0;
  std::size_t multi_pass_count = 0;
  std::map<std::string, std::size_t> category_instances;
  std::map<AttributeClass, ClassStats> per_class;
  bool has_ground_truth = false;
  std::vector<std::string> diagnostics;

  std::size_t images() const noexcept { return image_ids.size(); }
  void merge(const PipelineStats& other);
  void count(const FilteredAnnotation& f);
};

Json stats_to_json(const PipelineStats& stats);

struct ScoringInput {
  std::string instance_id;
  std::string image_id;
  BoundingBox bbox{};
  std::string category;
  Vec feature;
};

ScoringInput scoring_input(const InstanceRecord& r);

// Fills probabilities for every dimension of each instance's category.
std::vector<CandidateAnnotation> score_candidates(const EncoderParams& params,
                                                  const AttributeDictionary& dict,
                                                  std::span<const ScoringInput> instances);

struct FilterOptions {
  bool keep_passing_sets = false;
};

// Streaming filter: applies per-class thresholds to each candidate,
// retains the most probable passing primitive per dimension (ties go to
// dictionary order) and accumulates stats. Instances are never dropped.
class AnnotationFilter {
 public:
  AnnotationFilter(const AttributeDictionary& dict, const ThresholdTable& table,
                   FilterOptions options = {});

  // Throws LookupError when a threshold entry is missing.
  FilteredAnnotation process(const CandidateAnnotation& candidate);

  const PipelineStats& stats() const noexcept { return stats_; }

 private:
  const AttributeDictionary& dict_;
  const ThresholdTable& table_;
  FilterOptions options_;
  PipelineStats stats_;
};

struct FilterResult {
  std::vector<FilteredAnnotation> filtered;
  PipelineStats stats;
};

// Shards the input over `jobs` workers; output order and stats do not
// depend on `jobs`.
FilterResult filter_annotations(std::span<const CandidateAnnotation> candidates,
                                const AttributeDictionary& dict, const ThresholdTable& table,
                                FilterOptions options = {}, std::size_t jobs = 1);

// Adds ground-truth agreement (per-class true/false retention) to `stats`.
// Records are joined by instance_id; unmatched ids become diagnostics.
void evaluate_against(PipelineStats& stats, std::span<const FilteredAnnotation> filtered,
                      std::span<const FilteredAnnotation> ground_truth);

PipelineStats dataset_stats(std::span<const FilteredAnnotation> filtered,
                            std::optional<std::span<const FilteredAnnotation>> ground_truth = {});

std::string serialize_filtered(std::span<const FilteredAnnotation> filtered);
std::string serialize_stats(const PipelineStats& stats);

// Writes the annotation lines and the stats document, each atomically.
void export_dataset(std::span<const FilteredAnnotation> filtered, const PipelineStats& stats,
                    const std::string& annotations_path, const std::string& stats_path);

}  // namespace attrkit
