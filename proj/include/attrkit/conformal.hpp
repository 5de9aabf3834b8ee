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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "attrkit/dictionary.hpp"
#include "attrkit/jsonl.hpp"
#include "attrkit/random.hpp"

namespace attrkit {

struct AttributeClass {
  std::string category;
  std::string dimension;
  std::string primitive;

  friend auto operator<=>(const AttributeClass&, const AttributeClass&) = default;
  friend bool operator==(const AttributeClass&, const AttributeClass&) = default;
};

std::string to_string(const AttributeClass& k);

// Every (category, dimension, primitive) of the dictionary, in dictionary
// order.
std::vector<AttributeClass> dictionary_classes(const AttributeDictionary& dict);

struct CalibrationRecord {
  std::string instance_id;
  AttributeClass attribute_class;
  double p_hat = 0.0;  // probability assigned to the ground-truth class
};

enum class ThresholdMethod { conformal, fallback };

struct ThresholdEntry {
  double tau = 0.0;
  ThresholdMethod method = ThresholdMethod::fallback;
  std::size_t n_cal = 0;
  double alpha = 0.1;
  std::optional<double> q_hat;  // present iff method == conformal
};

// Per-class acceptance thresholds. Immutable once built.
class ThresholdTable {
 public:
  using Map = std::map<AttributeClass, ThresholdEntry>;

  ThresholdTable() = default;
  explicit ThresholdTable(Map entries) : entries_(std::move(entries)) {}

  const Map& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const ThresholdEntry* find(const AttributeClass& k) const;
  // Throws LookupError naming the class.
  const ThresholdEntry& at(const AttributeClass& k) const;

 private:
  Map entries_;
};

struct CalibrationConfig {
  double alpha = 0.1;
  std::size_t min_samples = 10;
  double fallback_tau = 0.2;

  void validate() const;
};

// 1 - p_hat; throws Error unless p_hat is in [0, 1].
double nonconformity(double p_hat);

// ceil((n + 1)(1 - alpha)), the 1-based rank of the conformal quantile.
std::size_t conformal_rank(std::size_t n, double alpha);

// The conformal_rank-th smallest score, or 1 when that rank exceeds n.
// Uses selection, not a full sort. Throws Error on an empty list or alpha
// outside (0, 1).
double conformal_quantile(std::span<const double> scores, double alpha);

// Class-wise split conformal thresholds. Classes with at least min_samples
// records get tau = 1 - q_hat; sparser classes, and `registered` classes
// with no records at all, get the fixed fallback threshold.
ThresholdTable calibrate_thresholds(std::span<const CalibrationRecord> records,
                                    const CalibrationConfig& cfg,
                                    std::span<const AttributeClass> registered = {});

using ProbVector = std::map<AttributeClass, double>;

// Classes whose probability meets their threshold (inclusive). Throws
// LookupError for a class missing from the table.
std::set<AttributeClass> prediction_set(const ProbVector& probs, const ThresholdTable& table);

struct LabeledProbs {
  ProbVector probs;
  AttributeClass truth;
};

// Fraction of items whose true class lands in the prediction set.
double empirical_coverage(const ThresholdTable& table, std::span<const LabeledProbs> labeled);

// Law of the ground-truth probability p_hat in coverage simulations. Both
// are continuous, so ties have probability zero.
struct ScoreLaw {
  enum class Kind { uniform, logit_normal };
  Kind kind = Kind::uniform;
  double mu = 1.5;     // logit_normal only
  double sigma = 1.0;  // logit_normal only

  double draw(Rng& rng) const;
};

struct CoverageReport {
  double alpha = 0.0;
  std::size_t n_cal = 0;
  std::size_t n_test = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::string law;
  double mean = 0.0;
  double stddev = 0.0;
  double theory_lower = 0.0;  // 1 - alpha
  double theory_upper = 0.0;  // 1 - alpha + 1/(n_cal + 1)
  std::vector<double> per_trial;
};

// Monte Carlo check of marginal coverage: each trial draws i.i.d.
// calibration and test probabilities from `law`, calibrates one class and
// measures test coverage.
CoverageReport simulate_coverage(const ScoreLaw& law, double alpha, std::size_t n_cal,
                                 std::size_t n_test, std::size_t trials, std::uint64_t seed);

Json coverage_report_to_json(const CoverageReport& report);

// Line formats.
Json calibration_record_to_json(const CalibrationRecord& r);
CalibrationRecord calibration_record_from_json(const Json& obj, std::size_t line);

std::string serialize_threshold_table(const ThresholdTable& table);
ThresholdTable parse_threshold_table(std::istream& in);
ThresholdTable load_threshold_table(const std::string& path);

}  // namespace attrkit
