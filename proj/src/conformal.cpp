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

#include "attrkit/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "attrkit/error.hpp"

namespace attrkit {

std::string to_string(const AttributeClass& k) {
  return k.category + "/" + k.dimension + "/" + k.primitive;
}

std::vector<AttributeClass> dictionary_classes(const AttributeDictionary& dict) {
  std::vector<AttributeClass> out;
  for (const auto& cat : dict.categories()) {
    for (const auto& dim : cat.dimensions) {
      for (const auto& v : dim.values) out.push_back({cat.name, dim.key, v});
    }
  }
  return out;
}

const ThresholdEntry* ThresholdTable::find(const AttributeClass& k) const {
  auto it = entries_.find(k);
  return it == entries_.end() ? nullptr : &it->second;
}

const ThresholdEntry& ThresholdTable::at(const AttributeClass& k) const {
  if (const auto* e = find(k)) return *e;
  throw LookupError("no threshold for attribute class '" + to_string(k) + "'");
}

void CalibrationConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must be in (0, 1)");
  if (!(fallback_tau >= 0.0 && fallback_tau <= 1.0)) throw Error("fallback_tau must be in [0, 1]");
}

double nonconformity(double p_hat) {
  if (!(p_hat >= 0.0 && p_hat <= 1.0)) {
    throw Error("probability " + std::to_string(p_hat) + " is outside [0, 1]");
  }
  return 1.0 - p_hat;
}

std::size_t conformal_rank(std::size_t n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("alpha must be in (0, 1)");
  const double target = static_cast<double>(n + 1) * (1.0 - alpha);
  // Absorb representation error in alpha (e.g. 20 * (1 - 0.1)) so an exact
  // integer target is not pushed up by one.
  const double slack = 1e-9 * static_cast<double>(n + 1);
  return static_cast<std::size_t>(std::ceil(target - slack));
}

double conformal_quantile(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw Error("conformal_quantile needs at least one score");
  const std::size_t rank = conformal_rank(scores.size(), alpha);
  if (rank > scores.size()) return 1.0;
  if (rank == 0) return *std::min_element(scores.begin(), scores.end());
  std::vector<double> work(scores.begin(), scores.end());
  auto nth = work.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(work.begin(), nth, work.end());
  return *nth;
}

ThresholdTable calibrate_thresholds(std::span<const CalibrationRecord> records,
                                    const CalibrationConfig& cfg,
                                    std::span<const AttributeClass> registered) {
  cfg.validate();
  std::map<AttributeClass, std::vector<double>> groups;
  for (const auto& r : records) {
    nonconformity(r.p_hat);  // range check
    groups[r.attribute_class].push_back(r.p_hat);
  }
  for (const auto& k : registered) groups.try_emplace(k);

  ThresholdTable::Map entries;
  for (auto& [k, probs] : groups) {
    ThresholdEntry e;
    e.alpha = cfg.alpha;
    e.n_cal = probs.size();
    if (!probs.empty() && probs.size() >= cfg.min_samples) {
      // The rank-th smallest score 1 - p is 1 minus the rank-th largest p;
      // tau is that p itself.
      const std::size_t rank = std::max<std::size_t>(conformal_rank(probs.size(), cfg.alpha), 1);
      if (rank > probs.size()) {
        e.q_hat = 1.0;
        e.tau = 0.0;
      } else {
        auto nth = probs.begin() + static_cast<std::ptrdiff_t>(rank - 1);
        std::nth_element(probs.begin(), nth, probs.end(), std::greater<>());
        e.tau = *nth;
        e.q_hat = nonconformity(*nth);
      }
      e.method = ThresholdMethod::conformal;
    } else {
      e.tau = cfg.fallback_tau;
      e.method = ThresholdMethod::fallback;
    }
    entries.emplace(k, e);
  }
  return ThresholdTable(std::move(entries));
}

std::set<AttributeClass> prediction_set(const ProbVector& probs, const ThresholdTable& table) {
  std::set<AttributeClass> out;
  for (const auto& [k, p] : probs) {
    if (p >= table.at(k).tau) out.insert(k);
  }
  return out;
}

double empirical_coverage(const ThresholdTable& table, std::span<const LabeledProbs> labeled) {
  if (labeled.empty()) throw Error("empirical_coverage needs at least one item");
  std::size_t hits = 0;
  for (const auto& item : labeled) {
    if (prediction_set(item.probs, table).contains(item.truth)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labeled.size());
}

double ScoreLaw::draw(Rng& rng) const {
  switch (kind) {
    case Kind::uniform:
      return rng.uniform();
    case Kind::logit_normal:
      return 1.0 / (1.0 + std::exp(-rng.normal(mu, sigma)));
  }
  return rng.uniform();
}

CoverageReport simulate_coverage(const ScoreLaw& law, double alpha, std::size_t n_cal,
                                 std::size_t n_test, std::size_t trials, std::uint64_t seed) {
  if (n_cal == 0 || n_test == 0 || trials == 0) throw Error("simulation sizes must be positive");
  CoverageReport rep;
  rep.alpha = alpha;
  rep.n_cal = n_cal;
  rep.n_test = n_test;
  rep.trials = trials;
  rep.seed = seed;
  rep.law = law.kind == ScoreLaw::Kind::uniform ? "uniform" : "logit_normal";
  rep.theory_lower = 1.0 - alpha;
  rep.theory_upper = std::min(1.0, 1.0 - alpha + 1.0 / static_cast<double>(n_cal + 1));

  const AttributeClass k{"Synthetic", "Dimension", "Primitive"};
  // Simulations always calibrate; the small-sample fallback is not under test.
  const CalibrationConfig cfg{alpha, 1, 0.2};
  Rng rng = Rng::substream(seed, "simulate-coverage");

  std::vector<CalibrationRecord> cal(n_cal);
  std::vector<LabeledProbs> test(n_test);
  for (auto& r : cal) r.attribute_class = k;
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& r : cal) r.p_hat = law.draw(rng);
    const ThresholdTable table = calibrate_thresholds(cal, cfg);
    for (auto& item : test) {
      item.probs = {{k, law.draw(rng)}};
      item.truth = k;
    }
    rep.per_trial.push_back(empirical_coverage(table, test));
  }

  double sum = 0.0;
  for (double c : rep.per_trial) sum += c;
  rep.mean = sum / static_cast<double>(trials);
  double ss = 0.0;
  for (double c : rep.per_trial) ss += (c - rep.mean) * (c - rep.mean);
  rep.stddev = trials > 1 ? std::sqrt(ss / static_cast<double>(trials - 1)) : 0.0;
  return rep;
}

Json coverage_report_to_json(const CoverageReport& r) {
  Json doc;
  doc["alpha"] = r.alpha;
  doc["n_cal"] = r.n_cal;
  doc["n_test"] = r.n_test;
  doc["trials"] = r.trials;
  doc["seed"] = r.seed;
  doc["law"] = r.law;
  doc["mean_coverage"] = r.mean;
  doc["std_coverage"] = r.stddev;
  doc["theory_lower"] = r.theory_lower;
  doc["theory_upper"] = r.theory_upper;
  doc["per_trial"] = r.per_trial;
  return doc;
}

Json calibration_record_to_json(const CalibrationRecord& r) {
  return Json{{"instance_id", r.instance_id},
              {"category", r.attribute_class.category},
              {"dimension", r.attribute_class.dimension},
              {"primitive", r.attribute_class.primitive},
              {"p_hat", r.p_hat}};
}

CalibrationRecord calibration_record_from_json(const Json& obj, std::size_t line) {
  CalibrationRecord r;
  r.instance_id = require_string(obj, "instance_id", line);
  r.attribute_class.category = require_string(obj, "category", line);
  r.attribute_class.dimension = require_string(obj, "dimension", line);
  r.attribute_class.primitive = require_string(obj, "primitive", line);
  r.p_hat = require_number(obj, "p_hat", line);
  if (!(r.p_hat >= 0.0 && r.p_hat <= 1.0)) throw ParseError(line, "p_hat", "outside [0, 1]");
  return r;
}

std::string serialize_threshold_table(const ThresholdTable& table) {
  std::string out;
  for (const auto& [k, e] : table.entries()) {
    Json rec{{"category", k.category},
             {"dimension", k.dimension},
             {"primitive", k.primitive},
             {"tau", e.tau},
             {"method", e.method == ThresholdMethod::conformal ? "conformal" : "fallback"},
             {"n_cal", e.n_cal},
             {"alpha", e.alpha}};
    if (e.q_hat) rec["q_hat"] = *e.q_hat;
    out += dump_line(rec);
  }
  return out;
}

ThresholdTable parse_threshold_table(std::istream& in) {
  JsonlReader reader(in);
  ThresholdTable::Map entries;
  while (auto line = reader.next_line()) {
    const Json rec = JsonlReader::parse_object(*line);
    const std::size_t n = line->number;
    AttributeClass k{require_string(rec, "category", n), require_string(rec, "dimension", n),
                     require_string(rec, "primitive", n)};
    ThresholdEntry e;
    e.tau = require_number(rec, "tau", n);
    if (!(e.tau >= 0.0 && e.tau <= 1.0)) throw ParseError(n, "tau", "must be in [0, 1]");
    const std::string method = require_string(rec, "method", n);
    if (method == "conformal") {
      e.method = ThresholdMethod::conformal;
    } else if (method == "fallback") {
      e.method = ThresholdMethod::fallback;
    } else {
      throw ParseError(n, "method", "expected 'conformal' or 'fallback'");
    }
    e.n_cal = static_cast<std::size_t>(require_number(rec, "n_cal", n));
    e.alpha = require_number(rec, "alpha", n);
    if (rec.contains("q_hat")) e.q_hat = require_number(rec, "q_hat", n);
    if ((e.method == ThresholdMethod::conformal) != e.q_hat.has_value()) {
      throw ParseError(n, "q_hat", "must be present exactly for conformal entries");
    }
    if (!entries.emplace(std::move(k), e).second) {
      throw ParseError(n, "", "duplicate attribute class");
    }
  }
  return ThresholdTable(std::move(entries));
}

ThresholdTable load_threshold_table(const std::string& path) {
  std::istringstream in(read_file(path));
  return parse_threshold_table(in);
}

}  // namespace attrkit
