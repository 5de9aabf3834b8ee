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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "attrkit/error.hpp"
#include "attrkit/filtration.hpp"
#include "attrkit/toy_task.hpp"
#include "support/oracles.hpp"

using namespace attrkit;

namespace {

AttributeDictionary engines() {
  return AttributeDictionary(
      {{"Plane",
        {{"Number of engines", {"One-engine", "Twin-engine", "Four-engine"}},
         {"Propulsion type", {"Jet", "Propeller"}}}},
       {"Ship", {}}});
}

ThresholdTable flat_table(const AttributeDictionary& dict, double tau) {
  ThresholdTable::Map m;
  for (const auto& k : dictionary_classes(dict)) {
    m[k] = ThresholdEntry{tau, ThresholdMethod::conformal, 50, 0.1, 1.0 - tau};
  }
  return ThresholdTable(m);
}

Vec random_simplex(Rng& rng, std::size_t n) {
  Vec v(n);
  double s = 0.0;
  for (auto& x : v) {
    x = -std::log(1.0 - rng.uniform());
    s += x;
  }
  for (auto& x : v) x /= s;
  return v;
}

std::vector<CandidateAnnotation> random_candidates(const AttributeDictionary& dict, Rng& rng,
                                                   std::size_t n) {
  std::vector<CandidateAnnotation> out;
  for (std::size_t i = 0; i < n; ++i) {
    CandidateAnnotation c;
    c.instance_id = "c" + std::to_string(i);
    c.image_id = "img" + std::to_string(i / 3);
    c.bbox = {rng.uniform() * 100, rng.uniform() * 100, 1 + rng.uniform() * 50, 1 + rng.uniform() * 50};
    c.category = rng.below(5) == 0 ? "Ship" : "Plane";
    for (const auto& d : dict.category(c.category).dimensions) {
      if (rng.below(6) == 0) continue;  // some dimensions unscored
      c.dimension_probs.push_back({d.key, random_simplex(rng, d.values.size())});
    }
    out.push_back(c);
  }
  return out;
}

std::vector<CalibrationRecord> random_calibration(const AttributeDictionary& dict, Rng& rng) {
  std::vector<CalibrationRecord> out;
  for (const auto& k : dictionary_classes(dict)) {
    for (int i = 0; i < 40; ++i) out.push_back({"r", k, std::pow(rng.uniform(), 0.3)});
  }
  return out;
}

double prob_of(const CandidateAnnotation& c, const AttributeDictionary& dict, const Assignment& a) {
  const auto& dim = dict.dimension(c.category, a.dimension);
  for (const auto& dp : c.dimension_probs) {
    if (dp.dimension != a.dimension) continue;
    const auto i = std::find(dim.values.begin(), dim.values.end(), a.primitive) - dim.values.begin();
    return dp.probs[static_cast<std::size_t>(i)];
  }
  return -1.0;
}

}  // namespace

TEST_CASE("candidate records round-trip and are validated") {
  const auto dict = engines();
  const CandidateAnnotation c{"a1", "img1", {1, 2, 3, 4}, "Plane",
                              {{"Number of engines", {0.3, 0.15, 0.55}}, {"Propulsion type", {0.25, 0.75}}}};
  CHECK(candidate_from_json(candidate_to_json(c), 1, dict) == c);

  auto j = candidate_to_json(c);
  j["dimension_probs"]["Propulsion type"] = Json::array({0.5, 0.6});
  CHECK_THROWS_AS(candidate_from_json(j, 1, dict), Error);
  j["dimension_probs"]["Propulsion type"] = Json::array({1.0});
  CHECK_THROWS_AS(candidate_from_json(j, 1, dict), Error);
  j["dimension_probs"]["Propulsion type"] = Json::array({1.5, -0.5});
  CHECK_THROWS_AS(candidate_from_json(j, 1, dict), Error);
  j = candidate_to_json(c);
  j["dimension_probs"]["Colour"] = Json::array({1.0});
  CHECK_THROWS_AS(candidate_from_json(j, 1, dict), Error);
  j = candidate_to_json(c);
  j["category"] = "Boat";
  CHECK_THROWS_AS(candidate_from_json(j, 1, dict), Error);
  j = candidate_to_json(c);
  j["bbox"] = Json::array({1, 2, 3});
  CHECK_THROWS_AS(candidate_from_json(j, 1, dict), ParseError);
}

TEST_CASE("ingestion counts malformed lines") {
  const auto dict = engines();
  auto empty = ingest_candidates(text_input(""), dict);
  CHECK(empty.drain().empty());
  CHECK(empty.diagnostics().empty());

  const CandidateAnnotation c{"a", "i", {0, 0, 1, 1}, "Plane", {{"Propulsion type", {0.5, 0.5}}}};
  std::string text;
  for (int i = 0; i < 3; ++i) {
    auto cc = c;
    cc.instance_id += std::to_string(i);
    text += dump_line(candidate_to_json(cc));
    if (i == 1) text += "{\"instance_id\": 3,\n";
  }
  auto s = ingest_candidates(text_input(text), dict);
  CHECK(s.drain().size() == 3);
  REQUIRE(s.diagnostics().size() == 1);
  CHECK(s.diagnostics()[0].line == 3);
  auto strict = ingest_candidates(text_input(text), dict, true);
  CHECK_THROWS_AS(strict.drain(), ParseError);
}

TEST_CASE("componentwise thresholds and argmax retention") {
  const auto dict = engines();
  const auto table = flat_table(dict, 0.10);
  AnnotationFilter filter(dict, table, FilterOptions{true});
  const CandidateAnnotation c{"a", "i", {0, 0, 1, 1}, "Plane", {{"Number of engines", {0.3, 0.15, 0.05}}}};
  // Not a valid candidate (sums to 0.5) but the filter itself only compares.
  const auto f = filter.process(c);
  REQUIRE(f.passing.size() == 1);
  CHECK(f.passing[0].primitives == std::vector<std::string>{"One-engine", "Twin-engine"});
  REQUIRE(f.attributes.size() == 1);
  CHECK(f.attributes[0] == Assignment{"Number of engines", "One-engine"});
  CHECK(filter.stats().multi_pass_count == 1);
  CHECK(filter.stats().per_class.at({"Plane", "Number of engines", "Twin-engine"}).passed == 1);
  CHECK(filter.stats().per_class.at({"Plane", "Number of engines", "Twin-engine"}).retained == 0);
}

TEST_CASE("ties go to dictionary order") {
  const auto dict = engines();
  const auto table = flat_table(dict, 0.10);
  AnnotationFilter filter(dict, table);
  const auto f = filter.process({"a", "i", {0, 0, 1, 1}, "Plane", {{"Number of engines", {0.2, 0.4, 0.4}}}});
  CHECK(f.attributes[0].primitive == "Twin-engine");
  CHECK(f.passing.empty());
}

TEST_CASE("reject-all thresholds keep instances but no attributes") {
  const auto dict = engines();
  Rng rng(1);
  const auto cands = random_candidates(dict, rng, 50);
  const auto res = filter_annotations(cands, dict, flat_table(dict, 1.0));
  CHECK(res.filtered.size() == 50);
  CHECK(res.stats.instances == 50);
  CHECK(res.stats.attributes == 0);
  for (const auto& f : res.filtered) CHECK(f.attributes.empty());
}

TEST_CASE("missing threshold entries name the class") {
  const auto dict = engines();
  const ThresholdTable empty;
  AnnotationFilter filter(dict, empty);
  try {
    filter.process({"a", "i", {0, 0, 1, 1}, "Plane", {{"Propulsion type", {0.5, 0.5}}}});
    FAIL("expected LookupError");
  } catch (const LookupError& e) {
    CHECK(std::string(e.what()).find("Plane/Propulsion type/Jet") != std::string::npos);
  }
}

TEST_CASE("filtration invariants on random candidates") {
  const auto dict = engines();
  Rng rng(2024);
  const auto cands = random_candidates(dict, rng, 600);
  const auto table = calibrate_thresholds(random_calibration(dict, rng), CalibrationConfig{});
  const auto whole = filter_annotations(cands, dict, table);

  std::size_t dims_total = 0;
  REQUIRE(whole.filtered.size() == cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& f = whole.filtered[i];
    const auto& c = cands[i];
    CHECK(f.instance_id == c.instance_id);
    CHECK(f.bbox == c.bbox);
    CHECK(validate_instance(dict, {f.category, f.attributes}).empty());  // exclusivity
    for (const auto& a : f.attributes) {
      CHECK(prob_of(c, dict, a) >= table.at({c.category, a.dimension, a.primitive}).tau);
    }
    dims_total += dict.category(c.category).dimensions.size();
  }
  CHECK(whole.stats.instances == cands.size());
  CHECK(whole.stats.attributes <= dims_total);

  // Sharded passes and threaded passes match the single pass.
  PipelineStats merged;
  std::vector<FilteredAnnotation> concat;
  for (std::size_t start = 0; start < cands.size(); start += 97) {
    const std::size_t len = std::min<std::size_t>(97, cands.size() - start);
    auto part = filter_annotations(std::span(cands).subspan(start, len), dict, table);
    concat.insert(concat.end(), part.filtered.begin(), part.filtered.end());
    merged.merge(part.stats);
  }
  CHECK(concat == whole.filtered);
  CHECK(serialize_stats(merged) == serialize_stats(whole.stats));
  const auto threaded = filter_annotations(cands, dict, table, {}, 5);
  CHECK(threaded.filtered == whole.filtered);
  CHECK(serialize_stats(threaded.stats) == serialize_stats(whole.stats));
}

TEST_CASE("stricter thresholds never retain more") {
  const auto dict = engines();
  Rng rng(9);
  const auto cands = random_candidates(dict, rng, 400);
  const auto cal = random_calibration(dict, rng);
  std::size_t prev = static_cast<std::size_t>(-1);
  for (double alpha : {0.02, 0.05, 0.1, 0.2, 0.4, 0.7, 0.95}) {
    const auto table = calibrate_thresholds(cal, CalibrationConfig{alpha, 10, 0.2});
    const auto n = filter_annotations(cands, dict, table).stats.attributes;
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("stats against ground truth") {
  const auto dict = engines();
  const std::vector<FilteredAnnotation> gt{
      {"a", "i1", {0, 0, 1, 1}, "Plane", {{"Number of engines", "Twin-engine"}, {"Propulsion type", "Jet"}}, {}},
      {"b", "i1", {0, 0, 1, 1}, "Plane", {{"Propulsion type", "Propeller"}}, {}},
      {"c", "i2", {0, 0, 1, 1}, "Ship", {}, {}},
  };
  const auto same = dataset_stats(gt, std::span<const FilteredAnnotation>(gt));
  const Json doc = stats_to_json(same);
  CHECK(doc["images"] == 2);
  CHECK(doc["instances"] == 3);
  CHECK(doc["attributes"] == 3);
  CHECK(doc["fdr"] == 0.0);
  for (const auto& e : doc["per_class"]) CHECK(e["coverage"] == 1.0);
  CHECK_FALSE(doc.contains("diagnostics"));

  auto pred = gt;
  pred[0].attributes[0].primitive = "Four-engine";
  pred[1].attributes.clear();
  pred[2].instance_id = "zzz";
  const auto s = dataset_stats(pred, std::span<const FilteredAnnotation>(gt));
  const Json d2 = stats_to_json(s);
  CHECK(d2["fdr"] == doctest::Approx(0.5));
  CHECK(s.per_class.at({"Plane", "Number of engines", "Four-engine"}).false_retained == 1);
  CHECK(s.per_class.at({"Plane", "Propulsion type", "Propeller"}).true_count == 1);
  CHECK(s.per_class.at({"Plane", "Propulsion type", "Propeller"}).true_retained == 0);
  CHECK(s.diagnostics.size() == 2);  // unmatched prediction and unmatched truth
}

TEST_CASE("empty dataset gives all-zero stats") {
  const auto s = dataset_stats({});
  const Json doc = stats_to_json(s);
  CHECK(doc["images"] == 0);
  CHECK(doc["instances"] == 0);
  CHECK(doc["attributes"] == 0);
  CHECK(doc["multi_pass_count"] == 0);
  CHECK(doc["per_class"].empty());
}

TEST_CASE("scoring yields one normalized vector per dimension") {
  const auto dict = toy_dictionary();
  const auto inst = generate_toy_instances(dict, "Plane", 20, 0.05, 3, "s");
  const auto params = EncoderParams::random(dictionary_tokens(dict), 8, toy_feature_dim(dict, "Plane"), 0.5, 1);
  std::vector<ScoringInput> inputs;
  for (const auto& r : inst) inputs.push_back(scoring_input(r));
  const auto cands = score_candidates(params, dict, inputs);
  REQUIRE(cands.size() == 20);
  for (const auto& c : cands) {
    CHECK(c.dimension_probs.size() == 3);
    for (const auto& dp : c.dimension_probs) {
      double s = 0.0;
      for (double p : dp.probs) s += p;
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
    // Emitted candidates pass the ingestion checks.
    CHECK(candidate_from_json(candidate_to_json(c), 1, dict) == c);
  }
}

TEST_CASE("export and ingest round-trip with deterministic bytes") {
  const auto dict = engines();
  Rng rng(77);
  const auto cands = random_candidates(dict, rng, 1000);
  const auto table = calibrate_thresholds(random_calibration(dict, rng), CalibrationConfig{});
  const auto res = filter_annotations(cands, dict, table, FilterOptions{true});

  testing::ScratchDir dir;
  export_dataset(res.filtered, res.stats, dir.file("a.jsonl"), dir.file("a.json"));
  export_dataset(res.filtered, res.stats, dir.file("b.jsonl"), dir.file("b.json"));
  CHECK(read_file(dir.file("a.jsonl")) == read_file(dir.file("b.jsonl")));
  CHECK(read_file(dir.file("a.json")) == read_file(dir.file("b.json")));

  auto back = ingest_filtered(open_input(dir.file("a.jsonl")), dict, true).drain();
  CHECK(back == res.filtered);
  CHECK(serialize_filtered(back) == read_file(dir.file("a.jsonl")));
  const Json stats = Json::parse(read_file(dir.file("a.json")));
  CHECK(stats["instances"] == 1000);
  CHECK(stats.contains("images"));
  CHECK(stats.contains("attributes"));

  std::string text;
  for (const auto& c : cands) text += dump_line(candidate_to_json(c));
  CHECK(ingest_candidates(text_input(text), dict, true).drain() == cands);
}

TEST_CASE("filtered records reject two primitives of one dimension") {
  const auto dict = engines();
  Json j = filtered_to_json({"a", "i", {0, 0, 1, 1}, "Plane", {{"Propulsion type", "Jet"}}, {}});
  CHECK(j["attributes"]["Propulsion type"] == "Jet");
  j["attributes"]["Propulsion type"] = "Warp";
  CHECK_THROWS(filtered_from_json(j, 1, dict));
}
