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

#include <cmath>
#include <sstream>

#include "attrkit/conformal.hpp"
#include "attrkit/error.hpp"
#include "support/oracles.hpp"

using namespace attrkit;

namespace {

const AttributeClass kJet{"Plane", "Propulsion type", "Jet"};
const AttributeClass kProp{"Plane", "Propulsion type", "Propeller"};
const AttributeClass kTwin{"Plane", "Number of engines", "Twin-engine"};

// Probabilities 0.05, 0.10, ..., 0.95; their scores are the same nineteen values.
std::vector<double> nineteen() {
  return {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50,
          0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95};
}

std::vector<CalibrationRecord> records_for(const AttributeClass& k, const std::vector<double>& probs) {
  std::vector<CalibrationRecord> out;
  for (std::size_t i = 0; i < probs.size(); ++i) out.push_back({"i" + std::to_string(i), k, probs[i]});
  return out;
}

ThresholdTable uniform_table(const std::vector<AttributeClass>& classes, double tau) {
  ThresholdTable::Map m;
  for (const auto& k : classes) m[k] = ThresholdEntry{tau, ThresholdMethod::conformal, 100, 0.1, 1.0 - tau};
  return ThresholdTable(m);
}

}  // namespace

TEST_CASE("nonconformity examples") {
  CHECK(nonconformity(1.0) == 0.0);
  CHECK(nonconformity(0.0) == 1.0);
  CHECK(nonconformity(0.63) == doctest::Approx(0.37).epsilon(1e-15));
  CHECK_THROWS_AS(nonconformity(1.2), Error);
  CHECK_THROWS_AS(nonconformity(-0.1), Error);
  CHECK_THROWS_AS(nonconformity(std::nan("")), Error);
}

TEST_CASE("conformal rank") {
  CHECK(conformal_rank(19, 0.1) == 18);
  CHECK(conformal_rank(1, 0.1) == 2);
  CHECK(conformal_rank(200, 0.1) == 181);
  CHECK(conformal_rank(9, 0.5) == 5);
  CHECK_THROWS_AS(conformal_rank(10, 0.0), Error);
  CHECK_THROWS_AS(conformal_rank(10, 1.0), Error);
}

TEST_CASE("quantile examples") {
  CHECK(conformal_quantile(nineteen(), 0.1) == 0.90);
  CHECK(conformal_quantile(std::vector<double>{0.3}, 0.1) == 1.0);
  CHECK(conformal_quantile(std::vector<double>(7, 0.42), 0.3) == 0.42);
  CHECK_THROWS_AS(conformal_quantile(std::vector<double>{}, 0.1), Error);
}

TEST_CASE("quantile agrees with the sort-and-index oracle") {
  Rng rng(31);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng.below(60);
    std::vector<double> s(n);
    for (auto& x : s) x = rng.below(4) == 0 ? 0.5 : rng.uniform();  // some ties
    const double alpha = 0.01 + 0.98 * rng.uniform();
    const auto rank = static_cast<std::size_t>(std::ceil((n + 1) * (1.0 - alpha) - 1e-9 * (n + 1)));
    CHECK(conformal_quantile(s, alpha) == testing::sorted_quantile(s, rank));
  }
}

TEST_CASE("class-wise calibration fixtures") {
  auto recs = records_for(kJet, nineteen());
  const auto five = records_for(kProp, {0.9, 0.8, 0.7, 0.6, 0.5});
  recs.insert(recs.end(), five.begin(), five.end());
  const auto table = calibrate_thresholds(recs, CalibrationConfig{});
  REQUIRE(table.size() == 2);

  const auto& jet = table.at(kJet);
  CHECK(jet.method == ThresholdMethod::conformal);
  CHECK(jet.n_cal == 19);
  REQUIRE(jet.q_hat);
  CHECK(*jet.q_hat == 0.90);
  CHECK(jet.tau == 0.10);

  const auto& prop = table.at(kProp);
  CHECK(prop.method == ThresholdMethod::fallback);
  CHECK(prop.tau == 0.2);
  CHECK_FALSE(prop.q_hat);
  CHECK(prop.n_cal == 5);

  CHECK(calibrate_thresholds({}, CalibrationConfig{}).empty());
  CHECK_THROWS_AS(table.at(kTwin), LookupError);
  CHECK(table.find(kTwin) == nullptr);
}

TEST_CASE("registered classes without records fall back") {
  const std::vector<AttributeClass> reg{kTwin};
  const auto table = calibrate_thresholds(records_for(kJet, nineteen()), CalibrationConfig{}, reg);
  CHECK(table.at(kTwin).method == ThresholdMethod::fallback);
  CHECK(table.at(kTwin).tau == 0.2);
  CHECK(table.at(kTwin).n_cal == 0);
}

TEST_CASE("every class under min_samples carries exactly fallback_tau") {
  Rng rng(5);
  std::vector<CalibrationRecord> recs;
  std::map<AttributeClass, std::size_t> sizes;
  for (int c = 0; c < 30; ++c) {
    AttributeClass k{"C", "D", "p" + std::to_string(c)};
    const std::size_t n = rng.below(25);
    sizes[k] = n;
    for (std::size_t i = 0; i < n; ++i) recs.push_back({"x", k, rng.uniform()});
  }
  const CalibrationConfig cfg{0.1, 10, 0.35};
  const auto table = calibrate_thresholds(recs, cfg);
  for (const auto& [k, n] : sizes) {
    if (n == 0) {
      CHECK(table.find(k) == nullptr);
      continue;
    }
    const auto& e = table.at(k);
    if (n < 10) {
      CHECK(e.method == ThresholdMethod::fallback);
      CHECK(e.tau == 0.35);
    } else {
      CHECK(e.method == ThresholdMethod::conformal);
      CHECK(e.tau == 1.0 - *e.q_hat);
    }
  }
}

TEST_CASE("thresholds are non-decreasing in alpha") {
  Rng rng(8);
  std::vector<double> probs(57);
  for (auto& p : probs) p = rng.uniform();
  const auto recs = records_for(kJet, probs);
  double prev = -1.0;
  for (double a = 0.01; a < 1.0; a += 0.01) {
    const double tau = calibrate_thresholds(recs, CalibrationConfig{a, 10, 0.2}).at(kJet).tau;
    CHECK(tau >= prev);
    prev = tau;
  }
}

TEST_CASE("the boundary record sits inside its own prediction set") {
  Rng rng(13);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> probs(20 + rng.below(50));
    for (auto& p : probs) p = rng.uniform();
    const auto table = calibrate_thresholds(records_for(kJet, probs), CalibrationConfig{});
    const double tau = table.at(kJet).tau;
    std::size_t inside = 0;
    for (double p : probs) inside += p >= tau;
    // At least rank records have score <= q_hat.
    CHECK(inside >= conformal_rank(probs.size(), 0.1));
  }
}

TEST_CASE("prediction set examples") {
  const std::vector<AttributeClass> cls{kJet, kProp, kTwin};
  const ProbVector probs{{kJet, 0.3}, {kProp, 0.15}, {kTwin, 0.05}};
  CHECK(prediction_set(probs, uniform_table(cls, 0.0)).size() == 3);
  CHECK(prediction_set(probs, uniform_table(cls, 0.10)) == std::set<AttributeClass>{kJet, kProp});
  CHECK(prediction_set(probs, uniform_table(cls, 0.15)).contains(kProp));
  CHECK(prediction_set(probs, uniform_table(cls, std::nextafter(1.0, 2.0))).empty());
  CHECK_THROWS_AS(prediction_set(probs, uniform_table({kJet}, 0.1)), LookupError);
}

TEST_CASE("empirical coverage extremes") {
  const std::vector<AttributeClass> cls{kJet, kProp};
  std::vector<LabeledProbs> items;
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const double p = rng.uniform();
    items.push_back({{{kJet, p}, {kProp, 1.0 - p}}, i % 2 ? kJet : kProp});
  }
  CHECK(empirical_coverage(uniform_table(cls, 0.0), items) == 1.0);
  CHECK(empirical_coverage(uniform_table(cls, std::nextafter(1.0, 2.0)), items) == 0.0);
}

TEST_CASE("calibrated coverage on exchangeable data") {
  Rng rng(17);
  const auto table = [&] {
    std::vector<double> probs(2000);
    for (auto& p : probs) p = rng.uniform();
    return calibrate_thresholds(records_for(kJet, probs), CalibrationConfig{});
  }();
  std::vector<LabeledProbs> test;
  for (int i = 0; i < 20000; ++i) test.push_back({{{kJet, rng.uniform()}}, kJet});
  CHECK(empirical_coverage(table, test) == doctest::Approx(0.9).epsilon(0.02));
}

TEST_CASE("coverage simulation") {
  const auto a = simulate_coverage(ScoreLaw{}, 0.1, 200, 1000, 200, 4);
  const auto b = simulate_coverage(ScoreLaw{}, 0.1, 200, 1000, 200, 4);
  CHECK(a.per_trial == b.per_trial);
  CHECK(coverage_report_to_json(a).dump() == coverage_report_to_json(b).dump());
  CHECK(a.theory_lower == doctest::Approx(0.9));
  CHECK(a.theory_upper == doctest::Approx(0.9 + 1.0 / 201.0));
  CHECK(a.mean >= a.theory_lower - 0.005);
  CHECK(a.mean <= a.theory_upper + 0.005);
  CHECK(a.per_trial.size() == 200);

  ScoreLaw skewed;
  skewed.kind = ScoreLaw::Kind::logit_normal;
  const auto c = simulate_coverage(skewed, 0.5, 200, 1000, 200, 4);
  CHECK(c.mean >= 0.5 - 0.005);
  CHECK(c.mean <= 0.5 + 1.0 / 201.0 + 0.005);
  CHECK(c.law == "logit_normal");
  CHECK_THROWS_AS(simulate_coverage(ScoreLaw{}, 0.1, 0, 10, 10, 0), Error);
}

TEST_CASE("threshold tables round-trip through JSON lines") {
  auto recs = records_for(kJet, nineteen());
  const auto extra = records_for(kProp, {0.9, 0.8});
  recs.insert(recs.end(), extra.begin(), extra.end());
  const auto table = calibrate_thresholds(recs, CalibrationConfig{});
  const auto text = serialize_threshold_table(table);
  std::istringstream in(text);
  const auto back = parse_threshold_table(in);
  REQUIRE(back.size() == table.size());
  for (const auto& [k, e] : table.entries()) {
    const auto& f = back.at(k);
    CHECK(f.tau == e.tau);
    CHECK(f.method == e.method);
    CHECK(f.n_cal == e.n_cal);
    CHECK(f.alpha == e.alpha);
    CHECK(f.q_hat == e.q_hat);
  }
  CHECK(serialize_threshold_table(back) == text);

  std::istringstream bad(R"({"category":"Plane","dimension":"x","primitive":"y","tau":1.5,"method":"conformal","n_cal":3,"alpha":0.1,"q_hat":0.1})");
  CHECK_THROWS_AS(parse_threshold_table(bad), ParseError);
}

TEST_CASE("calibration records round-trip") {
  const CalibrationRecord r{"inst-7", kTwin, 0.8125};
  const auto back = calibration_record_from_json(calibration_record_to_json(r), 1);
  CHECK(back.instance_id == r.instance_id);
  CHECK(back.attribute_class == r.attribute_class);
  CHECK(back.p_hat == r.p_hat);
  auto j = calibration_record_to_json(r);
  j["p_hat"] = 1.5;
  CHECK_THROWS(calibration_record_from_json(j, 1));
}

TEST_CASE("configuration bounds") {
  CHECK_THROWS_AS((CalibrationConfig{0.0, 10, 0.2}.validate()), Error);
  CHECK_THROWS_AS((CalibrationConfig{0.1, 10, 1.5}.validate()), Error);
  CHECK_NOTHROW((CalibrationConfig{0.1, 10, 0.2}.validate()));
}
