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
#include <ostream>
#include <string>
#include <vector>

namespace attrkit::cli {

// Exit codes. Stable contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;  // invalid data, violated constraints
inline constexpr int kExitIo = 2;      // unreadable/unwritable files, bad usage

// Every flag of every subcommand. Defaults match the documented pipeline
// configuration.
struct RunConfig {
  std::string dict_path;
  std::string input_path;
  std::string aux_path;  // thresholds / checkpoint
  std::string ground_truth_path;
  std::string out_path;
  std::string side_out_path;  // stats / trace / calibration records

  double alpha = 0.1;
  double fallback_tau = 0.2;
  std::size_t min_samples = 10;

  double keep_prob = 0.5;
  std::size_t num_negatives = 3;
  std::size_t replacements = 1;
  std::uint64_t seed = 0;

  bool strict = false;
  bool keep_passing = false;
  std::size_t jobs = 1;

  std::size_t dim = 16;
  std::size_t epochs = 200;
  double learning_rate = 1.0;
  double init_scale = 0.1;

  std::string mode = "atomic";
  std::size_t n_attrs = 1;

  std::size_t n_cal = 200;
  std::size_t n_test = 1000;
  std::size_t trials = 500;
  std::string law = "uniform";

  std::string category = "Plane";
  std::size_t count = 100;
  double noise = 0.05;
  std::string prefix = "inst";
};

int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace attrkit::cli
