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
#include <span>
#include <string_view>
#include <vector>

#include "attrkit/dictionary.hpp"
#include "attrkit/encoder.hpp"
#include "attrkit/prompt.hpp"

namespace attrkit {

// Mean of the token embeddings of [ProtoTag] + primitives, L2-normalized.
// Summation runs in ascending token-table order, so the result is bitwise
// identical for every ordering of the primitives.
Vec encode_text(const EncoderParams& params, const Prompt& prompt);

// L2-normalized projection of a raw visual feature.
Vec encode_visual(const EncoderParams& params, std::span<const double> feature);

double cosine_sim(std::span<const double> u, std::span<const double> v);

// Instance-wise contrastive loss over one positive and k >= 1 negatives:
//   -log( exp(s+/t) / (exp(s+/t) + sum_j exp(s-_j/t)) )
// evaluated with max subtraction and log1p.
double sacl_loss(std::span<const double> image_emb, std::span<const double> pos_emb,
                 std::span<const Vec> neg_embs, double temperature);

// Same loss from precomputed similarities.
double sacl_loss_from_similarities(double pos_sim, std::span<const double> neg_sims,
                                   double temperature);

// Image-to-text InfoNCE with in-batch negatives; text i is the positive
// for image i.
double batch_infonce_loss(std::span<const Vec> image_embs, std::span<const Vec> text_embs,
                          double temperature);

struct TrainingExample {
  Vec visual_feature;
  Prompt positive;
  std::vector<Prompt> negatives;
};

// Mean instance-wise loss over the batch.
double mean_sacl_loss(const EncoderParams& params, std::span<const TrainingExample> batch);

struct LossAndGradients {
  double loss = 0.0;
  EncoderGradients gradients;
};

// Exact gradients of mean_sacl_loss with respect to the token table, the
// visual projection and log_temperature. Per-example contributions are
// summed in fixed-size chunks in batch order, so the result does not depend
// on `jobs`.
LossAndGradients loss_gradients(const EncoderParams& params,
                                std::span<const TrainingExample> batch, std::size_t jobs = 1);

struct ToyTrainConfig {
  double learning_rate = 1.0;
  std::size_t epochs = 200;
  std::size_t d = 16;
  double init_scale = 0.1;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  void validate() const;
};

struct TrainResult {
  EncoderParams params;
  // Mean loss of each epoch, evaluated before that epoch's update.
  std::vector<double> loss_trace;
};

// Token list used for a dataset: every token of every prompt, in order of
// first appearance.
std::vector<std::string> dataset_tokens(std::span<const TrainingExample> dataset);

// Full-batch gradient descent from a seeded Gaussian initialization.
// Throws NumericError naming the epoch when the loss stops being finite.
TrainResult train_toy(std::span<const TrainingExample> dataset, const ToyTrainConfig& cfg);

// Same, with the token table extended by `extra_tokens` (prompts scored
// later may use tokens absent from the training set).
TrainResult train_toy(std::span<const TrainingExample> dataset, const ToyTrainConfig& cfg,
                      std::span<const std::string> extra_tokens);

struct RankedPrompt {
  Prompt prompt;
  double similarity;
};

// Candidates sorted by descending cosine similarity to the visual feature;
// ties keep input order.
std::vector<RankedPrompt> rank_prompts(const EncoderParams& params, std::span<const double> feature,
                                       std::span<const Prompt> candidates);

// Softmax over the dimension's primitives of sim(image, ProtoTag + primitive)
// divided by the temperature, in dictionary order.
Vec attribute_probabilities(const EncoderParams& params, std::span<const double> feature,
                            const AttributeDictionary& dict, std::string_view category,
                            std::string_view dimension_key);

}  // namespace attrkit
