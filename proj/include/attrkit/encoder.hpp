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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attrkit/jsonl.hpp"

namespace attrkit {

using Vec = std::vector<double>;

// Initial temperature of the contrastive logits.
inline constexpr double kInitialTemperature = 0.07;

// Parameters of the desk-scale encoders: a token embedding table (text
// side), a linear visual projection and a shared log-temperature.
//
// Layouts are row-major: embeddings are n_tokens x d, the projection is
// d x d_in.
class EncoderParams {
 public:
  EncoderParams() = default;
  // Zero-initialized parameters over `tokens` (duplicates rejected).
  EncoderParams(std::vector<std::string> tokens, std::size_t d, std::size_t d_in);

  // Gaussian(0, init_scale^2) embeddings and projection drawn from `seed`;
  // log_temperature = ln(0.07).
  static EncoderParams random(std::vector<std::string> tokens, std::size_t d, std::size_t d_in,
                              double init_scale, std::uint64_t seed);

  std::size_t dim() const noexcept { return d_; }
  std::size_t input_dim() const noexcept { return d_in_; }
  std::size_t token_count() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  bool has_token(std::string_view token) const;
  // Throws LookupError for tokens without an embedding.
  std::size_t token_index(std::string_view token) const;

  std::span<double> embedding(std::size_t index) {
    return {embeddings_.data() + index * d_, d_};
  }
  std::span<const double> embedding(std::size_t index) const {
    return {embeddings_.data() + index * d_, d_};
  }

  std::vector<double>& embeddings() noexcept { return embeddings_; }
  const std::vector<double>& embeddings() const noexcept { return embeddings_; }
  std::vector<double>& projection() noexcept { return projection_; }
  const std::vector<double>& projection() const noexcept { return projection_; }

  double log_temperature = std::log(kInitialTemperature);
  double temperature() const { return std::exp(log_temperature); }

  std::uint64_t seed = 0;

 private:
  std::size_t d_ = 0;
  std::size_t d_in_ = 0;
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<double> embeddings_;
  std::vector<double> projection_;
};

// Gradient with the same shapes as EncoderParams.
struct EncoderGradients {
  std::vector<double> embeddings;
  std::vector<double> projection;
  double log_temperature = 0.0;

  static EncoderGradients zeros_like(const EncoderParams& params);
  void add(const EncoderGradients& other);
  void scale(double factor);
};

// Checkpoint document: d, d_in, seed, log_temperature, token list with
// embeddings, and the row-major projection.
Json checkpoint_to_json(const EncoderParams& params);
EncoderParams checkpoint_from_json(const Json& doc);
std::string serialize_checkpoint(const EncoderParams& params);
EncoderParams load_checkpoint(const std::string& path);

}  // namespace attrkit
