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

#include "attrkit/encoder.hpp"

#include "attrkit/error.hpp"
#include "attrkit/random.hpp"

namespace attrkit {

EncoderParams::EncoderParams(std::vector<std::string> tokens, std::size_t d, std::size_t d_in)
    : d_(d), d_in_(d_in), tokens_(std::move(tokens)) {
  if (d_ == 0 || d_in_ == 0) throw Error("encoder dimensions must be positive");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw ValidationError({"duplicate token '" + tokens_[i] + "' in token table"});
    }
  }
  embeddings_.assign(tokens_.size() * d_, 0.0);
  projection_.assign(d_ * d_in_, 0.0);
}

EncoderParams EncoderParams::random(std::vector<std::string> tokens, std::size_t d,
                                    std::size_t d_in, double init_scale, std::uint64_t seed) {
  EncoderParams p(std::move(tokens), d, d_in);
  p.seed = seed;
  Rng rng = Rng::substream(seed, "encoder-init");
  for (auto& x : p.embeddings_) x = rng.normal(0.0, init_scale);
  for (auto& x : p.projection_) x = rng.normal(0.0, init_scale);
  return p;
}

bool EncoderParams::has_token(std::string_view token) const {
  return index_.find(token) != index_.end();
}

std::size_t EncoderParams::token_index(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw LookupError("no embedding for token '" + std::string(token) + "'");
  return it->second;
}

EncoderGradients EncoderGradients::zeros_like(const EncoderParams& params) {
  EncoderGradients g;
  g.embeddings.assign(params.embeddings().size(), 0.0);
  g.projection.assign(params.projection().size(), 0.0);
  return g;
}

void EncoderGradients::add(const EncoderGradients& other) {
  for (std::size_t i = 0; i < embeddings.size(); ++i) embeddings[i] += other.embeddings[i];
  for (std::size_t i = 0; i < projection.size(); ++i) projection[i] += other.projection[i];
  log_temperature += other.log_temperature;
}

void EncoderGradients::scale(double factor) {
  for (auto& x : embeddings) x *= factor;
  for (auto& x : projection) x *= factor;
  log_temperature *= factor;
}

Json checkpoint_to_json(const EncoderParams& params) {
  Json doc;
  doc["d"] = params.dim();
  doc["d_in"] = params.input_dim();
  doc["seed"] = params.seed;
  doc["log_temperature"] = params.log_temperature;
  doc["tokens"] = Json::array();
  for (std::size_t i = 0; i < params.token_count(); ++i) {
    auto e = params.embedding(i);
    doc["tokens"].push_back(
        Json{{"token", params.tokens()[i]}, {"embedding", std::vector<double>(e.begin(), e.end())}});
  }
  doc["projection"] = params.projection();
  return doc;
}

EncoderParams checkpoint_from_json(const Json& doc) {
  constexpr std::size_t line = 1;
  if (!doc.is_object()) throw ParseError(line, "", "checkpoint is not an object");
  const auto d = static_cast<std::size_t>(require_number(doc, "d", line));
  const auto d_in = static_cast<std::size_t>(require_number(doc, "d_in", line));
  std::vector<std::string> tokens;
  std::vector<std::vector<double>> rows;
  for (const auto& t : require_array(doc, "tokens", line)) {
    tokens.push_back(require_string(t, "token", line));
    rows.push_back(require_number_array(t, "embedding", line));
    if (rows.back().size() != d) throw ParseError(line, "embedding", "length differs from d");
  }
  EncoderParams p(std::move(tokens), d, d_in);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), p.embedding(i).begin());
  }
  auto proj = require_number_array(doc, "projection", line);
  if (proj.size() != d * d_in) throw ParseError(line, "projection", "length differs from d * d_in");
  p.projection() = std::move(proj);
  p.log_temperature = require_number(doc, "log_temperature", line);
  const Json& seed = require_field(doc, "seed", line);
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    throw ParseError(line, "seed", "expected integer");
  }
  p.seed = seed.get<std::uint64_t>();
  return p;
}

std::string serialize_checkpoint(const EncoderParams& params) {
  return checkpoint_to_json(params).dump(1) + "\n";
}

EncoderParams load_checkpoint(const std::string& path) {
  const std::string text = read_file(path);
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(1, "", std::string("malformed checkpoint: ") + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace attrkit
