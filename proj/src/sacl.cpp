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

#include "attrkit/sacl.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <set>
#include <thread>

#include "attrkit/error.hpp"

namespace attrkit {

namespace {

// Examples per reduction chunk in loss_gradients.
constexpr std::size_t kChunk = 32;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct TextEncoding {
  std::vector<std::size_t> ids;  // ascending
  Vec unit;
  double norm = 0.0;
};

TextEncoding encode_text_detail(const EncoderParams& params, const Prompt& prompt) {
  TextEncoding enc;
  enc.ids.reserve(prompt.primitives().size() + 1);
  enc.ids.push_back(params.token_index(prompt.proto_tag()));
  for (const auto& p : prompt.primitives()) enc.ids.push_back(params.token_index(p));
  std::sort(enc.ids.begin(), enc.ids.end());

  const std::size_t d = params.dim();
  Vec mean(d, 0.0);
  for (auto id : enc.ids) {
    auto e = params.embedding(id);
    for (std::size_t i = 0; i < d; ++i) mean[i] += e[i];
  }
  const double count = static_cast<double>(enc.ids.size());
  for (auto& x : mean) x /= count;
  enc.norm = norm(mean);
  if (!(enc.norm > 0.0) || !std::isfinite(enc.norm)) {
    throw NumericError("text embedding of '" + prompt.serialized() + "' has zero norm");
  }
  for (auto& x : mean) x /= enc.norm;
  enc.unit = std::move(mean);
  return enc;
}

struct VisualEncoding {
  Vec unit;
  double norm = 0.0;
};

VisualEncoding encode_visual_detail(const EncoderParams& params, std::span<const double> feature) {
  if (feature.size() != params.input_dim()) {
    throw Error("visual feature has dimension " + std::to_string(feature.size()) + ", expected " +
                std::to_string(params.input_dim()));
  }
  const std::size_t d = params.dim();
  const std::size_t n = params.input_dim();
  const auto& w = params.projection();
  VisualEncoding enc;
  enc.unit.assign(d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += w[r * n + c] * feature[c];
    enc.unit[r] = s;
  }
  enc.norm = norm(enc.unit);
  if (!(enc.norm > 0.0) || !std::isfinite(enc.norm)) {
    throw NumericError("visual projection has zero norm");
  }
  for (auto& x : enc.unit) x /= enc.norm;
  return enc;
}

// log(sum_j exp(logits_j)) - logits[target], stable.
double cross_entropy(std::span<const double> logits, std::size_t target) {
  std::size_t arg = 0;
  for (std::size_t j = 1; j < logits.size(); ++j) {
    if (logits[j] > logits[arg]) arg = j;
  }
  const double top = logits[arg];
  double tail = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (j != arg) tail += std::exp(logits[j] - top);
  }
  return (top - logits[target]) + std::log1p(tail);
}

void softmax_inplace(std::span<double> x) {
  const double top = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (auto& v : x) {
    v = std::exp(v - top);
    z += v;
  }
  for (auto& v : x) v /= z;
}

void check_example(const TrainingExample& ex) {
  if (ex.negatives.empty()) throw Error("training example '" + ex.positive.serialized() +
                                        "' has no negatives");
}

// Accumulates the gradient of one example's loss into `grad` and returns
// the loss.
double accumulate_example(const EncoderParams& params, const TrainingExample& ex,
                          EncoderGradients& grad) {
  check_example(ex);
  const std::size_t d = params.dim();
  const std::size_t n_in = params.input_dim();
  const double t = params.temperature();

  const VisualEncoding vis = encode_visual_detail(params, ex.visual_feature);
  std::vector<TextEncoding> texts;
  texts.reserve(ex.negatives.size() + 1);
  texts.push_back(encode_text_detail(params, ex.positive));
  for (const auto& neg : ex.negatives) texts.push_back(encode_text_detail(params, neg));

  Vec sims(texts.size());
  Vec logits(texts.size());
  for (std::size_t j = 0; j < texts.size(); ++j) {
    sims[j] = dot(texts[j].unit, vis.unit);
    logits[j] = sims[j] / t;
  }
  const double loss = cross_entropy(logits, 0);

  // dL/dlogit_j = softmax_j - [j == 0]
  Vec g = logits;
  softmax_inplace(g);
  g[0] -= 1.0;

  // logit_j = s_j * exp(-log_temperature)
  for (std::size_t j = 0; j < texts.size(); ++j) grad.log_temperature -= g[j] * logits[j];

  Vec dv(d, 0.0);
  for (std::size_t j = 0; j < texts.size(); ++j) {
    const double gs = g[j] / t;
    for (std::size_t i = 0; i < d; ++i) dv[i] += gs * texts[j].unit[i];
  }

  // Through y = z / |z|: dz = (dy - (y . dy) y) / |z|.
  const double vdv = dot(vis.unit, dv);
  for (std::size_t r = 0; r < d; ++r) {
    const double dz = (dv[r] - vdv * vis.unit[r]) / vis.norm;
    for (std::size_t c = 0; c < n_in; ++c) grad.projection[r * n_in + c] += dz * ex.visual_feature[c];
  }

  Vec dm(d);
  for (std::size_t j = 0; j < texts.size(); ++j) {
    const auto& te = texts[j];
    const double gs = g[j] / t;
    // du = gs * v
    const double udu = gs * dot(te.unit, vis.unit);
    const double per_token = 1.0 / static_cast<double>(te.ids.size());
    for (std::size_t i = 0; i < d; ++i) {
      dm[i] = (gs * vis.unit[i] - udu * te.unit[i]) / te.norm * per_token;
    }
    for (auto id : te.ids) {
      double* row = grad.embeddings.data() + id * d;
      for (std::size_t i = 0; i < d; ++i) row[i] += dm[i];
    }
  }
  return loss;
}

}  // namespace

Vec encode_text(const EncoderParams& params, const Prompt& prompt) {
  return encode_text_detail(params, prompt).unit;
}

Vec encode_visual(const EncoderParams& params, std::span<const double> feature) {
  return encode_visual_detail(params, feature).unit;
}

double cosine_sim(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw Error("cosine_sim: length mismatch");
  const double nu = norm(u);
  const double nv = norm(v);
  if (!(nu > 0.0) || !(nv > 0.0)) throw NumericError("cosine_sim: zero vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

double sacl_loss_from_similarities(double pos_sim, std::span<const double> neg_sims,
                                   double temperature) {
  if (neg_sims.empty()) throw Error("sacl_loss needs at least one negative");
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  Vec logits;
  logits.reserve(neg_sims.size() + 1);
  logits.push_back(pos_sim / temperature);
  for (double s : neg_sims) logits.push_back(s / temperature);
  return cross_entropy(logits, 0);
}

double sacl_loss(std::span<const double> image_emb, std::span<const double> pos_emb,
                 std::span<const Vec> neg_embs, double temperature) {
  Vec neg_sims;
  neg_sims.reserve(neg_embs.size());
  for (const auto& n : neg_embs) neg_sims.push_back(cosine_sim(image_emb, n));
  return sacl_loss_from_similarities(cosine_sim(image_emb, pos_emb), neg_sims, temperature);
}

double batch_infonce_loss(std::span<const Vec> image_embs, std::span<const Vec> text_embs,
                          double temperature) {
  if (image_embs.size() != text_embs.size()) throw Error("batch_infonce_loss: length mismatch");
  if (image_embs.empty()) throw Error("batch_infonce_loss: empty batch");
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  const std::size_t n = image_embs.size();
  Vec logits(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) logits[j] = cosine_sim(image_embs[i], text_embs[j]) / temperature;
    total += cross_entropy(logits, i);
  }
  return total / static_cast<double>(n);
}

double mean_sacl_loss(const EncoderParams& params, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw Error("empty batch");
  double total = 0.0;
  for (const auto& ex : batch) {
    check_example(ex);
    const Vec v = encode_visual(params, ex.visual_feature);
    const double pos = dot(encode_text(params, ex.positive), v);
    Vec negs;
    for (const auto& n : ex.negatives) negs.push_back(dot(encode_text(params, n), v));
    total += sacl_loss_from_similarities(pos, negs, params.temperature());
  }
  return total / static_cast<double>(batch.size());
}

LossAndGradients loss_gradients(const EncoderParams& params,
                                std::span<const TrainingExample> batch, std::size_t jobs) {
  if (batch.empty()) throw Error("empty batch");
  const std::size_t chunks = (batch.size() + kChunk - 1) / kChunk;
  std::vector<EncoderGradients> partial(chunks, EncoderGradients::zeros_like(params));
  std::vector<double> partial_loss(chunks, 0.0);

  auto run_chunk = [&](std::size_t c) {
    const std::size_t begin = c * kChunk;
    const std::size_t end = std::min(batch.size(), begin + kChunk);
    for (std::size_t i = begin; i < end; ++i) {
      partial_loss[c] += accumulate_example(params, batch[i], partial[c]);
    }
  };

  jobs = std::clamp<std::size_t>(jobs, 1, chunks);
  if (jobs == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t c = w; c < chunks; c += jobs) run_chunk(c);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    workers.clear();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  LossAndGradients out;
  out.gradients = std::move(partial[0]);
  out.loss = partial_loss[0];
  for (std::size_t c = 1; c < chunks; ++c) {
    out.gradients.add(partial[c]);
    out.loss += partial_loss[c];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.gradients.scale(inv);
  out.loss *= inv;
  return out;
}

void ToyTrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error("learning_rate must be a finite non-negative number");
  }
  if (epochs == 0) throw Error("epochs must be at least 1");
  if (d == 0) throw Error("embedding dimension must be positive");
  if (!(init_scale > 0.0)) throw Error("init_scale must be positive");
}

std::vector<std::string> dataset_tokens(std::span<const TrainingExample> dataset) {
  std::vector<std::string> tokens;
  std::set<std::string, std::less<>> seen;
  auto visit = [&](const Prompt& p) {
    if (seen.insert(p.proto_tag()).second) tokens.push_back(p.proto_tag());
    for (const auto& t : p.primitives()) {
      if (seen.insert(t).second) tokens.push_back(t);
    }
  };
  for (const auto& ex : dataset) {
    visit(ex.positive);
    for (const auto& n : ex.negatives) visit(n);
  }
  return tokens;
}

TrainResult train_toy(std::span<const TrainingExample> dataset, const ToyTrainConfig& cfg) {
  return train_toy(dataset, cfg, {});
}

TrainResult train_toy(std::span<const TrainingExample> dataset, const ToyTrainConfig& cfg,
                      std::span<const std::string> extra_tokens) {
  cfg.validate();
  if (dataset.empty()) throw Error("training dataset is empty");
  auto tokens = dataset_tokens(dataset);
  for (const auto& t : extra_tokens) {
    if (std::find(tokens.begin(), tokens.end(), t) == tokens.end()) tokens.push_back(t);
  }
  const std::size_t d_in = dataset.front().visual_feature.size();

  TrainResult result;
  result.params = EncoderParams::random(std::move(tokens), cfg.d, d_in, cfg.init_scale, cfg.seed);
  auto& p = result.params;
  result.loss_trace.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    LossAndGradients step;
    try {
      step = loss_gradients(p, dataset, cfg.jobs);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + " (" + e.what() + ")");
    }
    if (!std::isfinite(step.loss)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         " (loss is not finite)");
    }
    result.loss_trace.push_back(step.loss);
    const double lr = cfg.learning_rate;
    auto& g = step.gradients;
    for (std::size_t i = 0; i < g.embeddings.size(); ++i) p.embeddings()[i] -= lr * g.embeddings[i];
    for (std::size_t i = 0; i < g.projection.size(); ++i) p.projection()[i] -= lr * g.projection[i];
    p.log_temperature -= lr * g.log_temperature;
  }
  return result;
}

std::vector<RankedPrompt> rank_prompts(const EncoderParams& params, std::span<const double> feature,
                                       std::span<const Prompt> candidates) {
  if (candidates.empty()) throw Error("rank_prompts needs at least one candidate");
  const Vec v = encode_visual(params, feature);
  std::vector<RankedPrompt> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back({c, dot(encode_text(params, c), v)});
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedPrompt& a, const RankedPrompt& b) { return a.similarity > b.similarity; });
  return out;
}

Vec attribute_probabilities(const EncoderParams& params, std::span<const double> feature,
                            const AttributeDictionary& dict, std::string_view category,
                            std::string_view dimension_key) {
  const auto& dim = dict.dimension(category, dimension_key);
  const Vec v = encode_visual(params, feature);
  const double t = params.temperature();
  Vec probs;
  probs.reserve(dim.values.size());
  for (const auto& value : dim.values) {
    const Prompt prompt(std::string(category), {value});
    probs.push_back(dot(encode_text(params, prompt), v) / t);
  }
  softmax_inplace(probs);
  return probs;
}

}  // namespace attrkit
