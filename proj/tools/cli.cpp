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

#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "attrkit/conformal.hpp"
#include "attrkit/dictionary.hpp"
#include "attrkit/error.hpp"
#include "attrkit/evaluation.hpp"
#include "attrkit/filtration.hpp"
#include "attrkit/instance.hpp"
#include "attrkit/jsonl.hpp"
#include "attrkit/prompt.hpp"
#include "attrkit/record_stream.hpp"
#include "attrkit/sacl.hpp"
#include "attrkit/toy_task.hpp"

namespace attrkit::cli {

namespace {

// Candidates filtered per parallel block.
constexpr std::size_t kFilterBlock = 4096;

// Structured log lines on stderr. No timestamps: logs are reproducible too.
class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {}

  void info(const std::string& event, Json fields = Json::object()) { emit("info", event, std::move(fields)); }
  void warn(const std::string& event, Json fields = Json::object()) { emit("warn", event, std::move(fields)); }
  void error(const std::string& event, Json fields = Json::object()) { emit("error", event, std::move(fields)); }

  void diagnostics(const std::string& source, const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags) warn("input.diagnostic", {{"source", source}, {"line", d.line}, {"message", d.message}});
  }

 private:
  void emit(const char* level, const std::string& event, Json fields) {
    Json rec{{"level", level}, {"event", event}};
    for (auto& [k, v] : fields.items()) rec[k] = v;
    err_ << dump_line(rec);
  }

  std::ostream& err_;
};

std::string env_name(const std::string& flag) {
  std::string out = "ATTRKIT_";
  for (char c : flag) {
    if (c == '-') {
      if (out.back() != '_') out += '_';
    } else {
      out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
  }
  if (out.back() == '_') out.pop_back();
  return out;
}

template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& var, const std::string& help) {
  return app->add_option(name, var, help)->envname(env_name(name.substr(2)))->capture_default_str();
}

CLI::Option* bool_flag(CLI::App* app, const std::string& name, bool& var, const std::string& help) {
  return app->add_flag(name, var, help)->envname(env_name(name.substr(2)));
}

AttributeDictionary read_dictionary(const std::string& path) { return load_dictionary(path); }

PromptGenConfig prompt_config(const RunConfig& cfg) {
  PromptGenConfig pc;
  pc.keep_prob = cfg.keep_prob;
  pc.num_negatives = cfg.num_negatives;
  pc.replacements = cfg.replacements;
  pc.seed = cfg.seed;
  pc.validate();
  return pc;
}

int cmd_dict_validate(const RunConfig& cfg, std::ostream& out, Log& log) {
  const std::string text = read_file(cfg.dict_path);
  try {
    const auto dict = parse_dictionary_text(text);
    std::size_t dims = 0;
    std::size_t prims = 0;
    for (const auto& c : dict.categories()) {
      dims += c.dimensions.size();
      for (const auto& d : c.dimensions) prims += d.values.size();
    }
    out << "valid: " << dict.categories().size() << " categories, " << dims << " dimensions, "
        << prims << " primitives\n";
    log.info("dict.valid", {{"categories", dict.categories().size()}});
    return kExitOk;
  } catch (const ValidationError& e) {
    out << "invalid: " << e.violations().size() << " violation(s)\n";
    for (const auto& v : e.violations()) out << "  " << v << "\n";
    return kExitDomain;
  } catch (const ParseError& e) {
    out << "invalid: " << e.what() << "\n";
    return kExitDomain;
  }
}

int cmd_dict_toy(const RunConfig& cfg, Log& log) {
  write_file_atomic(cfg.out_path, serialize_dictionary(toy_dictionary()));
  log.info("dict.toy.written", {{"path", cfg.out_path}});
  return kExitOk;
}

int cmd_prompts(const RunConfig& cfg, Log& log) {
  const auto dict = read_dictionary(cfg.dict_path);
  const auto pc = prompt_config(cfg);
  auto stream = ingest_instances(open_input(cfg.input_path), &dict, cfg.strict);
  AtomicFileWriter out(cfg.out_path);
  std::size_t n = 0;
  auto emit = [&](const std::string& id, const Prompt& p) {
    out.write(dump_line(Json{{"instance_id", id},
                             {"kind", to_string(p.kind())},
                             {"tokens", p.tokens()},
                             {"serialized", p.serialized()},
                             {"seed", cfg.seed}}));
  };
  while (auto inst = stream.next()) {
    Rng rng = prompt_stream(pc.seed, inst->instance_id);
    const Prompt pos = generate_positive(inst->attributes, pc, rng);
    emit(inst->instance_id, pos);
    for (const auto& neg : generate_negatives(dict, pos, inst->attributes, pc, rng)) {
      emit(inst->instance_id, neg);
    }
    ++n;
  }
  out.commit();
  log.diagnostics(cfg.input_path, stream.diagnostics());
  log.info("prompts.done", {{"instances", n}, {"rejected_lines", stream.diagnostics().size()}});
  return kExitOk;
}

int cmd_calibrate(const RunConfig& cfg, Log& log) {
  std::optional<AttributeDictionary> dict;
  if (!cfg.dict_path.empty()) dict = read_dictionary(cfg.dict_path);
  auto stream = ingest_calibration(open_input(cfg.input_path), dict ? &*dict : nullptr, cfg.strict);
  const auto records = stream.drain();
  log.diagnostics(cfg.input_path, stream.diagnostics());

  CalibrationConfig cc{cfg.alpha, cfg.min_samples, cfg.fallback_tau};
  std::vector<AttributeClass> registered;
  if (dict) registered = dictionary_classes(*dict);
  const auto table = calibrate_thresholds(records, cc, registered);
  write_file_atomic(cfg.out_path, serialize_threshold_table(table));

  std::size_t fallback = 0;
  for (const auto& [k, e] : table.entries()) fallback += e.method == ThresholdMethod::fallback;
  log.info("calibrate.done", {{"records", records.size()},
                              {"classes", table.size()},
                              {"fallback_classes", fallback},
                              {"alpha", cfg.alpha}});
  return kExitOk;
}

int cmd_filter(const RunConfig& cfg, Log& log) {
  const auto dict = read_dictionary(cfg.dict_path);
  const auto table = load_threshold_table(cfg.aux_path);
  const std::string stats_path = cfg.side_out_path.empty() ? cfg.out_path + ".stats.json" : cfg.side_out_path;

  std::vector<FilteredAnnotation> truth;
  bool with_truth = !cfg.ground_truth_path.empty();
  if (with_truth) {
    auto gt = ingest_filtered(open_input(cfg.ground_truth_path), dict, cfg.strict);
    truth = gt.drain();
    log.diagnostics(cfg.ground_truth_path, gt.diagnostics());
  }

  auto stream = ingest_candidates(open_input(cfg.input_path), dict, cfg.strict);
  AtomicFileWriter out(cfg.out_path);
  PipelineStats stats;
  std::vector<FilteredAnnotation> kept;  // only needed for ground-truth joins
  std::vector<CandidateAnnotation> block;
  FilterOptions options{cfg.keep_passing};
  auto flush = [&] {
    if (block.empty()) return;
    auto res = filter_annotations(block, dict, table, options, cfg.jobs);
    out.write(serialize_filtered(res.filtered));
    stats.merge(res.stats);
    if (with_truth) kept.insert(kept.end(), res.filtered.begin(), res.filtered.end());
    block.clear();
  };
  while (auto c = stream.next()) {
    block.push_back(std::move(*c));
    if (block.size() >= kFilterBlock) flush();
  }
  flush();
  if (with_truth) evaluate_against(stats, kept, truth);
  out.commit();
  write_file_atomic(stats_path, serialize_stats(stats));
  log.diagnostics(cfg.input_path, stream.diagnostics());
  log.info("filter.done", {{"images", stats.images()},
                           {"instances", stats.instances},
                           {"attributes", stats.attributes},
                           {"multi_pass_count", stats.multi_pass_count}});
  return kExitOk;
}

std::vector<InstanceRecord> read_instances(const std::string& path, const AttributeDictionary& dict,
                                           bool strict, Log& log, bool need_feature) {
  auto stream = ingest_instances(open_input(path), &dict, strict);
  std::vector<InstanceRecord> out;
  while (auto r = stream.next()) {
    if (need_feature && r->feature.empty()) {
      if (strict) throw Error("instance '" + r->instance_id + "' has no feature");
      log.warn("input.skipped", {{"instance_id", r->instance_id}, {"reason", "no feature"}});
      continue;
    }
    out.push_back(std::move(*r));
  }
  log.diagnostics(path, stream.diagnostics());
  return out;
}

int cmd_train(const RunConfig& cfg, Log& log) {
  const auto dict = read_dictionary(cfg.dict_path);
  const auto instances = read_instances(cfg.input_path, dict, cfg.strict, log, true);
  const auto dataset = build_training_set(dict, instances, prompt_config(cfg));
  ToyTrainConfig tc;
  tc.learning_rate = cfg.learning_rate;
  tc.epochs = cfg.epochs;
  tc.d = cfg.dim;
  tc.init_scale = cfg.init_scale;
  tc.seed = cfg.seed;
  tc.jobs = cfg.jobs;
  const auto tokens = dictionary_tokens(dict);
  const auto result = train_toy(dataset, tc, tokens);

  const std::string trace_path = cfg.side_out_path.empty() ? cfg.out_path + ".trace.jsonl" : cfg.side_out_path;
  std::string trace;
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
    trace += dump_line(Json{{"epoch", e}, {"loss", result.loss_trace[e]}});
  }
  write_file_atomic(cfg.out_path, serialize_checkpoint(result.params));
  write_file_atomic(trace_path, trace);
  log.info("train.done", {{"examples", dataset.size()},
                          {"initial_loss", result.loss_trace.front()},
                          {"final_loss", result.loss_trace.back()},
                          {"temperature", result.params.temperature()}});
  return kExitOk;
}

int cmd_score(const RunConfig& cfg, Log& log) {
  const auto dict = read_dictionary(cfg.dict_path);
  const auto params = load_checkpoint(cfg.aux_path);
  const auto instances = read_instances(cfg.input_path, dict, cfg.strict, log, true);
  std::vector<ScoringInput> inputs;
  inputs.reserve(instances.size());
  for (const auto& r : instances) inputs.push_back(scoring_input(r));
  const auto candidates = score_candidates(params, dict, inputs);

  std::string text;
  for (const auto& c : candidates) text += dump_line(candidate_to_json(c));
  write_file_atomic(cfg.out_path, text);

  if (!cfg.side_out_path.empty()) {
    // Probability of the annotated primitive, per annotated dimension.
    std::string cal;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      for (const auto& a : inst.attributes.assignments) {
        const auto& dim = dict.dimension(inst.attributes.proto_tag, a.dimension);
        const auto pos = static_cast<std::size_t>(
            std::find(dim.values.begin(), dim.values.end(), a.primitive) - dim.values.begin());
        for (const auto& dp : candidates[i].dimension_probs) {
          if (dp.dimension != a.dimension) continue;
          cal += dump_line(calibration_record_to_json(
              {inst.instance_id, {inst.attributes.proto_tag, a.dimension, a.primitive}, dp.probs[pos]}));
        }
      }
    }
    write_file_atomic(cfg.side_out_path, cal);
  }
  log.info("score.done", {{"instances", candidates.size()}});
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, Log& log) {
  const auto dict = read_dictionary(cfg.dict_path);
  const auto params = load_checkpoint(cfg.aux_path);
  const auto bench = read_instances(cfg.input_path, dict, cfg.strict, log, true);
  EvalMode mode;
  if (cfg.mode == "atomic") {
    mode = EvalMode::atomic;
  } else if (cfg.mode == "compositional") {
    mode = EvalMode::compositional;
  } else {
    throw Error("unknown mode '" + cfg.mode + "'");
  }
  const auto report = evaluate_prompt_matching(params, dict, bench, mode, cfg.n_attrs);
  write_file_atomic(cfg.out_path, eval_report_to_json(report).dump(2) + "\n");
  log.info("eval.done", {{"instances", report.instances}, {"groups", report.groups.size()},
                         {"mean_accuracy", report.mean_accuracy}});
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, Log& log) {
  ScoreLaw law;
  if (cfg.law == "uniform") {
    law.kind = ScoreLaw::Kind::uniform;
  } else if (cfg.law == "logit_normal") {
    law.kind = ScoreLaw::Kind::logit_normal;
  } else {
    throw Error("unknown law '" + cfg.law + "'");
  }
  const auto rep = simulate_coverage(law, cfg.alpha, cfg.n_cal, cfg.n_test, cfg.trials, cfg.seed);
  write_file_atomic(cfg.out_path, coverage_report_to_json(rep).dump(2) + "\n");
  log.info("simulate.done", {{"mean_coverage", rep.mean}, {"std_coverage", rep.stddev},
                             {"theory_lower", rep.theory_lower}, {"theory_upper", rep.theory_upper}});
  return kExitOk;
}

int cmd_synth(const RunConfig& cfg, Log& log) {
  const auto dict = read_dictionary(cfg.dict_path);
  const auto records = generate_toy_instances(dict, cfg.category, cfg.count, cfg.noise, cfg.seed, cfg.prefix);
  write_file_atomic(cfg.out_path, serialize_instances(records));
  log.info("synth.done", {{"instances", records.size()}});
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Fine-grained attribute annotation toolkit"};
  app.name("attrkit");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand help for every subcommand");

  auto* dict = app.add_subcommand("dict", "Attribute dictionary tools");
  dict->require_subcommand(1);
  auto* validate = dict->add_subcommand("validate", "Check a dictionary file against every structural constraint");
  validate->add_option("dict", cfg.dict_path, "Dictionary file")->required();
  auto* toy = dict->add_subcommand("toy", "Write the built-in toy dictionary");
  flag(toy, "--out", cfg.out_path, "Output dictionary file")->required();

  auto* prompts = app.add_subcommand("prompts", "Emit a positive and k negatives per instance");
  flag(prompts, "--dict", cfg.dict_path, "Dictionary file")->required();
  flag(prompts, "--instances", cfg.input_path, "Instance records")->required();
  flag(prompts, "--out", cfg.out_path, "Prompt dump")->required();

  auto* calibrate = app.add_subcommand("calibrate", "Class-wise conformal thresholds");
  flag(calibrate, "--records", cfg.input_path, "Calibration records")->required();
  flag(calibrate, "--out", cfg.out_path, "Threshold table")->required();
  flag(calibrate, "--dict", cfg.dict_path, "Dictionary; its classes without records get the fallback threshold");
  flag(calibrate, "--alpha", cfg.alpha, "Tolerated miscoverage")->check(CLI::Range(0.0, 1.0));
  flag(calibrate, "--min-samples", cfg.min_samples, "Smallest class calibrated conformally");
  flag(calibrate, "--fallback-tau", cfg.fallback_tau, "Threshold for sparse classes")->check(CLI::Range(0.0, 1.0));

  auto* filter = app.add_subcommand("filter", "Apply thresholds and exclusivity to candidate annotations");
  flag(filter, "--dict", cfg.dict_path, "Dictionary file")->required();
  flag(filter, "--candidates", cfg.input_path, "Candidate annotations")->required();
  flag(filter, "--thresholds", cfg.aux_path, "Threshold table")->required();
  flag(filter, "--out", cfg.out_path, "Filtered annotations")->required();
  flag(filter, "--stats-out", cfg.side_out_path, "Stats document (default: <out>.stats.json)");
  flag(filter, "--ground-truth", cfg.ground_truth_path, "Reference annotations for retention/FDR stats");
  bool_flag(filter, "--keep-passing", cfg.keep_passing, "Also record raw passing sets");

  auto* train = app.add_subcommand("train", "Train the toy encoders with the instance-wise loss");
  flag(train, "--dict", cfg.dict_path, "Dictionary file")->required();
  flag(train, "--dataset", cfg.input_path, "Instance records with features")->required();
  flag(train, "--out", cfg.out_path, "Checkpoint")->required();
  flag(train, "--trace-out", cfg.side_out_path, "Loss trace (default: <out>.trace.jsonl)");
  flag(train, "--dim", cfg.dim, "Embedding dimension");
  flag(train, "--epochs", cfg.epochs, "Full-batch steps");
  flag(train, "--lr", cfg.learning_rate, "Learning rate");
  flag(train, "--init-scale", cfg.init_scale, "Initialization standard deviation");

  auto* score = app.add_subcommand("score", "Attribute probabilities for instances with features");
  flag(score, "--dict", cfg.dict_path, "Dictionary file")->required();
  flag(score, "--checkpoint", cfg.aux_path, "Checkpoint")->required();
  flag(score, "--instances", cfg.input_path, "Instance records with features")->required();
  flag(score, "--out", cfg.out_path, "Candidate annotations")->required();
  flag(score, "--calibration-out", cfg.side_out_path, "Also write calibration records for annotated attributes");

  auto* eval = app.add_subcommand("eval", "Prompt-matching verification");
  flag(eval, "--dict", cfg.dict_path, "Dictionary file")->required();
  flag(eval, "--checkpoint", cfg.aux_path, "Checkpoint")->required();
  flag(eval, "--benchmark", cfg.input_path, "Annotated instance records with features")->required();
  flag(eval, "--out", cfg.out_path, "Report")->required();
  flag(eval, "--mode", cfg.mode, "atomic or compositional")->check(CLI::IsMember({"atomic", "compositional"}));
  flag(eval, "--n-attrs", cfg.n_attrs, "Attributes per compositional prompt");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo check of conformal coverage");
  flag(simulate, "--out", cfg.out_path, "Report")->required();
  flag(simulate, "--alpha", cfg.alpha, "Tolerated miscoverage")->check(CLI::Range(0.0, 1.0));
  flag(simulate, "--n-cal", cfg.n_cal, "Calibration draws per trial");
  flag(simulate, "--n-test", cfg.n_test, "Test draws per trial");
  flag(simulate, "--trials", cfg.trials, "Trials");
  flag(simulate, "--law", cfg.law, "uniform or logit_normal")->check(CLI::IsMember({"uniform", "logit_normal"}));

  auto* synth = app.add_subcommand("synth", "Generate a synthetic separable attribute dataset");
  flag(synth, "--dict", cfg.dict_path, "Dictionary file")->required();
  flag(synth, "--out", cfg.out_path, "Instance records")->required();
  flag(synth, "--category", cfg.category, "Category to sample");
  flag(synth, "--count", cfg.count, "Instances");
  flag(synth, "--noise", cfg.noise, "Feature noise standard deviation");
  flag(synth, "--prefix", cfg.prefix, "Instance id prefix");

  for (auto* sub : {prompts, train}) {
    flag(sub, "--keep-prob", cfg.keep_prob, "Per-attribute retention probability")->check(CLI::Range(0.0, 1.0));
    flag(sub, "--num-negatives", cfg.num_negatives, "Negatives per instance");
    flag(sub, "--replacements", cfg.replacements, "Swapped primitives per negative")->check(CLI::PositiveNumber);
  }
  for (auto* sub : {prompts, train, simulate, synth}) flag(sub, "--seed", cfg.seed, "Random seed");
  for (auto* sub : {prompts, calibrate, filter, train, score, eval}) {
    bool_flag(sub, "--strict", cfg.strict, "Fail on the first malformed input line");
  }
  for (auto* sub : {filter, train}) flag(sub, "--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitIo;
  }

  Log log(err);
  try {
    if (validate->parsed()) return cmd_dict_validate(cfg, out, log);
    if (toy->parsed()) return cmd_dict_toy(cfg, log);
    if (prompts->parsed()) return cmd_prompts(cfg, log);
    if (calibrate->parsed()) return cmd_calibrate(cfg, log);
    if (filter->parsed()) return cmd_filter(cfg, log);
    if (train->parsed()) return cmd_train(cfg, log);
    if (score->parsed()) return cmd_score(cfg, log);
    if (eval->parsed()) return cmd_eval(cfg, log);
    if (simulate->parsed()) return cmd_simulate(cfg, log);
    if (synth->parsed()) return cmd_synth(cfg, log);
  } catch (const IoError& e) {
    log.error("io", {{"message", e.what()}});
    return kExitIo;
  } catch (const Error& e) {
    log.error("domain", {{"message", e.what()}});
    return kExitDomain;
  } catch (const std::exception& e) {
    log.error("internal", {{"message", e.what()}});
    return kExitDomain;
  }
  return kExitIo;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace attrkit::cli
