// SPDX-License-Identifier: Apache-2.0

#include "srl/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "srl/checkpoint.hpp"
#include "srl/config.hpp"
#include "srl/data.hpp"
#include "srl/errors.hpp"
#include "srl/eval.hpp"
#include "srl/gradcheck.hpp"
#include "srl/metrics.hpp"
#include "srl/synth.hpp"
#include "srl/train.hpp"

namespace srl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
  std::optional<std::string> aggregator, sampling, state_init, optimizer, protocol;
  std::optional<double> dropout, alpha, beta, temperature;
  std::optional<double> lr, momentum, beta1, beta2, weight_decay, lr_decay;
  std::optional<std::size_t> samples, batch_size, epochs, observed, anticipated, dense_stride,
      lr_decay_every;
  std::optional<bool> revision, reattend, semantic_context, dropout_gru_inputs;
};

struct Options {
  std::string config_path;
  std::string log_file;
  std::uint64_t seed = 1;
  int threads = 1;

  // synth
  std::string out;
  SynthConfig synth;
  std::string transition_file;

  // train / eval / rollout / ablate
  std::string data;
  std::string checkpoint;
  std::string preset = "epic-desk";
  std::string split;
  double test_fraction = 0.2;
  std::string resume;
  Overrides ov;
  std::string out_json;
  std::string out_csv;
  std::vector<double> observed_fractions;
  std::vector<std::uint64_t> seeds = {1, 2, 3};

  // rollout
  std::string video;
  std::optional<std::size_t> end_frame;
  std::vector<std::size_t> horizons;

  // gradcheck
  GradcheckConfig grad;
  std::string grad_aggregator = "gru";
  std::string corrupt;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "JSON file of option values; flags override it");
  sub->add_option("--seed", o.seed, "Root seed for every random stream");
  sub->add_option("--threads", o.threads, "Worker threads (1 keeps runs bit-reproducible)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--log-file", o.log_file, "Write JSONL logs here instead of stdout");
}

void add_model_train(CLI::App* sub, Options& o) {
  auto& v = o.ov;
  sub->add_option("--preset", o.preset, "Hyperparameter preset")
      ->check(CLI::IsMember(preset_names()));
  sub->add_option("--aggregator", v.aggregator, "gru | lstm | avg | max");
  sub->add_option("--dropout", v.dropout);
  sub->add_option("--dropout-gru-inputs", v.dropout_gru_inputs);
  sub->add_option("--alpha", v.alpha, "Weight of the verb and noun losses");
  sub->add_option("--beta", v.beta, "Weight of the revision loss");
  sub->add_option("--samples", v.samples, "Contrastive samples N (1 positive + N-1 negatives)");
  sub->add_option("--sampling", v.sampling, "same_video | other_video | all_video");
  sub->add_option("--temperature", v.temperature);
  sub->add_option("--state-init", v.state_init, "observed | zero");
  sub->add_option("--revision", v.revision);
  sub->add_option("--reattend", v.reattend);
  sub->add_option("--semantic-context", v.semantic_context);
  sub->add_option("--optimizer", v.optimizer, "sgd | adam");
  sub->add_option("--lr", v.lr);
  sub->add_option("--momentum", v.momentum);
  sub->add_option("--beta1", v.beta1);
  sub->add_option("--beta2", v.beta2);
  sub->add_option("--weight-decay", v.weight_decay);
  sub->add_option("--lr-decay-every", v.lr_decay_every);
  sub->add_option("--lr-decay", v.lr_decay);
  sub->add_option("--batch-size", v.batch_size);
  sub->add_option("--epochs", v.epochs);
  sub->add_option("--protocol", v.protocol, "egocentric | dense");
  sub->add_option("--observed", v.observed, "Observed steps o");
  sub->add_option("--anticipated", v.anticipated, "Anticipation steps a");
  sub->add_option("--dense-stride", v.dense_stride);
}

// Subcommands share one Options value, so the per-command default split is
// applied at dispatch time rather than here.
void add_split(CLI::App* sub, Options& o, const std::string& default_split) {
  sub->add_option("--split", o.split, "Videos to use: all | train | test (default " + default_split + ")")
      ->check(CLI::IsMember({"all", "train", "test"}));
  sub->add_option("--test-fraction", o.test_fraction, "Share of videos held out as test");
}

std::unique_ptr<CLI::App> build_app(Options& o) {
  auto app = std::make_unique<CLI::App>("Self-regulated action anticipation", "srl");
  app->require_subcommand(1);

  auto* synth = app->add_subcommand("synth", "Write a synthetic dataset");
  add_common(synth, o);
  synth->add_option("--out", o.out, "Output dataset directory")->required();
  synth->add_option("--classes", o.synth.n_classes);
  synth->add_option("--nouns", o.synth.n_nouns);
  synth->add_option("--dim", o.synth.dim);
  synth->add_option("--videos", o.synth.n_videos);
  synth->add_option("--segments-per-video", o.synth.segments_per_video);
  synth->add_option("--min-frames", o.synth.min_segment_frames);
  synth->add_option("--max-frames", o.synth.max_segment_frames);
  synth->add_option("--p-follow", o.synth.p_follow);
  synth->add_option("--context-order", o.synth.context_order);
  synth->add_option("--noise", o.synth.noise_std);
  synth->add_option("--delta", o.synth.delta_s);
  synth->add_option("--many-shot-min", o.synth.many_shot_min_count);
  synth->add_option("--transition-matrix", o.transition_file, "JSON file holding a row-stochastic matrix");

  auto* train = app->add_subcommand("train", "Train a model and write a checkpoint");
  add_common(train, o);
  add_model_train(train, o);
  add_split(train, o, "train");
  train->add_option("--data", o.data, "Dataset directory")->required();
  train->add_option("--out", o.out, "Checkpoint path")->required();
  train->add_option("--resume", o.resume, "Continue from this checkpoint");

  auto* eval = app->add_subcommand("eval", "Evaluate a checkpoint");
  add_common(eval, o);
  add_split(eval, o, "test");
  eval->add_option("--checkpoint", o.checkpoint)->required();
  eval->add_option("--data", o.data)->required();
  eval->add_option("--protocol", o.ov.protocol, "Defaults to the checkpoint's protocol");
  eval->add_option("--observed-fractions", o.observed_fractions, "Dense protocol (default 0.2 0.3)");
  eval->add_option("--out-json", o.out_json);
  eval->add_option("--out-csv", o.out_csv);

  auto* roll = app->add_subcommand("rollout", "Anticipate from one observed window");
  add_common(roll, o);
  roll->add_option("--checkpoint", o.checkpoint)->required();
  roll->add_option("--data", o.data)->required();
  roll->add_option("--video", o.video)->required();
  roll->add_option("--end-frame", o.end_frame, "Observe the o frames before this index");
  roll->add_option("--horizons", o.horizons, "Steps to report (default 1..a)");

  auto* ablate = app->add_subcommand("ablate", "Train and score all 8 component combinations");
  add_common(ablate, o);
  add_model_train(ablate, o);
  ablate->add_option("--test-fraction", o.test_fraction);
  ablate->add_option("--data", o.data)->required();
  ablate->add_option("--seeds", o.seeds);
  ablate->add_option("--out", o.out, "CSV path")->required();
  ablate->add_option("--out-json", o.out_json);

  auto* grad = app->add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  add_common(grad, o);
  grad->add_option("--dim", o.grad.dim);
  grad->add_option("--observed", o.grad.observed);
  grad->add_option("--horizon", o.grad.horizon);
  grad->add_option("--samples", o.grad.num_samples);
  grad->add_option("--classes", o.grad.num_classes);
  grad->add_option("--aggregator", o.grad_aggregator);
  grad->add_option("--alpha", o.grad.alpha);
  grad->add_option("--beta", o.grad.beta);
  grad->add_option("--step", o.grad.step);
  grad->add_option("--tolerance", o.grad.tolerance);
  grad->add_option("--corrupt", o.corrupt, "Test hook: perturb this parameter's gradient");
  return app;
}

void parse_into(CLI::App& app, std::vector<std::string> args) {
  std::reverse(args.begin(), args.end());
  app.parse(args);
}

std::string json_scalar(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw ConfigError("config key '" + key + "' must be a scalar or a list of scalars");
}

/// Appends the config file's values for every option not given as a flag.
std::vector<std::string> merge_config(CLI::App& sub, const std::string& path,
                                      std::vector<std::string> args) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
  for (const auto& [raw_key, value] : j.items()) {
    std::string key = raw_key;
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "config") throw ConfigError("config files cannot nest 'config'");
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr) throw ConfigError("unknown config key '" + raw_key + "' for " + sub.get_name());
    if (opt->count() > 0) continue;
    args.push_back("--" + key);
    if (value.is_array()) {
      if (value.empty()) throw ConfigError("config key '" + raw_key + "' is an empty list");
      for (const auto& item : value) args.push_back(json_scalar(item, raw_key));
    } else {
      args.push_back(json_scalar(value, raw_key));
    }
  }
  return args;
}

class Logger {
 public:
  Logger(std::ostream& out, const std::string& path) : os_(&out) {
    if (!path.empty()) {
      file_.open(path, std::ios::app);
      if (!file_) throw IoError("cannot open log file " + path);
      os_ = &file_;
    }
  }
  void event(const std::string& name, json fields = json::object()) {
    json j;
    j["event"] = name;
    for (auto& [k, v] : fields.items()) j[k] = v;
    *os_ << j.dump() << '\n';
    os_->flush();
  }
  void raw(const std::string& line) {
    *os_ << line << '\n';
    os_->flush();
  }

 private:
  std::ostream* os_;
  std::ofstream file_;
};

void require_dir(const std::string& path, const char* what) {
  if (!fs::is_directory(path)) throw ConfigError(std::string(what) + " '" + path + "' is not a directory");
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw ConfigError(std::string(what) + " '" + path + "' does not exist");
}

void require_writable_parent(const std::string& path) {
  const fs::path parent = fs::absolute(fs::path(path)).parent_path();
  if (!fs::is_directory(parent)) {
    throw IoError("output directory " + parent.string() + " does not exist");
  }
}

void check_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) throw ParameterError("test fraction must lie in (0, 1)");
}

Dataset select_split(const Dataset& data, const std::string& split, double fraction) {
  if (split == "all") return data;
  check_fraction(fraction);
  auto [train, test] = split_by_video(data, fraction);
  return split == "train" ? train : test;
}

void apply_overrides(const Overrides& v, ModelConfig& m, TrainConfig& t) {
  if (v.aggregator) m.aggregator = parse_aggregator(*v.aggregator);
  if (v.sampling) m.sampling = parse_sampling_mode(*v.sampling);
  if (v.state_init) m.state_init = parse_state_init(*v.state_init);
  if (v.dropout) m.dropout = *v.dropout;
  if (v.dropout_gru_inputs) m.dropout_gru_inputs = *v.dropout_gru_inputs;
  if (v.alpha) m.alpha = *v.alpha;
  if (v.beta) m.beta = *v.beta;
  if (v.samples) m.num_samples = *v.samples;
  if (v.temperature) m.temperature = *v.temperature;
  if (v.revision) m.use_revision = *v.revision;
  if (v.reattend) m.use_reattend = *v.reattend;
  if (v.semantic_context) m.use_semantic_context = *v.semantic_context;
  if (v.optimizer) t.optim.kind = parse_optimizer(*v.optimizer);
  if (v.lr) t.optim.lr = *v.lr;
  if (v.momentum) t.optim.momentum = *v.momentum;
  if (v.beta1) t.optim.beta1 = *v.beta1;
  if (v.beta2) t.optim.beta2 = *v.beta2;
  if (v.weight_decay) t.optim.weight_decay = *v.weight_decay;
  if (v.lr_decay_every) t.optim.lr_decay_every = *v.lr_decay_every;
  if (v.lr_decay) t.optim.lr_decay = *v.lr_decay;
  if (v.batch_size) t.optim.batch_size = *v.batch_size;
  if (v.epochs) t.optim.epochs = *v.epochs;
  if (v.protocol) t.protocol = parse_protocol(*v.protocol);
  if (v.observed) t.observed = *v.observed;
  if (v.anticipated) t.anticipated = *v.anticipated;
  if (v.dense_stride) t.dense_stride = *v.dense_stride;
}

/// Preset, then dataset shape, then overrides; validated as a whole.
std::pair<ModelConfig, TrainConfig> resolve_configs(const Options& o, const Dataset& data) {
  Preset p = preset(o.preset);
  fit_model_config_to(p.model, data);
  apply_overrides(o.ov, p.model, p.train);
  p.train.optim.seed = o.seed;
  p.train.threads = o.threads;
  p.model.validate();
  p.train.validate();
  return {p.model, p.train};
}

// ---------------------------------------------------------------------------

int cmd_synth(const Options& o, std::ostream& out) {
  SynthConfig cfg = o.synth;
  cfg.seed = o.seed;
  if (!o.transition_file.empty()) {
    require_file(o.transition_file, "transition matrix");
    std::ifstream in(o.transition_file);
    try {
      cfg.transition_matrix = json::parse(in).get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
      throw ConfigError("transition matrix file: " + std::string(e.what()));
    }
  }
  cfg.validate();
  const fs::path root(o.out);
  if (fs::exists(root) && !fs::is_directory(root)) throw IoError(o.out + " exists and is not a directory");
  if (!fs::exists(root)) require_writable_parent(o.out);
  Logger log(out, o.log_file);

  const Dataset data = generate_synthetic(cfg);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + o.out + ": " + ec.message());
  write_dataset(data, root);
  log.event("synth", {{"out", o.out},
                      {"videos", data.videos.size()},
                      {"segments", data.segment_count()},
                      {"classes", data.vocab.num_activities()},
                      {"verbs", data.vocab.num_verbs()},
                      {"nouns", data.vocab.num_nouns()},
                      {"dim", data.dim}});
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  require_dir(o.data, "dataset");
  require_writable_parent(o.out);
  if (!o.resume.empty()) require_file(o.resume, "resume checkpoint");
  const Dataset all = load_dataset(o.data);
  const Dataset data = select_split(all, o.split.empty() ? "train" : o.split, o.test_fraction);
  auto [mc, tc] = resolve_configs(o, data);
  std::optional<Checkpoint> resume;
  if (!o.resume.empty()) {
    resume = load_checkpoint(o.resume);
    if (!(resume->model == mc)) throw ConfigError("resume checkpoint was trained with another model config");
    if (resume->train.hash() != tc.hash() || resume->seed != tc.optim.seed) {
      throw ConfigError("resume checkpoint was trained with another training config or seed");
    }
  }
  Logger log(out, o.log_file);
  log.event("config", {{"model", json::parse(mc.to_json())}, {"train", json::parse(tc.to_json())}});

  SrlModel model = make_model(mc, tc.optim.seed);
  TrainCallbacks cb;
  cb.on_epoch = [&](const EpochLog& e) {
    json j = json::parse(e.to_json());
    log.event("epoch", j);
  };
  const Checkpoint ckpt = train(model, data, tc, cb, resume ? &*resume : nullptr);
  save_checkpoint(ckpt, o.out);
  log.event("checkpoint", {{"path", o.out}, {"epoch", ckpt.epoch}});
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  require_file(o.checkpoint, "checkpoint");
  require_dir(o.data, "dataset");
  if (!o.out_json.empty()) require_writable_parent(o.out_json);
  if (!o.out_csv.empty()) require_writable_parent(o.out_csv);
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const SrlModel model = model_from_checkpoint(ckpt);
  const Dataset all = load_dataset(o.data);
  const Dataset data = select_split(all, o.split.empty() ? "test" : o.split, o.test_fraction);
  if (ckpt.model.dim != data.dim) {
    throw ConfigError("checkpoint dim " + std::to_string(ckpt.model.dim) +
                      " does not match dataset dim " + std::to_string(data.dim));
  }
  if (ckpt.model.num_activities != data.vocab.num_activities()) {
    throw ConfigError("checkpoint and dataset disagree on the number of activity classes");
  }
  const Protocol protocol = o.ov.protocol ? parse_protocol(*o.ov.protocol) : ckpt.train.protocol;
  std::vector<double> fractions = o.observed_fractions;
  if (fractions.empty()) fractions = {0.2, 0.3};
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ParameterError("observed fractions must lie in (0, 1)");
  }
  Logger log(out, o.log_file);

  EvalReport report;
  if (protocol == Protocol::Egocentric) {
    report = evaluate_egocentric(model, data, ckpt.train.observed, ckpt.train.anticipated, o.threads);
  } else {
    const ModelDensePredictor predictor(model, ckpt.train.observed);
    report.protocol = "dense";
    for (double f : fractions) {
      const EvalReport r = evaluate_dense(predictor, data, f, kDensePredictedFractions, o.threads);
      report.instances += r.instances;
      report.skipped += r.skipped;
      report.dense.insert(report.dense.end(), r.dense.begin(), r.dense.end());
    }
  }
  if (!o.out_json.empty()) {
    std::ofstream f(o.out_json);
    if (!f) throw IoError("cannot write " + o.out_json);
    f << report.to_json() << '\n';
  }
  if (!o.out_csv.empty()) {
    std::ofstream f(o.out_csv);
    if (!f) throw IoError("cannot write " + o.out_csv);
    f << report.to_csv();
  }
  log.event("eval", {{"report", json::parse(report.to_json())}});
  return kExitOk;
}

int cmd_rollout(const Options& o, std::ostream& out) {
  require_file(o.checkpoint, "checkpoint");
  require_dir(o.data, "dataset");
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const SrlModel model = model_from_checkpoint(ckpt);
  const Dataset data = load_dataset(o.data);
  if (ckpt.model.dim != data.dim) throw ConfigError("checkpoint and dataset dims differ");
  const FeatureSequence* seq = nullptr;
  for (const auto& v : data.videos) {
    if (v.video_id == o.video) seq = &v;
  }
  if (seq == nullptr) throw ConfigError("unknown video '" + o.video + "'");
  const std::size_t obs = ckpt.train.observed;
  const std::size_t end = o.end_frame.value_or(seq->length());
  if (end < obs || end > seq->length()) {
    throw ParameterError("end frame must lie in [" + std::to_string(obs) + ", " +
                         std::to_string(seq->length()) + "]");
  }
  std::vector<std::size_t> horizons = o.horizons;
  if (horizons.empty()) {
    for (std::size_t h = 1; h <= ckpt.train.anticipated; ++h) horizons.push_back(h);
  }
  Matrix observed(obs, data.dim);
  for (std::size_t i = 0; i < obs; ++i) {
    const auto src = seq->frames.row(end - obs + i);
    std::copy(src.begin(), src.end(), observed.row(i).begin());
  }
  const PredictionResult result = rollout(model, observed, horizons);
  Logger log(out, o.log_file);

  const auto labels = seq->frame_labels();
  json hs = json::array();
  for (const auto& h : result.horizons) {
    json top = json::array();
    for (std::size_t c : topk_indices(h.p_activity, 5)) {
      top.push_back({{"activity", data.vocab.activities.at(c)}, {"p", h.p_activity[c]}});
    }
    json entry{{"horizon", h.horizon},
               {"seconds", static_cast<double>(h.horizon) * data.delta_s},
               {"top5", top},
               {"verb", data.vocab.verbs.at(argmax(h.p_verb))},
               {"noun", data.vocab.nouns.at(argmax(h.p_noun))}};
    const std::size_t frame = end - 1 + h.horizon;
    if (frame < labels.size() && labels[frame] != kNoLabel) {
      entry["truth"] = data.vocab.activities.at(static_cast<std::size_t>(labels[frame]));
    }
    hs.push_back(entry);
  }
  log.event("rollout", {{"video", o.video}, {"end_frame", end}, {"horizons", hs}, {"attention", result.attention}});
  return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  require_dir(o.data, "dataset");
  require_writable_parent(o.out);
  if (!o.out_json.empty()) require_writable_parent(o.out_json);
  if (o.seeds.empty()) throw ParameterError("ablation needs at least one seed");
  check_fraction(o.test_fraction);
  const Dataset all = load_dataset(o.data);
  auto [train_data, test_data] = split_by_video(all, o.test_fraction);
  AblationSettings settings;
  std::tie(settings.model, settings.train) = resolve_configs(o, train_data);
  settings.seeds = o.seeds;
  if (settings.train.protocol != Protocol::Egocentric) {
    throw ConfigError("ablate scores the segment-level protocol; use an egocentric preset");
  }
  Logger log(out, o.log_file);

  const auto runs = run_ablation(train_data, test_data, settings);
  {
    std::ofstream f(o.out);
    if (!f) throw IoError("cannot write " + o.out);
    f << ablation_csv(runs);
  }
  if (!o.out_json.empty()) {
    json j = json::array();
    for (const auto& r : runs) {
      j.push_back({{"configuration", r.variant.name},
                   {"seed", r.seed},
                   {"report", json::parse(r.report.to_json())}});
    }
    std::ofstream f(o.out_json);
    if (!f) throw IoError("cannot write " + o.out_json);
    f << j.dump(2) << '\n';
  }
  json summary = json::object();
  const std::size_t h = settings.train.anticipated;
  for (const auto& v : ablation_variants()) summary[v.name] = ablation_mean_top1(runs, v.name, h);
  log.event("ablate", {{"out", o.out}, {"horizon", h}, {"mean_top1", summary}});
  return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out, std::ostream& err) {
  GradcheckConfig cfg = o.grad;
  cfg.seed = o.seed;
  cfg.aggregator = parse_aggregator(o.grad_aggregator);
  if (!(cfg.tolerance > 0.0)) throw ParameterError("tolerance must be > 0");
  GradientHook hook;
  if (!o.corrupt.empty()) {
    hook = [name = o.corrupt](const ParamSet& params, GradientSet& grads) {
      const ParamId id = params.find(name);
      grads[id][0] += 1.0;
    };
    make_gradcheck_problem(cfg).model.params().find(o.corrupt);
  }
  Logger log(out, o.log_file);
  const GradcheckReport report = run_gradcheck(cfg, hook);
  log.raw(json{{"event", "gradcheck"}, {"report", json::parse(report.to_json())}}.dump());
  if (!report.passed) {
    err << "gradcheck failed: parameter " << report.worst_param << " has relative error "
        << report.worst_rel_error << '\n';
    return kExitCheckFailed;
  }
  return kExitOk;
}

void report_error(std::ostream& err, const char* kind, const std::string& what, int code) {
  err << json{{"error", kind}, {"message", what}, {"exit_code", code}}.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options probe;
  Options opts;
  auto first = build_app(probe);
  try {
    parse_into(*first, args);
    std::vector<std::string> merged = args;
    if (!probe.config_path.empty()) {
      merged = merge_config(*first->get_subcommands().front(), probe.config_path, args);
    }
    auto app = build_app(opts);
    parse_into(*app, merged);
    const std::string name = app->get_subcommands().front()->get_name();
    if (name == "synth") return cmd_synth(opts, out);
    if (name == "train") return cmd_train(opts, out);
    if (name == "eval") return cmd_eval(opts, out);
    if (name == "rollout") return cmd_rollout(opts, out);
    if (name == "ablate") return cmd_ablate(opts, out);
    return cmd_gradcheck(opts, out, err);
  } catch (const CLI::ParseError& e) {
    const int code = first->exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const TrainingAborted& e) {
    err << e.diagnostics_json() << '\n';
    return kExitNumeric;
  } catch (const NumericError& e) {
    report_error(err, "numeric", e.what(), kExitNumeric);
    return kExitNumeric;
  } catch (const Error& e) {
    report_error(err, "config", e.what(), kExitConfig);
    return kExitConfig;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what(), kExitCheckFailed);
    return kExitCheckFailed;
  }
}

}  // namespace srl
