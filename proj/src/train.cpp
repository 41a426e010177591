// SPDX-License-Identifier: Apache-2.0

#include "srl/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"
#include "srl/instances.hpp"
#include "srl/rng.hpp"

namespace srl {

using nlohmann::json;

bool LossComponents::finite() const {
  return std::isfinite(total) && std::isfinite(activity) && std::isfinite(verb) &&
         std::isfinite(noun) && std::isfinite(revision);
}

namespace {

json components_json(const LossComponents& c) {
  // JSON has no NaN; non-finite values are rendered as strings.
  auto num = [](double v) -> json {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  };
  return json{{"loss", num(c.total)},
              {"L_a", num(c.activity)},
              {"L_v", num(c.verb)},
              {"L_n", num(c.noun)},
              {"L_rev", num(c.revision)}};
}

std::string abort_message(std::size_t epoch, std::size_t batch, const LossComponents& c) {
  return "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
         std::to_string(batch) + ": " + components_json(c).dump();
}

void add_into(LossComponents& dst, const LossComponents& src) {
  dst.total += src.total;
  dst.activity += src.activity;
  dst.verb += src.verb;
  dst.noun += src.noun;
  dst.revision += src.revision;
}

LossComponents divided(LossComponents c, double n) {
  c.total /= n;
  c.activity /= n;
  c.verb /= n;
  c.noun /= n;
  c.revision /= n;
  return c;
}

BatchResult reduce(const SrlModel& model, const std::vector<InstanceGradient>& parts) {
  BatchResult out;
  out.count = parts.size();
  out.grads = model.params().zero_gradients();
  LossComponents sum;
  for (const auto& part : parts) {
    add_into(sum, part.loss);
    accumulate_sparse(out.grads, part.grads);
  }
  out.sum = sum;
  if (out.count == 0) return out;
  const double n = static_cast<double>(out.count);
  out.mean = divided(sum, n);
  for (auto& g : out.grads) {
    for (auto& v : g) v /= n;
  }
  return out;
}

}  // namespace

TrainingAborted::TrainingAborted(std::size_t epoch, std::size_t batch, const LossComponents& loss)
    : NumericError(abort_message(epoch, batch, loss)), epoch_(epoch), batch_(batch), loss_(loss) {}

std::string TrainingAborted::diagnostics_json() const {
  json j = components_json(loss_);
  j["error"] = "numeric_abort";
  j["epoch"] = epoch_;
  j["batch"] = batch_;
  return j.dump();
}

std::string EpochLog::to_json() const {
  json j = components_json(mean);
  j["epoch"] = epoch;
  j["lr"] = lr;
  j["instances"] = instances;
  j["batches"] = batches;
  return j.dump();
}

TrainingData prepare_training_data(const Dataset& data, const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  TrainingData out;
  for (const auto& seq : data.videos) {
    if (cfg.protocol == Protocol::Egocentric) {
      InstanceSet set = make_instances_egocentric(seq, cfg.observed, cfg.anticipated);
      out.skipped_segments += set.skipped;
      for (auto& inst : set.instances) out.instances.push_back(std::move(inst));
    } else {
      const auto windows =
          make_instances_dense(seq, data.vocab, cfg.observed, cfg.anticipated, cfg.dense_stride);
      for (const auto& w : windows) {
        auto expanded = expand_horizons(w, data.vocab);
        out.unlabeled_windows += w.horizon - expanded.size();
        for (auto& inst : expanded) out.instances.push_back(std::move(inst));
      }
    }
  }
  auto rng = make_stream(seed, Stream::Bank);
  out.bank = NegativeBank::from_dataset(data, rng);
  return out;
}

InstanceRng instance_rng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t position) {
  return InstanceRng{make_stream(seed, Stream::Dropout, epoch, position),
                     make_stream(seed, Stream::Sampling, epoch, position)};
}

InstanceGradient instance_gradient(const SrlModel& model, const AnticipationInstance& instance,
                                   const NegativeBank* bank, InstanceRng& rng) {
  Graph graph;
  Scope scope(graph, model.params());
  const LossTerms terms = forward_loss(scope, model, instance, bank, rng, true);
  InstanceGradient out;
  out.loss = {terms.total.item(), terms.activity, terms.verb, terms.noun, terms.revision};
  if (!out.loss.finite()) {
    out.grads.resize(model.params().size());
    return out;
  }
  graph.backward(terms.total);
  out.grads = scope.sparse_gradients();
  return out;
}

BatchResult batch_gradients_serial(const SrlModel& model, const BatchRequest& req) {
  std::vector<InstanceGradient> parts(req.items.size());
  for (std::size_t k = 0; k < req.items.size(); ++k) {
    InstanceRng rng = instance_rng(req.seed, req.epoch, req.first_position + k);
    parts[k] = instance_gradient(model, *req.items[k], req.bank, rng);
  }
  return reduce(model, parts);
}

BatchResult batch_gradients_parallel(const SrlModel& model, const BatchRequest& req, int threads) {
  const auto n = static_cast<std::ptrdiff_t>(req.items.size());
  std::vector<InstanceGradient> parts(req.items.size());
  std::vector<std::exception_ptr> errors(req.items.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(threads, 1))
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    try {
      InstanceRng rng = instance_rng(req.seed, req.epoch, req.first_position + i);
      parts[i] = instance_gradient(model, *req.items[i], req.bank, rng);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return reduce(model, parts);
}

BatchResult batch_gradients(const SrlModel& model, const BatchRequest& req, int threads) {
  if (threads <= 1) return batch_gradients_serial(model, req);
  return batch_gradients_parallel(model, req, threads);
}

SrlModel make_model(const ModelConfig& config, std::uint64_t seed) {
  SrlModel model(config);
  auto rng = make_stream(seed, Stream::Init);
  model.init(rng);
  return model;
}

void fit_model_config_to(ModelConfig& config, const Dataset& data) {
  config.dim = data.dim;
  config.num_activities = data.vocab.num_activities();
  config.num_verbs = data.vocab.num_verbs();
  config.num_nouns = data.vocab.num_nouns();
}

namespace {

void check_compatible(const SrlModel& model, const Dataset& data) {
  const auto& mc = model.config();
  if (mc.dim != data.dim) {
    throw ConfigError("model dim " + std::to_string(mc.dim) + " does not match feature dim " +
                      std::to_string(data.dim));
  }
  if (mc.num_activities != data.vocab.num_activities() || mc.num_verbs != data.vocab.num_verbs() ||
      mc.num_nouns != data.vocab.num_nouns()) {
    throw ConfigError("model class counts do not match the dataset vocabulary");
  }
}

}  // namespace

Checkpoint train(SrlModel& model, const Dataset& data, const TrainConfig& cfg,
                 const TrainCallbacks& callbacks, const Checkpoint* resume) {
  cfg.validate();
  check_compatible(model, data);
  if (data.videos.empty()) throw DataError("train: dataset has no videos");
  const TrainingData prepared = prepare_training_data(data, cfg, cfg.optim.seed);
  return train_on(model, prepared, cfg, callbacks, resume);
}

Checkpoint train_on(SrlModel& model, const TrainingData& data, const TrainConfig& cfg,
                    const TrainCallbacks& callbacks, const Checkpoint* resume) {
  cfg.validate();
  if (data.instances.empty()) throw DataError("train: no training instances");

  OptimizerState state = OptimizerState::for_params(model.params(), cfg.optim.kind);
  std::size_t start_epoch = 0;
  if (resume != nullptr) {
    if (!(resume->model == model.config())) throw CheckpointError("resume: model config differs");
    if (resume->train.hash() != cfg.hash()) throw CheckpointError("resume: training config differs");
    if (resume->seed != cfg.optim.seed) throw CheckpointError("resume: seed differs");
    if (resume->epoch > cfg.optim.epochs) {
      throw CheckpointError("resume: checkpoint is past the requested epoch budget");
    }
    if (resume->optimizer.kind != cfg.optim.kind) throw CheckpointError("resume: optimizer differs");
    restore_parameters(*resume, model);
    state = resume->optimizer;
    start_epoch = resume->epoch;
  }

  const std::size_t n = data.instances.size();
  const std::size_t batch_size = cfg.optim.batch_size;
  std::vector<std::size_t> order(n);
  std::vector<const AnticipationInstance*> items(n);

  for (std::size_t epoch = start_epoch; epoch < cfg.optim.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto shuffle_rng = make_stream(cfg.optim.seed, Stream::Shuffle, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t i = 0; i < n; ++i) items[i] = &data.instances[order[i]];

    OptimizerConfig step_cfg = cfg.optim;
    step_cfg.lr = cfg.optim.lr_at(epoch);

    EpochLog log;
    log.epoch = epoch;
    log.lr = step_cfg.lr;
    LossComponents sum;
    std::size_t batch = 0;
    for (std::size_t first = 0; first < n; first += batch_size, ++batch) {
      const std::size_t count = std::min(batch_size, n - first);
      BatchRequest req;
      req.items = std::span<const AnticipationInstance* const>(items.data() + first, count);
      req.bank = &data.bank;
      req.seed = cfg.optim.seed;
      req.epoch = epoch;
      req.first_position = first;
      const BatchResult result = batch_gradients(model, req, cfg.threads);
      if (!result.mean.finite()) throw TrainingAborted(epoch, batch, result.mean);
      add_into(sum, result.sum);
      if (callbacks.on_batch) callbacks.on_batch(epoch, batch, result.mean);
      optimizer_step(model.params(), result.grads, state, step_cfg);
    }
    log.instances = n;
    log.batches = batch;
    log.mean = divided(sum, static_cast<double>(n));
    if (callbacks.on_epoch) callbacks.on_epoch(log);
  }
  return make_checkpoint(model, cfg, state, std::max<std::size_t>(start_epoch, cfg.optim.epochs));
}

}  // namespace srl
