// SPDX-License-Identifier: Apache-2.0

#include "srl/eval.hpp"

#include <charconv>
#include <cmath>
#include <exception>
#include <sstream>

#include "json.hpp"
#include "srl/errors.hpp"
#include "srl/instances.hpp"
#include "srl/metrics.hpp"
#include "srl/train.hpp"

namespace srl {

using nlohmann::json;

namespace {

json head_json(const HeadScores& s) {
  json j{{"top1", s.top1}, {"top5", s.top5}};
  j["mean_top5_recall"] = s.mean_top5_recall ? json(*s.mean_top5_recall) : json(nullptr);
  return j;
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

// Runs body(i) for i in [0, n) across threads and rethrows the first error
// in index order.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(threads, 1)) if (threads > 1)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    try {
      body(static_cast<std::size_t>(k));
    } catch (...) {
      errors[static_cast<std::size_t>(k)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

HeadScores score_head(const Distributions& preds, const std::vector<int>& labels,
                      const std::vector<int>& many_shot) {
  HeadScores s;
  s.top1 = topk_accuracy(preds, labels, 1);
  s.top5 = topk_accuracy(preds, labels, 5);
  if (!many_shot.empty()) {
    try {
      s.mean_top5_recall = mean_topk_recall(preds, labels, 5, many_shot);
    } catch (const MetricError&) {
      // No many-shot class occurs at this horizon.
    }
  }
  return s;
}

}  // namespace

std::string EvalReport::to_json() const {
  json j;
  j["protocol"] = protocol;
  j["instances"] = instances;
  j["skipped"] = skipped;
  json hs = json::array();
  for (const auto& h : horizons) {
    hs.push_back({{"horizon", h.horizon},
                  {"seconds", h.seconds},
                  {"count", h.count},
                  {"activity", head_json(h.activity)},
                  {"verb", head_json(h.verb)},
                  {"noun", head_json(h.noun)}});
  }
  j["horizons"] = hs;
  json ds = json::array();
  for (const auto& d : dense) {
    ds.push_back({{"observed_fraction", d.observed_fraction},
                  {"predicted_fraction", d.predicted_fraction},
                  {"mean_class_accuracy", d.mean_class_accuracy},
                  {"frames", d.frames}});
  }
  j["dense"] = ds;
  return j.dump(2);
}

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  if (!horizons.empty()) {
    out << "horizon,seconds,count,activity_top1,activity_top5,activity_mt5r,verb_top1,verb_top5,"
           "verb_mt5r,noun_top1,noun_top5,noun_mt5r\n";
    for (const auto& h : horizons) {
      out << h.horizon << ',' << fmt(h.seconds) << ',' << h.count;
      for (const HeadScores* s : {&h.activity, &h.verb, &h.noun}) {
        out << ',' << fmt(s->top1) << ',' << fmt(s->top5) << ',' << fmt_opt(s->mean_top5_recall);
      }
      out << '\n';
    }
  }
  if (!dense.empty()) {
    out << "observed_fraction,predicted_fraction,mean_class_accuracy,frames\n";
    for (const auto& d : dense) {
      out << fmt(d.observed_fraction) << ',' << fmt(d.predicted_fraction) << ','
          << fmt(d.mean_class_accuracy) << ',' << d.frames << '\n';
    }
  }
  return out.str();
}

const HorizonReport& EvalReport::at_horizon(std::size_t h) const {
  for (const auto& r : horizons) {
    if (r.horizon == h) return r;
  }
  throw IndexError("report has no horizon " + std::to_string(h));
}

EvalReport evaluate_egocentric(const SrlModel& model, const Dataset& data, std::size_t o,
                               std::size_t a, int threads) {
  if (o == 0 || a == 0) throw ParameterError("o and a must be >= 1");
  if (model.config().dim != data.dim) {
    throw ConfigError("model dim " + std::to_string(model.config().dim) +
                      " does not match feature dim " + std::to_string(data.dim));
  }
  EvalReport report;
  report.protocol = "egocentric";
  std::vector<AnticipationInstance> instances;
  for (const auto& seq : data.videos) {
    InstanceSet set = make_instances_egocentric(seq, o, a);
    report.skipped += set.skipped;
    for (auto& inst : set.instances) instances.push_back(std::move(inst));
  }
  report.instances = instances.size();
  if (instances.empty()) return report;

  std::vector<HorizonPrediction> preds(instances.size());
  parallel_for(instances.size(), threads, [&](std::size_t i) {
    preds[i] = rollout(model, instances[i].observed, {instances[i].horizon}).horizons.front();
  });

  for (std::size_t h = 1; h <= a; ++h) {
    Distributions pa, pv, pn;
    std::vector<int> la, lv, ln;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      if (instances[i].horizon != h) continue;
      pa.push_back(preds[i].p_activity);
      pv.push_back(preds[i].p_verb);
      pn.push_back(preds[i].p_noun);
      la.push_back(instances[i].labels.activity);
      lv.push_back(instances[i].labels.verb);
      ln.push_back(instances[i].labels.noun);
    }
    if (la.empty()) continue;
    HorizonReport hr;
    hr.horizon = h;
    hr.seconds = static_cast<double>(h) * data.delta_s;
    hr.count = la.size();
    hr.activity = score_head(pa, la, data.many_shot.activities);
    hr.verb = score_head(pv, lv, data.many_shot.verbs);
    hr.noun = score_head(pn, ln, data.many_shot.nouns);
    report.horizons.push_back(std::move(hr));
  }
  return report;
}

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t o) {
  if (n == 0 || o == 0) throw ParameterError("subsampling needs n >= 1 and o >= 1");
  std::vector<std::size_t> idx(o);
  for (std::size_t i = 0; i < o; ++i) idx[i] = (i + 1) * n / o - ((i + 1) * n / o > 0 ? 1 : 0);
  return idx;
}

std::vector<int> ModelDensePredictor::predict(const FeatureSequence& seq, std::size_t observed,
                                              std::size_t count) const {
  if (count == 0) return {};
  const auto idx = subsample_indices(observed, o_);
  Matrix obs(o_, seq.dim);
  for (std::size_t i = 0; i < o_; ++i) {
    const auto src = seq.frames.row(idx[i]);
    std::copy(src.begin(), src.end(), obs.row(i).begin());
  }
  std::vector<std::size_t> horizons(count);
  for (std::size_t h = 0; h < count; ++h) horizons[h] = h + 1;
  const PredictionResult result = rollout(model_, obs, horizons);
  std::vector<int> out(count);
  for (std::size_t h = 0; h < count; ++h) {
    out[h] = static_cast<int>(argmax(result.horizons[h].p_activity));
  }
  return out;
}

EvalReport evaluate_dense(const DensePredictor& predictor, const Dataset& data,
                          double observed_fraction, const std::vector<double>& predicted_fractions,
                          int threads) {
  if (!(observed_fraction > 0.0 && observed_fraction < 1.0)) {
    throw ParameterError("observed fraction must lie in (0, 1)");
  }
  if (predicted_fractions.empty()) throw ParameterError("no predicted fractions requested");
  for (double f : predicted_fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ParameterError("predicted fractions must lie in (0, 1]");
  }
  auto frames_for = [](double fraction, std::size_t t) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(t) + 1e-9));
  };

  EvalReport report;
  report.protocol = "dense";
  const std::size_t nv = data.videos.size();
  std::vector<std::vector<int>> predicted(nv);
  std::vector<std::size_t> observed(nv, 0);
  for (std::size_t v = 0; v < nv; ++v) {
    observed[v] = frames_for(observed_fraction, data.videos[v].length());
    if (observed[v] == 0 || observed[v] >= data.videos[v].length()) ++report.skipped;
  }
  parallel_for(nv, threads, [&](std::size_t v) {
    const auto& seq = data.videos[v];
    if (observed[v] == 0 || observed[v] >= seq.length()) return;
    std::size_t longest = 0;
    for (double f : predicted_fractions) {
      longest = std::max(longest, std::min(frames_for(f, seq.length()), seq.length() - observed[v]));
    }
    predicted[v] = predictor.predict(seq, observed[v], longest);
    if (predicted[v].size() != longest) throw InputError("dense predictor returned a wrong length");
  });

  for (double f : predicted_fractions) {
    std::vector<int> hard, truth;
    for (std::size_t v = 0; v < nv; ++v) {
      const auto& seq = data.videos[v];
      if (observed[v] == 0 || observed[v] >= seq.length()) continue;
      const auto labels = seq.frame_labels();
      const std::size_t count = std::min(frames_for(f, seq.length()), seq.length() - observed[v]);
      for (std::size_t k = 0; k < count; ++k) {
        const int label = labels[observed[v] + k];
        if (label == kNoLabel) continue;
        hard.push_back(predicted[v][k]);
        truth.push_back(label);
      }
    }
    DenseFractionReport d;
    d.observed_fraction = observed_fraction;
    d.predicted_fraction = f;
    d.frames = truth.size();
    d.mean_class_accuracy = truth.empty() ? 0.0 : mean_class_accuracy(hard, truth);
    report.dense.push_back(d);
  }
  report.instances = nv - report.skipped;
  return report;
}

std::vector<AblationVariant> ablation_variants() {
  return {
      {"Baseline", false, false, false},   {"+Rev", true, false, false},
      {"+Rea", false, true, false},        {"+SecCon", false, false, true},
      {"+Rev&Rea", true, true, false},     {"+Rev&SecCon", true, false, true},
      {"+Rea&SecCon", false, true, true},  {"SRL", true, true, true},
  };
}

std::vector<AblationRun> run_ablation(const Dataset& train_data, const Dataset& test_data,
                                      const AblationSettings& settings) {
  if (settings.seeds.empty()) throw ParameterError("ablation needs at least one seed");
  if (settings.train.protocol != Protocol::Egocentric) {
    throw ConfigError("the ablation grid is scored with the segment-level protocol");
  }
  ModelConfig base = settings.model;
  fit_model_config_to(base, train_data);
  std::vector<AblationRun> runs;
  for (std::uint64_t seed : settings.seeds) {
    TrainConfig tc = settings.train;
    tc.optim.seed = seed;
    const TrainingData prepared = prepare_training_data(train_data, tc, seed);
    for (const auto& variant : ablation_variants()) {
      ModelConfig mc = base;
      mc.use_revision = variant.revision;
      mc.use_reattend = variant.reattend;
      mc.use_semantic_context = variant.semantic_context;
      SrlModel model = make_model(mc, seed);
      train_on(model, prepared, tc);
      AblationRun run;
      run.variant = variant;
      run.seed = seed;
      run.report = evaluate_egocentric(model, test_data, tc.observed, tc.anticipated, tc.threads);
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

double ablation_mean_top1(const std::vector<AblationRun>& runs, const std::string& variant,
                          std::size_t horizon) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (r.variant.name != variant) continue;
    sum += r.report.at_horizon(horizon).activity.top1;
    ++n;
  }
  if (n == 0) throw InputError("no ablation runs for variant " + variant);
  return sum / static_cast<double>(n);
}

std::string ablation_csv(const std::vector<AblationRun>& runs) {
  std::ostringstream out;
  out << "configuration,revision,reattend,semantic_context,horizon,seeds,activity_top1,"
         "activity_top5,verb_top1,verb_top5,noun_top1,noun_top5\n";
  for (const auto& variant : ablation_variants()) {
    std::vector<const AblationRun*> mine;
    for (const auto& r : runs) {
      if (r.variant.name == variant.name) mine.push_back(&r);
    }
    if (mine.empty()) continue;
    for (const auto& h : mine.front()->report.horizons) {
      double acc[6] = {0, 0, 0, 0, 0, 0};
      for (const AblationRun* r : mine) {
        const auto& hr = r->report.at_horizon(h.horizon);
        acc[0] += hr.activity.top1;
        acc[1] += hr.activity.top5;
        acc[2] += hr.verb.top1;
        acc[3] += hr.verb.top5;
        acc[4] += hr.noun.top1;
        acc[5] += hr.noun.top5;
      }
      out << variant.name << ',' << variant.revision << ',' << variant.reattend << ','
          << variant.semantic_context << ',' << h.horizon << ',' << mine.size();
      for (double v : acc) out << ',' << fmt(v / static_cast<double>(mine.size()));
      out << '\n';
    }
  }
  return out.str();
}

std::vector<GridPoint> grid_search_alpha_beta(const Dataset& train_data, const Dataset& val_data,
                                              const ModelConfig& model, const TrainConfig& train,
                                              const std::vector<double>& alphas,
                                              const std::vector<double>& betas) {
  ModelConfig base = model;
  fit_model_config_to(base, train_data);
  const TrainingData prepared = prepare_training_data(train_data, train, train.optim.seed);
  std::vector<GridPoint> out;
  for (double alpha : alphas) {
    for (double beta : betas) {
      ModelConfig mc = base;
      mc.alpha = alpha;
      mc.beta = beta;
      SrlModel m = make_model(mc, train.optim.seed);
      train_on(m, prepared, train);
      const EvalReport r =
          evaluate_egocentric(m, val_data, train.observed, train.anticipated, train.threads);
      double sum = 0.0;
      for (const auto& h : r.horizons) sum += h.activity.top1;
      out.push_back({alpha, beta, r.horizons.empty() ? 0.0 : sum / static_cast<double>(r.horizons.size())});
    }
  }
  return out;
}

}  // namespace srl
