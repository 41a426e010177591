// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"
#include "srl/errors.hpp"
#include "srl/eval.hpp"
#include "srl/instances.hpp"
#include "srl/synth.hpp"
#include "srl/train.hpp"

using namespace srl;

namespace {

Dataset synth(std::size_t videos, std::uint64_t seed = 1, std::size_t dim = 6) {
  SynthConfig c;
  c.n_classes = 8;
  c.n_nouns = 4;
  c.dim = dim;
  c.n_videos = videos;
  c.segments_per_video = 6;
  c.seed = seed;
  return generate_synthetic(c);
}

/// Reads the ground truth back; unlabeled frames become class 0.
class OraclePredictor : public DensePredictor {
 public:
  std::vector<int> predict(const FeatureSequence& seq, std::size_t observed,
                           std::size_t count) const override {
    const auto labels = seq.frame_labels();
    std::vector<int> out;
    for (std::size_t k = 0; k < count; ++k) out.push_back(std::max(0, labels[observed + k]));
    return out;
  }
};

class RandomPredictor : public DensePredictor {
 public:
  explicit RandomPredictor(int classes) : classes_(classes) {}
  std::vector<int> predict(const FeatureSequence& seq, std::size_t observed,
                           std::size_t count) const override {
    std::seed_seq seq_seed(seq.video_id.begin(), seq.video_id.end());
    std::mt19937_64 rng(seq_seed);
    rng.discard(observed);
    std::uniform_int_distribution<int> u(0, classes_ - 1);
    std::vector<int> out(count);
    for (auto& v : out) v = u(rng);
    return out;
  }

 private:
  int classes_;
};

class ConstantPredictor : public DensePredictor {
 public:
  std::vector<int> predict(const FeatureSequence&, std::size_t, std::size_t count) const override {
    return std::vector<int>(count, 0);
  }
};

SrlModel zero_model(const Dataset& d) {
  ModelConfig mc;
  fit_model_config_to(mc, d);
  SrlModel m(mc);
  for (auto& p : m.params().all()) std::fill(p.values.begin(), p.values.end(), 0.0);
  return m;
}

}  // namespace

TEST_CASE("subsample indices", "[eval]") {
  CHECK(subsample_indices(12, 4) == std::vector<std::size_t>{2, 5, 8, 11});
  CHECK(subsample_indices(4, 4) == std::vector<std::size_t>{0, 1, 2, 3});
  // Each index closes one of o equal chunks of the prefix.
  CHECK(subsample_indices(2, 4) == std::vector<std::size_t>{0, 0, 0, 1});
  CHECK(subsample_indices(7, 1) == std::vector<std::size_t>{6});
  for (std::size_t n = 1; n < 60; ++n) {
    for (std::size_t o = 1; o < 20; ++o) {
      const auto idx = subsample_indices(n, o);
      REQUIRE(idx.size() == o);
      CHECK(idx.back() == n - 1);
      CHECK(std::is_sorted(idx.begin(), idx.end()));
    }
  }
  CHECK_THROWS_AS(subsample_indices(0, 3), ParameterError);
  CHECK_THROWS_AS(subsample_indices(3, 0), ParameterError);
}

TEST_CASE("dense evaluation with a perfect predictor scores one", "[eval][dense]") {
  const Dataset d = synth(20);
  for (double obs : {0.2, 0.3}) {
    const EvalReport r = evaluate_dense(OraclePredictor{}, d, obs);
    REQUIRE(r.dense.size() == kDensePredictedFractions.size());
    for (std::size_t i = 0; i < r.dense.size(); ++i) {
      CHECK(r.dense[i].observed_fraction == obs);
      CHECK(r.dense[i].predicted_fraction == kDensePredictedFractions[i]);
      CHECK(r.dense[i].mean_class_accuracy == 1.0);
      CHECK(r.dense[i].frames > 0);
    }
    CHECK(r.protocol == "dense");
    CHECK(r.instances + r.skipped == d.videos.size());
  }
}

TEST_CASE("dense frame counts follow whole-video fractions", "[eval][dense]") {
  const Dataset d = synth(10);
  const EvalReport r = evaluate_dense(ConstantPredictor{}, d, 0.2, {0.1, 0.5, 1.0});
  REQUIRE(r.dense.size() == 3);
  std::vector<std::size_t> expected(3, 0);
  const double fr[3] = {0.1, 0.5, 1.0};
  for (const auto& v : d.videos) {
    const std::size_t t = v.length();
    const std::size_t seen = (t * 2) / 10;
    const auto labels = v.frame_labels();
    for (int i = 0; i < 3; ++i) {
      const std::size_t want = std::min<std::size_t>(
          static_cast<std::size_t>(std::floor(fr[i] * static_cast<double>(t) + 1e-9)), t - seen);
      for (std::size_t k = 0; k < want; ++k) expected[i] += labels[seen + k] != kNoLabel;
    }
  }
  for (int i = 0; i < 3; ++i) CHECK(r.dense[i].frames == expected[i]);
  CHECK(r.dense[0].frames <= r.dense[1].frames);
}

TEST_CASE("dense evaluation of random guessing is near chance", "[eval][dense][statistical]") {
  const Dataset d = synth(200, 4);
  const int classes = static_cast<int>(d.vocab.num_activities());
  const EvalReport r = evaluate_dense(RandomPredictor(classes), d, 0.3, {0.5});
  REQUIRE(r.dense.size() == 1);
  // Class-mean of binomial proportions: variance sum_c p(1-p)/n_c / C^2.
  std::map<int, std::size_t> per_class;
  for (const auto& v : d.videos) {
    const std::size_t t = v.length();
    const std::size_t seen = static_cast<std::size_t>(std::floor(0.3 * t + 1e-9));
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(0.5 * t + 1e-9), t - seen);
    const auto labels = v.frame_labels();
    for (std::size_t k = 0; k < n; ++k) {
      if (labels[seen + k] != kNoLabel) ++per_class[labels[seen + k]];
    }
  }
  const double p = 1.0 / classes;
  double var = 0.0;
  for (const auto& [c, n] : per_class) var += p * (1 - p) / static_cast<double>(n);
  var /= static_cast<double>(per_class.size() * per_class.size());
  CHECK(std::abs(r.dense[0].mean_class_accuracy - p) <= 3.0 * std::sqrt(var));
}

TEST_CASE("dense evaluation rejects bad fractions", "[eval][dense]") {
  const Dataset d = synth(2);
  CHECK_THROWS_AS(evaluate_dense(ConstantPredictor{}, d, 0.0), ParameterError);
  CHECK_THROWS_AS(evaluate_dense(ConstantPredictor{}, d, 1.0), ParameterError);
  CHECK_THROWS_AS(evaluate_dense(ConstantPredictor{}, d, 0.2, {}), ParameterError);
  CHECK_THROWS_AS(evaluate_dense(ConstantPredictor{}, d, 0.2, {1.5}), ParameterError);
}

TEST_CASE("model dense predictor and parallel scoring agree", "[eval][dense]") {
  const Dataset d = synth(6);
  ModelConfig mc;
  fit_model_config_to(mc, d);
  const SrlModel m = make_model(mc, 2);
  const ModelDensePredictor pred(m, 4);
  const auto out = pred.predict(d.videos[0], 10, 7);
  CHECK(out.size() == 7);
  for (int c : out) CHECK((c >= 0 && c < static_cast<int>(mc.num_activities)));
  CHECK(evaluate_dense(pred, d, 0.2, kDensePredictedFractions, 1) ==
        evaluate_dense(pred, d, 0.2, kDensePredictedFractions, 3));
}

TEST_CASE("egocentric evaluation of an untrained model", "[eval]") {
  const Dataset d = synth(12);
  const SrlModel m = zero_model(d);
  const EvalReport r = evaluate_egocentric(m, d, 4, 5);
  REQUIRE(r.horizons.size() == 5);
  // Uniform outputs rank classes by index, so top-1 is the share of class 0
  // and top-5 the share of classes 0..4.
  std::map<std::size_t, std::vector<int>> labels_at;
  std::size_t skipped = 0;
  for (const auto& v : d.videos) {
    const auto set = make_instances_egocentric(v, 4, 5);
    skipped += set.skipped;
    for (const auto& inst : set.instances) labels_at[inst.horizon].push_back(inst.labels.activity);
  }
  CHECK(r.skipped == skipped);
  for (std::size_t h = 1; h <= 5; ++h) {
    const auto& hr = r.at_horizon(h);
    const auto& labels = labels_at[h];
    REQUIRE(hr.count == labels.size());
    const double top1 =
        static_cast<double>(std::count(labels.begin(), labels.end(), 0)) / labels.size();
    const double top5 =
        static_cast<double>(std::count_if(labels.begin(), labels.end(), [](int l) { return l < 5; })) /
        labels.size();
    CHECK(hr.activity.top1 == Catch::Approx(top1).epsilon(1e-12));
    CHECK(hr.activity.top5 == Catch::Approx(top5).epsilon(1e-12));
    CHECK(hr.activity.top5 >= hr.activity.top1);
    CHECK(hr.seconds == Catch::Approx(h * d.delta_s));
  }
  CHECK_THROWS_AS(r.at_horizon(9), IndexError);
  CHECK(evaluate_egocentric(m, d, 4, 5, 2) == r);
}

TEST_CASE("reports serialize to json and csv", "[eval]") {
  const Dataset d = synth(6);
  const SrlModel m = zero_model(d);
  const EvalReport r = evaluate_egocentric(m, d, 3, 4);
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j.at("protocol") == r.protocol);
  CHECK(j.at("horizons").size() == 4);
  CHECK(j.at("horizons")[2].at("horizon") == 3);

  std::istringstream csv(r.to_csv());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0].rfind("horizon,seconds,count,activity_top1", 0) == 0);
  CHECK(lines[1].rfind("1,", 0) == 0);

  const EvalReport dr = evaluate_dense(ConstantPredictor{}, d, 0.2);
  std::istringstream dcsv(dr.to_csv());
  lines.clear();
  while (std::getline(dcsv, line)) lines.push_back(line);
  CHECK(lines.size() == 1 + kDensePredictedFractions.size());
  CHECK(lines[0] == "observed_fraction,predicted_fraction,mean_class_accuracy,frames");
  CHECK(nlohmann::json::parse(dr.to_json()).at("dense").size() == kDensePredictedFractions.size());
}

TEST_CASE("ablation grid covers the eight variants", "[eval][ablation]") {
  const auto variants = ablation_variants();
  const std::vector<std::string> names = {"Baseline", "+Rev",        "+Rea",        "+SecCon",
                                          "+Rev&Rea", "+Rev&SecCon", "+Rea&SecCon", "SRL"};
  REQUIRE(variants.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(variants[i].name == names[i]);
    const int bits = variants[i].revision + variants[i].reattend + variants[i].semantic_context;
    CHECK(bits == (i == 0 ? 0 : i < 4 ? 1 : i < 7 ? 2 : 3));
  }

  const Dataset d = synth(4, 2, 4);
  AblationSettings s;
  fit_model_config_to(s.model, d);
  s.model.num_samples = 4;
  s.train = preset("epic-desk").train;
  s.train.optim.epochs = 1;
  s.train.optim.batch_size = 16;
  s.train.observed = 3;
  s.train.anticipated = 2;
  s.seeds = {1, 2};
  const auto runs = run_ablation(d, d, s);
  REQUIRE(runs.size() == 16);
  for (const auto& run : runs) CHECK(run.report.horizons.size() == 2);
  std::istringstream csv(ablation_csv(runs));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(csv, line)) lines.push_back(line);
  REQUIRE(lines.size() == 1 + 8 * 2);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(lines[1 + 2 * i].rfind(names[i] + ",", 0) == 0);
  }
  double mean = 0.0;
  for (const auto& run : runs) {
    if (run.variant.name == "SRL") mean += run.report.at_horizon(2).activity.top1 / 2.0;
  }
  CHECK(ablation_mean_top1(runs, "SRL", 2) == Catch::Approx(mean).epsilon(1e-14));

  AblationSettings dense = s;
  dense.train.protocol = Protocol::Dense;
  CHECK_THROWS_AS(run_ablation(d, d, dense), ConfigError);
  AblationSettings no_seeds = s;
  no_seeds.seeds.clear();
  CHECK_THROWS_AS(run_ablation(d, d, no_seeds), ParameterError);
}

TEST_CASE("alpha-beta grid returns one point per pair", "[eval]") {
  const Dataset d = synth(3, 3, 4);
  ModelConfig mc;
  fit_model_config_to(mc, d);
  mc.num_samples = 4;
  TrainConfig tc = preset("epic-desk").train;
  tc.optim.epochs = 1;
  tc.observed = 3;
  tc.anticipated = 2;
  const auto grid = grid_search_alpha_beta(d, d, mc, tc, {0.1, 0.5}, {0.0, 0.2, 0.8});
  REQUIRE(grid.size() == 6);
  CHECK(grid[0].alpha == 0.1);
  CHECK(grid[0].beta == 0.0);
  CHECK(grid[5].alpha == 0.5);
  CHECK(grid[5].beta == 0.8);
  for (const auto& g : grid) CHECK((g.top1 >= 0.0 && g.top1 <= 1.0));
}
