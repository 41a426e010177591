// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernel vs the OpenMP batch-gradient kernel on one batch of
// a synthetic dataset, plus the parallel evaluation pass.

#include <benchmark/benchmark.h>

#include <vector>

#include "srl/eval.hpp"
#include "srl/synth.hpp"
#include "srl/train.hpp"

namespace {

struct Fixture {
  srl::Dataset data;
  srl::TrainingData prepared;
  srl::SrlModel model;
  std::vector<const srl::AnticipationInstance*> batch;

  static Fixture& get() {
    static Fixture f = make();
    return f;
  }

  static Fixture make() {
    srl::SynthConfig sc;
    sc.n_videos = 40;
    srl::Dataset data = srl::generate_synthetic(sc);
    srl::Preset p = srl::preset("epic-desk");
    srl::fit_model_config_to(p.model, data);
    srl::TrainingData prepared = srl::prepare_training_data(data, p.train, 1);
    srl::SrlModel model = srl::make_model(p.model, 1);
    Fixture f{std::move(data), std::move(prepared), std::move(model), {}};
    for (std::size_t i = 0; i < 64 && i < f.prepared.instances.size(); ++i) {
      f.batch.push_back(&f.prepared.instances[i]);
    }
    return f;
  }

  srl::BatchRequest request() const {
    srl::BatchRequest req;
    req.items = batch;
    req.bank = &prepared.bank;
    req.seed = 1;
    return req;
  }
};

void BM_BatchSerial(benchmark::State& state) {
  auto& f = Fixture::get();
  const auto req = f.request();
  for (auto _ : state) benchmark::DoNotOptimize(srl::batch_gradients_serial(f.model, req));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
}
BENCHMARK(BM_BatchSerial)->Unit(benchmark::kMillisecond);

void BM_BatchParallel(benchmark::State& state) {
  auto& f = Fixture::get();
  const auto req = f.request();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(srl::batch_gradients_parallel(f.model, req, threads));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
}
BENCHMARK(BM_BatchParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_EvalEgocentric(benchmark::State& state) {
  auto& f = Fixture::get();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(srl::evaluate_egocentric(f.model, f.data, 6, 8, threads));
}
BENCHMARK(BM_EvalEgocentric)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
