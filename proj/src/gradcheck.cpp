// SPDX-License-Identifier: Apache-2.0

#include "srl/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "srl/errors.hpp"
#include "srl/rng.hpp"

namespace srl {

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kRelErrorFloor});
  return std::abs(analytic - numeric) / scale;
}

std::string GradcheckReport::to_json() const {
  nlohmann::json j;
  j["passed"] = passed;
  j["worst_rel_error"] = worst_rel_error;
  j["worst_param"] = worst_param;
  nlohmann::json ps = nlohmann::json::array();
  for (const auto& p : params) {
    ps.push_back({{"name", p.name},
                  {"max_rel_error", p.max_rel_error},
                  {"index", p.worst_index},
                  {"analytic", p.analytic},
                  {"numeric", p.numeric}});
  }
  j["params"] = ps;
  return j.dump();
}

GradcheckProblem make_gradcheck_problem(const GradcheckConfig& cfg) {
  if (cfg.dim == 0 || cfg.observed == 0 || cfg.horizon == 0 || cfg.num_classes < 2) {
    throw ParameterError("gradcheck needs dim, o, horizon >= 1 and >= 2 classes");
  }
  if (!(cfg.step > 0.0)) throw ParameterError("gradcheck step must be > 0");
  ModelConfig mc;
  mc.dim = cfg.dim;
  mc.aggregator = cfg.aggregator;
  mc.num_activities = cfg.num_classes;
  mc.num_verbs = cfg.num_classes;
  mc.num_nouns = cfg.num_classes;
  mc.dropout = 0.0;
  mc.alpha = cfg.alpha;
  mc.beta = cfg.beta;
  mc.num_samples = cfg.num_samples;

  auto rng = make_stream(cfg.seed, Stream::Init);
  SrlModel model(mc);
  model.init(rng);
  // Nonzero biases so their gradients are exercised away from the origin.
  std::normal_distribution<double> gauss(0.0, 0.3);
  for (auto& p : model.params().all()) {
    if (p.shape.size() == 1) {
      for (auto& v : p.values) v = gauss(rng);
    }
  }

  auto data_rng = make_stream(cfg.seed, Stream::Synth);
  auto fill = [&](Matrix& m) {
    for (auto& v : m.data) v = gauss(data_rng) * 2.0;
  };
  AnticipationInstance inst;
  inst.video_id = "v0";
  inst.observed = Matrix(cfg.observed, cfg.dim);
  fill(inst.observed);
  inst.future = Matrix(cfg.horizon, cfg.dim);
  fill(inst.future);
  inst.horizon = cfg.horizon;
  inst.future_activity.assign(cfg.horizon, 0);
  for (std::size_t t = 0; t < cfg.horizon; ++t) {
    inst.future_activity[t] = static_cast<int>(t % cfg.num_classes);
  }
  inst.labels = {static_cast<int>(cfg.num_classes - 1), 1, 0};

  NegativeBank bank;
  for (std::size_t k = 0; k < 4 * cfg.num_classes; ++k) {
    BankEntry e;
    e.feature.resize(cfg.dim);
    for (auto& v : e.feature) v = gauss(data_rng) * 2.0;
    e.activity_id = static_cast<int>(k % cfg.num_classes);
    e.video_id = k % 2 == 0 ? "v0" : "v1";
    bank.add(std::move(e));
  }
  return GradcheckProblem{std::move(model), std::move(inst), std::move(bank)};
}

namespace {

InstanceRng fixed_rng(std::uint64_t seed) {
  return InstanceRng{make_stream(seed, Stream::Dropout), make_stream(seed, Stream::Sampling)};
}

}  // namespace

double gradcheck_loss(const GradcheckProblem& problem, std::uint64_t seed) {
  Graph graph;
  Scope scope(graph, problem.model.params());
  InstanceRng rng = fixed_rng(seed);
  return forward_loss(scope, problem.model, problem.instance, &problem.bank, rng, false).total.item();
}

GradcheckReport run_gradcheck(const GradcheckConfig& cfg, const GradientHook& hook) {
  GradcheckProblem problem = make_gradcheck_problem(cfg);
  GradientSet analytic;
  {
    Graph graph;
    Scope scope(graph, problem.model.params());
    InstanceRng rng = fixed_rng(cfg.seed);
    const LossTerms terms =
        forward_loss(scope, problem.model, problem.instance, &problem.bank, rng, false);
    graph.backward(terms.total);
    analytic = scope.gradients();
  }
  if (hook) hook(problem.model.params(), analytic);

  GradcheckReport report;
  auto& params = problem.model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamCheck check;
    check.name = params[i].name;
    auto& values = params[i].values;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + cfg.step;
      const double up = gradcheck_loss(problem, cfg.seed);
      values[k] = saved - cfg.step;
      const double down = gradcheck_loss(problem, cfg.seed);
      values[k] = saved;
      const double numeric = (up - down) / (2.0 * cfg.step);
      const double err = relative_error(analytic[i][k], numeric);
      if (err > check.max_rel_error || k == 0) {
        check.max_rel_error = err;
        check.worst_index = k;
        check.analytic = analytic[i][k];
        check.numeric = numeric;
      }
    }
    if (check.max_rel_error > report.worst_rel_error || report.worst_param.empty()) {
      report.worst_rel_error = check.max_rel_error;
      report.worst_param = check.name;
    }
    report.params.push_back(std::move(check));
  }
  report.passed = report.worst_rel_error < cfg.tolerance;
  return report;
}

}  // namespace srl
