// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>

#include "srl/errors.hpp"
#include "srl/optim.hpp"

using namespace srl;
using Catch::Approx;

namespace {

ParamSet scalar_params(double w) {
  ParamSet ps;
  ps.add("w", {1});
  ps[0].values = {w};
  return ps;
}

OptimizerConfig sgd(double lr, double momentum, double wd) {
  OptimizerConfig c;
  c.kind = OptimizerKind::Sgd;
  c.lr = lr;
  c.momentum = momentum;
  c.weight_decay = wd;
  return c;
}

OptimizerConfig adam(double lr, double wd = 0.0) {
  OptimizerConfig c;
  c.kind = OptimizerKind::Adam;
  c.lr = lr;
  c.weight_decay = wd;
  return c;
}

}  // namespace

TEST_CASE("sgd examples", "[optim]") {
  {
    ParamSet ps = scalar_params(1.0);
    auto st = OptimizerState::for_params(ps, OptimizerKind::Sgd);
    sgd_step(ps, {{2.0}}, st, sgd(0.1, 0.0, 0.0));
    CHECK(ps[0].values[0] == Approx(0.8).epsilon(1e-15));
    CHECK(st.step == 1);
  }
  {
    ParamSet ps = scalar_params(1.25);
    auto st = OptimizerState::for_params(ps, OptimizerKind::Sgd);
    sgd_step(ps, {{0.0}}, st, sgd(0.1, 0.9, 0.0));
    sgd_step(ps, {{0.0}}, st, sgd(0.1, 0.9, 0.0));
    CHECK(ps[0].values[0] == 1.25);
  }
  {
    ParamSet ps = scalar_params(0.0);
    auto st = OptimizerState::for_params(ps, OptimizerKind::Sgd);
    sgd_step(ps, {{1.0}}, st, sgd(1.0, 0.9, 0.0));
    CHECK(ps[0].values[0] == -1.0);
    sgd_step(ps, {{1.0}}, st, sgd(1.0, 0.9, 0.0));
    CHECK(ps[0].values[0] == Approx(-2.9).epsilon(1e-15));
  }
}

TEST_CASE("weight decay alone shrinks weights geometrically", "[optim][property]") {
  const double lr = 0.1, wd = 0.05, w0 = 3.0;
  ParamSet ps = scalar_params(w0);
  auto st = OptimizerState::for_params(ps, OptimizerKind::Sgd);
  double prev = w0;
  for (int k = 1; k <= 100; ++k) {
    sgd_step(ps, {{0.0}}, st, sgd(lr, 0.0, wd));
    const double w = ps[0].values[0];
    CHECK(w == Approx(prev * (1.0 - lr * wd)).epsilon(1e-15));
    CHECK(w == Approx(w0 * std::pow(1.0 - lr * wd, k)).epsilon(1e-13));
    prev = w;
  }
}

TEST_CASE("adam first step moves by lr", "[optim]") {
  for (double lr : {1e-3, 0.01, 0.5}) {
    ParamSet ps = scalar_params(2.0);
    auto st = OptimizerState::for_params(ps, OptimizerKind::Adam);
    adam_step(ps, {{1.0}}, st, adam(lr));
    CHECK(2.0 - ps[0].values[0] == Approx(lr).epsilon(1e-7));
  }
  ParamSet ps = scalar_params(2.0);
  auto st = OptimizerState::for_params(ps, OptimizerKind::Adam);
  for (int k = 0; k < 3; ++k) adam_step(ps, {{0.0}}, st, adam(0.1));
  CHECK(ps[0].values[0] == 2.0);
}

TEST_CASE("adam three-step trajectory", "[optim]") {
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8, lr = 0.05, wd = 0.01;
  const double grads[3] = {0.5, -1.5, 2.0};
  double w = 1.0, m = 0.0, v = 0.0;
  ParamSet ps = scalar_params(w);
  auto st = OptimizerState::for_params(ps, OptimizerKind::Adam);
  for (int t = 1; t <= 3; ++t) {
    const double g = grads[t - 1] + wd * w;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    w -= lr * mh / (std::sqrt(vh) + eps);
    adam_step(ps, {{grads[t - 1]}}, st, adam(lr, wd));
    CHECK(ps[0].values[0] == Approx(w).epsilon(1e-14));
    CHECK(st.first[0][0] == Approx(m).epsilon(1e-14));
    CHECK(st.second[0][0] == Approx(v).epsilon(1e-14));
  }
}

TEST_CASE("optimizer steps reject incomplete gradients and foreign state", "[optim]") {
  ParamSet ps;
  ps.add("a", {2});
  ps.add("b", {3});
  auto st = OptimizerState::for_params(ps, OptimizerKind::Sgd);
  const auto before = ps.all();
  CHECK_THROWS_AS(sgd_step(ps, {{1, 1}}, st, sgd(0.1, 0.9, 0)), StateError);
  CHECK_THROWS_AS(sgd_step(ps, {{1, 1}, {1}}, st, sgd(0.1, 0.9, 0)), StateError);
  CHECK(ps.all().front().values == before.front().values);
  CHECK_THROWS_AS(adam_step(ps, ps.zero_gradients(), st, adam(0.1)), StateError);
  auto empty = OptimizerState{};
  CHECK_THROWS_AS(sgd_step(ps, ps.zero_gradients(), empty, sgd(0.1, 0.9, 0)), StateError);
}

TEST_CASE("lr zero leaves weights unchanged", "[optim]") {
  ParamSet ps = scalar_params(0.75);
  auto s1 = OptimizerState::for_params(ps, OptimizerKind::Sgd);
  auto s2 = OptimizerState::for_params(ps, OptimizerKind::Adam);
  for (int k = 0; k < 5; ++k) {
    sgd_step(ps, {{3.0}}, s1, sgd(0.0, 0.9, 0.1));
    adam_step(ps, {{-2.0}}, s2, adam(0.0, 0.1));
  }
  CHECK(ps[0].values[0] == 0.75);
}

TEST_CASE("optimizer config validation and schedule", "[optim]") {
  OptimizerConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.lr_at(0) == c.lr);
  CHECK(c.lr_at(99) == c.lr);
  c.lr_decay_every = 10;
  c.lr_decay = 0.5;
  CHECK(c.lr_at(9) == c.lr);
  CHECK(c.lr_at(10) == c.lr * 0.5);
  CHECK(c.lr_at(25) == c.lr * 0.25);

  auto bad = [](auto mutate) {
    OptimizerConfig x;
    mutate(x);
    CHECK_THROWS_AS(x.validate(), ParameterError);
  };
  bad([](OptimizerConfig& x) { x.lr = -1.0; });
  bad([](OptimizerConfig& x) { x.batch_size = 0; });
  bad([](OptimizerConfig& x) { x.momentum = 1.0; });
  bad([](OptimizerConfig& x) { x.beta1 = 0.0; });
  bad([](OptimizerConfig& x) { x.beta2 = 1.0; });
  bad([](OptimizerConfig& x) { x.weight_decay = -0.1; });
  CHECK(parse_optimizer("adam") == OptimizerKind::Adam);
  CHECK_THROWS_AS(parse_optimizer("rmsprop"), ParameterError);
}
