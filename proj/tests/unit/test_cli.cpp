// SPDX-License-Identifier: Apache-2.0
//
// Drives the srl executable end to end through a shell.

#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "json.hpp"
#include "support/oracles.hpp"

#ifndef SRL_CLI_PATH
#error "SRL_CLI_PATH must point at the srl executable"
#endif

namespace {

using nlohmann::json;
using srl::test::TempDir;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run srl_run(const TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.path().string() + "' && '" SRL_CLI_PATH "' " + args +
                          " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = srl::test::read_file(out);
  r.err = srl::test::read_file(err);
  std::filesystem::remove(out);
  std::filesystem::remove(err);
  return r;
}

std::vector<json> json_lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

std::vector<json> events(const std::string& text, const std::string& name) {
  std::vector<json> out;
  for (auto& j : json_lines(text)) {
    if (j.value("event", "") == name) out.push_back(j);
  }
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

const std::string kSmallSynth = "synth --classes 6 --nouns 3 --dim 4 --videos 6 --segments-per-video 5";
const std::string kQuickTrain =
    "--preset epic-desk --epochs 2 --observed 3 --anticipated 2 --samples 4";

}  // namespace

TEST_CASE("synth output is a pure function of the seed", "[cli]") {
  TempDir dir;
  REQUIRE(srl_run(dir, kSmallSynth + " --seed 3 --out a").code == 0);
  REQUIRE(srl_run(dir, kSmallSynth + " --seed 3 --out b").code == 0);
  REQUIRE(srl_run(dir, kSmallSynth + " --seed 4 --out c").code == 0);
  const auto a = srl::test::snapshot_tree(dir / "a");
  CHECK(a.size() >= 4);
  CHECK(a.count("meta.json") == 1);
  CHECK(a.count("annotations.jsonl") == 1);
  CHECK(a.count("vocab.json") == 1);
  CHECK(a == srl::test::snapshot_tree(dir / "b"));
  CHECK(a != srl::test::snapshot_tree(dir / "c"));
}

TEST_CASE("invalid synth settings fail without writing", "[cli]") {
  TempDir dir;
  const Run r = srl_run(dir, "synth --classes 1 --out bad");
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
  CHECK_FALSE(std::filesystem::exists(dir / "bad"));
  CHECK(srl_run(dir, "synth").code == 2);
  CHECK(srl_run(dir, "frobnicate").code == 2);
}

TEST_CASE("training twice with one seed writes identical checkpoints", "[cli]") {
  TempDir dir;
  REQUIRE(srl_run(dir, kSmallSynth + " --out d").code == 0);
  const Run a = srl_run(dir, "train --data d --out a.ckpt --seed 7 " + kQuickTrain);
  const Run b = srl_run(dir, "train --data d --out b.ckpt --seed 7 " + kQuickTrain);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(events(a.out, "epoch") == events(b.out, "epoch"));
  CHECK(srl::test::read_file(dir / "a.ckpt") == srl::test::read_file(dir / "b.ckpt"));
  CHECK(srl::test::read_file(dir / "a.ckpt").substr(0, 8) == "SRLCKPT1");
  const Run c = srl_run(dir, "train --data d --out c.ckpt --seed 8 " + kQuickTrain);
  CHECK(srl::test::read_file(dir / "a.ckpt") != srl::test::read_file(dir / "c.ckpt"));

  const auto epochs = events(a.out, "epoch");
  REQUIRE(epochs.size() == 2);
  for (const auto& e : epochs) {
    for (const char* key : {"loss", "L_a", "L_v", "L_n", "L_rev", "lr", "epoch"}) {
      CHECK(e.contains(key));
    }
  }

  // Eval reports are reproducible too.
  const Run ea = srl_run(dir, "eval --checkpoint a.ckpt --data d --out-json ea.json --out-csv ea.csv");
  const Run eb = srl_run(dir, "eval --checkpoint b.ckpt --data d --out-json eb.json --out-csv eb.csv");
  REQUIRE(ea.code == 0);
  REQUIRE(eb.code == 0);
  CHECK(srl::test::read_file(dir / "ea.json") == srl::test::read_file(dir / "eb.json"));
  CHECK(srl::test::read_file(dir / "ea.csv") == srl::test::read_file(dir / "eb.csv"));
  CHECK(lines_of(srl::test::read_file(dir / "ea.csv")).size() == 1 + 2);
}

TEST_CASE("loss weights reach the training objective", "[cli]") {
  TempDir dir;
  REQUIRE(srl_run(dir, kSmallSynth + " --out d").code == 0);
  const Run no_rev = srl_run(dir, "train --data d --out a.ckpt --beta 0 " + kQuickTrain);
  REQUIRE(no_rev.code == 0);
  for (const auto& e : events(no_rev.out, "epoch")) {
    // The revision term is still measured and logged when its weight is zero.
    CHECK(e.at("L_rev").get<double>() > 0.0);
  }
  const Run only_act = srl_run(dir, "train --data d --out b.ckpt --alpha 0 --beta 0 " + kQuickTrain);
  REQUIRE(only_act.code == 0);
  const auto epochs = events(only_act.out, "epoch");
  REQUIRE(epochs.size() == 2);
  for (const auto& e : epochs) {
    CHECK(std::abs(e.at("loss").get<double>() - e.at("L_a").get<double>()) <= 1e-12);
  }
}

TEST_CASE("resuming from the cli matches an uninterrupted run", "[cli]") {
  TempDir dir;
  REQUIRE(srl_run(dir, kSmallSynth + " --out d").code == 0);
  const std::string base = "train --data d --preset epic-desk --observed 3 --anticipated 2 --samples 4";
  REQUIRE(srl_run(dir, base + " --epochs 3 --out full.ckpt").code == 0);
  REQUIRE(srl_run(dir, base + " --epochs 1 --out part.ckpt").code == 0);
  const Run resumed = srl_run(dir, base + " --epochs 3 --resume part.ckpt --out resumed.ckpt");
  REQUIRE(resumed.code == 0);
  CHECK(events(resumed.out, "epoch").size() == 2);
  CHECK(srl::test::read_file(dir / "full.ckpt") == srl::test::read_file(dir / "resumed.ckpt"));
  CHECK(srl_run(dir, base + " --epochs 3 --lr 0.5 --resume part.ckpt --out x.ckpt").code == 2);
}

TEST_CASE("gradcheck subcommand", "[cli]") {
  TempDir dir;
  const Run ok = srl_run(dir, "gradcheck");
  CHECK(ok.code == 0);
  const auto reports = events(ok.out, "gradcheck");
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].at("report").at("passed") == true);

  const Run bad = srl_run(dir, "gradcheck --corrupt gru1.W_z");
  CHECK(bad.code == 1);
  CHECK(bad.err.find("gru1.W_z") != std::string::npos);

  CHECK(srl_run(dir, "gradcheck --samples 1").code == 0);
  CHECK(srl_run(dir, "gradcheck --aggregator lstm").code == 0);
  CHECK(srl_run(dir, "gradcheck --corrupt no.such.param").code == 2);
}

TEST_CASE("configuration errors exit with code 2", "[cli]") {
  TempDir dir;
  REQUIRE(srl_run(dir, kSmallSynth + " --out d").code == 0);
  REQUIRE(srl_run(dir, "synth --classes 6 --nouns 3 --dim 5 --videos 3 --out wide").code == 0);
  REQUIRE(srl_run(dir, "train --data d --out a.ckpt " + kQuickTrain).code == 0);

  const Run mismatch = srl_run(dir, "eval --checkpoint a.ckpt --data wide");
  CHECK(mismatch.code == 2);
  CHECK_FALSE(mismatch.err.empty());

  srl::test::write_file(dir / "typo.json", R"({"learning_rate": 0.1})");
  CHECK(srl_run(dir, "train --data d --out b.ckpt --config typo.json").code == 2);
  srl::test::write_file(dir / "ok.json", R"({"lr": 0.01, "epochs": 1, "observed": 3, "anticipated": 2})");
  const Run with_config = srl_run(dir, "train --data d --out c.ckpt --config ok.json --epochs 2");
  CHECK(with_config.code == 0);
  const auto cfg = events(with_config.out, "config");
  REQUIRE(cfg.size() == 1);
  CHECK(cfg[0].at("train").at("lr") == 0.01);
  CHECK(cfg[0].at("train").at("epochs") == 2);  // flags override the file

  CHECK(srl_run(dir, "train --data missing --out x.ckpt").code == 2);
  CHECK(srl_run(dir, "train --data d --out x.ckpt --aggregator cnn").code == 2);
  CHECK(srl_run(dir, "train --data d --out x.ckpt --dropout 1.5").code == 2);
  srl::test::write_file(dir / "junk.ckpt", "nope");
  CHECK(srl_run(dir, "eval --checkpoint junk.ckpt --data d").code == 2);
}

TEST_CASE("logs can go to a file", "[cli]") {
  TempDir dir;
  REQUIRE(srl_run(dir, kSmallSynth + " --out d").code == 0);
  const Run r = srl_run(dir, "train --data d --out a.ckpt --log-file log.jsonl " + kQuickTrain);
  REQUIRE(r.code == 0);
  CHECK(events(r.out, "epoch").empty());
  CHECK(events(srl::test::read_file(dir / "log.jsonl"), "epoch").size() == 2);
}

TEST_CASE("ablate writes eight configurations per horizon", "[cli]") {
  TempDir dir;
  REQUIRE(srl_run(dir, kSmallSynth + " --out d").code == 0);
  const Run r = srl_run(dir, "ablate --data d --out abl.csv --seeds 1 --preset epic-desk --epochs 1 "
                             "--observed 3 --anticipated 2 --samples 4 --test-fraction 0.34");
  REQUIRE(r.code == 0);
  const auto rows = lines_of(srl::test::read_file(dir / "abl.csv"));
  REQUIRE(rows.size() == 1 + 8 * 2);
  const std::vector<std::string> names = {"Baseline", "+Rev",        "+Rea",        "+SecCon",
                                          "+Rev&Rea", "+Rev&SecCon", "+Rea&SecCon", "SRL"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    CHECK(rows[1 + 2 * i].rfind(names[i] + ",", 0) == 0);
    CHECK(rows[2 + 2 * i].rfind(names[i] + ",", 0) == 0);
  }
}

TEST_CASE("dense training and evaluation", "[cli]") {
  TempDir dir;
  REQUIRE(srl_run(dir, kSmallSynth + " --out d").code == 0);
  const Run t = srl_run(dir, "train --data d --out dense.ckpt --preset dense-desk --epochs 1 "
                             "--observed 4 --anticipated 4 --dense-stride 8 --samples 4");
  REQUIRE(t.code == 0);
  const Run e = srl_run(dir, "eval --checkpoint dense.ckpt --data d --out-csv dense.csv");
  REQUIRE(e.code == 0);
  const auto rows = lines_of(srl::test::read_file(dir / "dense.csv"));
  REQUIRE(rows.size() == 1 + 2 * 4);
  CHECK(rows[0] == "observed_fraction,predicted_fraction,mean_class_accuracy,frames");
  CHECK(rows[1].rfind("0.2,0.1,", 0) == 0);
  CHECK(rows[8].rfind("0.3,0.5,", 0) == 0);
  const Run custom = srl_run(dir, "eval --checkpoint dense.ckpt --data d --observed-fractions 0.5 "
                                  "--out-csv one.csv");
  REQUIRE(custom.code == 0);
  CHECK(lines_of(srl::test::read_file(dir / "one.csv")).size() == 1 + 4);
}

TEST_CASE("rollout reports the requested horizons", "[cli]") {
  TempDir dir;
  REQUIRE(srl_run(dir, kSmallSynth + " --out d").code == 0);
  REQUIRE(srl_run(dir, "train --data d --out a.ckpt " + kQuickTrain).code == 0);
  const Run r = srl_run(dir, "rollout --checkpoint a.ckpt --data d --video vid0 --end-frame 12 "
                             "--horizons 1 2 5");
  REQUIRE(r.code == 0);
  const auto out = events(r.out, "rollout");
  REQUIRE(out.size() == 1);
  CHECK(out[0].dump().find("\"horizon\":5") != std::string::npos);
  CHECK(srl_run(dir, "rollout --checkpoint a.ckpt --data d --video nope").code == 2);
}
