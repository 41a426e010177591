// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "srl/data.hpp"
#include "srl/errors.hpp"
#include "srl/instances.hpp"
#include "srl/negatives.hpp"
#include "srl/synth.hpp"
#include "support/oracles.hpp"

using namespace srl;
using test::TempDir;

namespace {

LabelVocab small_vocab() {
  return build_vocab({"put egg", "close butter", "take plate"}, {"put", "close", "take"},
                     {"egg", "butter", "plate"});
}

/// Features are multiples of 1/8 so the f32 storage is exact.
FeatureSequence make_sequence(const std::string& id, std::size_t frames, std::size_t dim,
                              std::mt19937_64& rng) {
  FeatureSequence seq;
  seq.video_id = id;
  seq.delta_s = 0.25;
  seq.dim = dim;
  seq.frames = Matrix(frames, dim);
  std::uniform_int_distribution<int> q(-64, 64);
  for (auto& v : seq.frames.data) v = q(rng) / 8.0;
  return seq;
}

Segment segment(std::size_t first, std::size_t end, int act, const LabelVocab& vocab) {
  Segment s;
  s.start_s = 0.25 * static_cast<double>(first);
  s.stop_s = 0.25 * static_cast<double>(end);
  s.activity_id = act;
  s.verb_id = vocab.activity_to_verb_noun[static_cast<std::size_t>(act)].first;
  s.noun_id = vocab.activity_to_verb_noun[static_cast<std::size_t>(act)].second;
  return s;
}

Dataset fixture(std::mt19937_64& rng) {
  Dataset d;
  d.dim = 4;
  d.delta_s = 0.25;
  d.vocab = small_vocab();
  d.videos.push_back(make_sequence("alpha", 30, 4, rng));
  d.videos.push_back(make_sequence("beta", 12, 4, rng));
  d.videos[0].segments = {segment(0, 10, 0, d.vocab), segment(15, 30, 2, d.vocab)};
  d.videos[1].segments = {segment(3, 9, 1, d.vocab)};
  return d;
}

/// Interval stabbing by exhaustive scan: frame i lies in [first, end) of the
/// earliest listed segment covering it.
int brute_label(const FeatureSequence& seq, std::size_t i) {
  for (const auto& s : seq.segments) {
    const double first = s.start_s / seq.delta_s;
    const double end = s.stop_s / seq.delta_s;
    if (first <= static_cast<double>(i) && static_cast<double>(i) < end) return s.activity_id;
  }
  return kNoLabel;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset files

TEST_CASE("dataset write then load is exact", "[data]") {
  std::mt19937_64 rng(1);
  const Dataset d = fixture(rng);
  TempDir dir;
  write_dataset(d, dir.path());
  const Dataset back = load_dataset(dir.path());
  CHECK(back == d);
  // Canonical files are byte-stable under a second write.
  TempDir again;
  write_dataset(back, again.path());
  CHECK(test::snapshot_tree(dir.path()) == test::snapshot_tree(again.path()));
}

TEST_CASE("features are promoted from f32", "[data]") {
  std::mt19937_64 rng(2);
  Dataset d = fixture(rng);
  d.videos[0].frames.at(0, 0) = 0.1;  // not representable in f32
  TempDir dir;
  write_dataset(d, dir.path());
  const Dataset back = load_dataset(dir.path());
  CHECK(back.videos[0].frames.at(0, 0) == static_cast<double>(0.1f));
}

TEST_CASE("empty annotation list loads", "[data]") {
  std::mt19937_64 rng(3);
  Dataset d = fixture(rng);
  for (auto& v : d.videos) v.segments.clear();
  TempDir dir;
  write_dataset(d, dir.path());
  CHECK(test::read_file(dir / "annotations.jsonl").empty());
  const Dataset back = load_dataset(dir.path());
  REQUIRE(back.videos.size() == 2);
  CHECK(back.videos[0].segments.empty());
  CHECK(back.segment_count() == 0);
}

TEST_CASE("truncated feature file is a format error", "[data]") {
  std::mt19937_64 rng(4);
  TempDir dir;
  write_dataset(fixture(rng), dir.path());
  auto bytes = test::read_file(dir / "beta.f32");
  bytes.resize(bytes.size() - 3);
  test::write_file(dir / "beta.f32", bytes);
  CHECK_THROWS_AS(load_dataset(dir.path()), FormatError);
}

TEST_CASE("malformed json reports file and line", "[data]") {
  std::mt19937_64 rng(5);
  TempDir dir;
  write_dataset(fixture(rng), dir.path());
  auto ann = test::read_file(dir / "annotations.jsonl");
  const auto second = ann.find('\n') + 1;
  ann.insert(second, "{\"video_id\": \"alpha\", oops}\n");
  test::write_file(dir / "annotations.jsonl", ann);
  try {
    (void)load_dataset(dir.path());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.file().find("annotations.jsonl") != std::string::npos);
  }

  TempDir meta_dir;
  write_dataset(fixture(rng), meta_dir.path());
  test::write_file(meta_dir / "meta.json", "{\n  \"dim\": 4,\n  \"delta_s\": ,\n}\n");
  try {
    (void)load_dataset(meta_dir.path());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("dimension and vocabulary inconsistencies are rejected", "[data]") {
  std::mt19937_64 rng(6);
  {
    TempDir dir;
    write_dataset(fixture(rng), dir.path());
    auto meta = test::read_file(dir / "meta.json");
    meta.replace(meta.find("\"dim\": 4"), 8, "\"dim\": 3");
    test::write_file(dir / "meta.json", meta);
    CHECK_THROWS_AS(load_dataset(dir.path()), FormatError);
  }
  {
    TempDir dir;
    write_dataset(fixture(rng), dir.path());
    test::write_file(dir / "annotations.jsonl",
                     "{\"video_id\":\"alpha\",\"start_s\":0,\"stop_s\":1,\"activity_id\":7,"
                     "\"verb_id\":0,\"noun_id\":0}\n");
    CHECK_THROWS_AS(load_dataset(dir.path()), ParseError);
  }
  CHECK_THROWS_AS(load_dataset("/nonexistent/srl/data"), IoError);
  Dataset bad = fixture(rng);
  bad.videos[1].frames = Matrix(12, 5);
  TempDir dir;
  CHECK_THROWS_AS(write_dataset(bad, dir.path()), FormatError);
}

TEST_CASE("split by video keeps whole videos", "[data]") {
  std::mt19937_64 rng(7);
  SynthConfig cfg;
  cfg.n_videos = 10;
  cfg.dim = 4;
  const Dataset d = generate_synthetic(cfg);
  const auto [train, test_part] = split_by_video(d, 0.3);
  CHECK(train.videos.size() == 7);
  CHECK(test_part.videos.size() == 3);
  CHECK(test_part.videos.front().video_id == d.videos[7].video_id);
  CHECK(train.vocab == d.vocab);
  CHECK_THROWS_AS(split_by_video(d, 1.0), ParameterError);
}

// ---------------------------------------------------------------------------
// Instances

TEST_CASE("egocentric instances per segment", "[data]") {
  std::mt19937_64 rng(8);
  const LabelVocab vocab = small_vocab();
  FeatureSequence seq = make_sequence("v", 40, 3, rng);
  seq.segments = {segment(20, 30, 1, vocab)};
  const InstanceSet set = make_instances_egocentric(seq, 6, 8);
  REQUIRE(set.instances.size() == 8);
  CHECK(set.skipped == 0);
  std::multiset<std::size_t> horizons;
  for (const auto& inst : set.instances) {
    horizons.insert(inst.horizon);
    CHECK(inst.observed.rows == 6);
    CHECK(inst.future.rows == inst.horizon);
    CHECK(inst.labels == Labels{1, vocab.activity_to_verb_noun[1].first,
                                vocab.activity_to_verb_noun[1].second});
    // Last observed frame sits h steps before the segment start.
    const std::size_t last = 20 - inst.horizon;
    for (std::size_t r = 0; r < 6; ++r) {
      const auto got = inst.observed.row(r);
      const auto want = seq.frames.row(last - 5 + r);
      CHECK(std::equal(got.begin(), got.end(), want.begin()));
    }
    for (std::size_t r = 0; r < inst.horizon; ++r) {
      const auto got = inst.future.row(r);
      const auto want = seq.frames.row(last + 1 + r);
      CHECK(std::equal(got.begin(), got.end(), want.begin()));
      CHECK(inst.future_activity[r] == brute_label(seq, last + 1 + r));
    }
  }
  CHECK(horizons == std::multiset<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8});
}

TEST_CASE("egocentric segments without history are skipped", "[data]") {
  std::mt19937_64 rng(9);
  const LabelVocab vocab = small_vocab();
  FeatureSequence seq = make_sequence("v", 40, 3, rng);
  seq.segments = {segment(0, 5, 0, vocab), segment(13, 20, 2, vocab), segment(14, 20, 1, vocab)};
  const InstanceSet set = make_instances_egocentric(seq, 6, 8);
  // Frame 13 needs 14 frames before-and-including it: exactly enough.
  CHECK(set.skipped == 1);
  CHECK(set.instances.size() == 16);
  for (const auto& inst : set.instances) {
    CHECK(inst.horizon >= 1);
    CHECK(inst.horizon <= 8);
  }
  FeatureSequence start = seq;
  start.segments = {segment(0, 5, 0, vocab)};
  const InstanceSet none = make_instances_egocentric(start);
  CHECK(none.instances.empty());
  CHECK(none.skipped == 1);
}

TEST_CASE("dense window counts", "[data]") {
  std::mt19937_64 rng(10);
  const LabelVocab vocab = small_vocab();
  auto count = [&](std::size_t t, std::size_t stride) {
    return make_instances_dense(make_sequence("v", t, 2, rng), vocab, 16, 16, stride).size();
  };
  CHECK(count(32, 1) == 1);
  CHECK(count(40, 4) == 3);
  CHECK(count(31, 1) == 0);
  for (std::size_t t : {32u, 33u, 47u, 64u, 100u}) {
    for (std::size_t stride : {1u, 2u, 3u, 4u, 7u}) {
      CHECK(count(t, stride) == (t - 32) / stride + 1);
    }
  }
}

TEST_CASE("dense window labels match interval stabbing", "[data]") {
  std::mt19937_64 rng(11);
  const LabelVocab vocab = small_vocab();
  FeatureSequence seq = make_sequence("v", 70, 2, rng);
  seq.segments = {segment(0, 12, 0, vocab), segment(15, 33, 1, vocab), segment(30, 50, 2, vocab),
                  segment(55, 70, 0, vocab)};
  for (std::size_t i = 0; i < seq.length(); ++i) {
    CHECK(seq.frame_activity(i) == brute_label(seq, i));
    CHECK(seq.frame_labels()[i] == brute_label(seq, i));
  }
  const auto windows = make_instances_dense(seq, vocab, 16, 16, 3);
  REQUIRE(windows.size() == (70 - 32) / 3 + 1);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const std::size_t start = w * 3;
    const auto& inst = windows[w];
    CHECK(inst.horizon == 16);
    REQUIRE(inst.future_activity.size() == 16);
    for (std::size_t k = 0; k < 16; ++k) {
      CHECK(inst.future_activity[k] == brute_label(seq, start + 16 + k));
    }
    CHECK(inst.labels.activity == brute_label(seq, start + 31));
  }
}

TEST_CASE("dense windows expand to labeled horizons", "[data]") {
  std::mt19937_64 rng(12);
  const LabelVocab vocab = small_vocab();
  FeatureSequence seq = make_sequence("v", 40, 2, rng);
  seq.segments = {segment(0, 20, 0, vocab), segment(25, 40, 2, vocab)};
  const auto windows = make_instances_dense(seq, vocab, 16, 16, 8);
  for (const auto& w : windows) {
    const auto expanded = expand_horizons(w, vocab);
    std::size_t labeled = 0;
    for (int a : w.future_activity) labeled += a != kNoLabel;
    CHECK(expanded.size() == labeled);
    for (const auto& e : expanded) {
      CHECK(e.labels.activity == w.future_activity[e.horizon - 1]);
      CHECK(e.future.rows == e.horizon);
      CHECK(e.observed == w.observed);
    }
  }
}

TEST_CASE("instance generation is deterministic", "[data]") {
  SynthConfig cfg;
  cfg.n_videos = 5;
  cfg.dim = 4;
  const Dataset d = generate_synthetic(cfg);
  for (const auto& v : d.videos) {
    const auto a = make_instances_egocentric(v);
    const auto b = make_instances_egocentric(v);
    REQUIRE(a.instances.size() == b.instances.size());
    for (std::size_t i = 0; i < a.instances.size(); ++i) {
      CHECK(a.instances[i].observed == b.instances[i].observed);
      CHECK(a.instances[i].labels == b.instances[i].labels);
    }
  }
}

// ---------------------------------------------------------------------------
// Negative bank

namespace {

NegativeBank three_activity_bank() {
  NegativeBank bank;
  int k = 0;
  for (const char* vid : {"a", "b", "c"}) {
    for (int act = 0; act < 3; ++act) {
      for (int rep = 0; rep < 4; ++rep, ++k) {
        bank.add({{static_cast<double>(k)}, act, vid});
      }
    }
  }
  return bank;
}

}  // namespace

TEST_CASE("negative sampling honours activity and video restrictions", "[data][property]") {
  const NegativeBank bank = three_activity_bank();
  std::mt19937_64 rng(13);
  for (SamplingMode mode :
       {SamplingMode::SameVideo, SamplingMode::OtherVideo, SamplingMode::AllVideo}) {
    INFO(to_string(mode));
    for (int draw = 0; draw < 10000; ++draw) {
      const int act = draw % 3;
      const std::string vid = draw % 2 ? "a" : "b";
      for (std::size_t idx : bank.sample_indices(act, vid, mode, 3, rng)) {
        const BankEntry& e = bank.entry(idx);
        CHECK(e.activity_id != act);
        if (mode == SamplingMode::SameVideo) CHECK(e.video_id == vid);
        if (mode == SamplingMode::OtherVideo) CHECK(e.video_id != vid);
      }
    }
  }
}

TEST_CASE("negative sampling errors and replacement", "[data]") {
  NegativeBank bank;
  bank.add({{1.0}, 0, "a"});
  bank.add({{2.0}, 0, "a"});
  bank.add({{3.0}, 1, "b"});
  std::mt19937_64 rng(14);
  CHECK_THROWS_AS(bank.sample_indices(0, "a", SamplingMode::SameVideo, 4, rng), DataError);
  CHECK(bank.eligible_count(0, "a", SamplingMode::OtherVideo) == 1);
  // One eligible entry, four requested: sampled with replacement.
  const auto idx = bank.sample_indices(0, "a", SamplingMode::AllVideo, 4, rng);
  CHECK(idx == std::vector<std::size_t>{2, 2, 2, 2});
  // Enough eligible entries: distinct draws.
  const NegativeBank big = three_activity_bank();
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = big.sample_indices(0, "a", SamplingMode::AllVideo, 20, rng);
    CHECK(std::set<std::size_t>(d.begin(), d.end()).size() == 20);
  }
  CHECK_THROWS_AS(NegativeBank().sample_indices(0, "a", SamplingMode::AllVideo, 1, rng),
                  DataError);
  CHECK(parse_sampling_mode("other_video") == SamplingMode::OtherVideo);
  CHECK_THROWS_AS(parse_sampling_mode("some_video"), ParameterError);
}

TEST_CASE("all-video draws are uniform over eligible entries", "[data]") {
  const NegativeBank bank = three_activity_bank();
  std::mt19937_64 rng(15);
  const std::size_t draws = 60000;
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t i = 0; i < draws; ++i) {
    counts[bank.sample_indices(1, "a", SamplingMode::AllVideo, 1, rng)[0]]++;
  }
  const std::size_t eligible = bank.eligible_count(1, "a", SamplingMode::AllVideo);
  CHECK(eligible == 24);
  CHECK(counts.size() == eligible);
  const double p = 1.0 / static_cast<double>(eligible);
  const double mean = p * static_cast<double>(draws);
  const double sigma = std::sqrt(static_cast<double>(draws) * p * (1.0 - p));
  for (const auto& [idx, c] : counts) {
    CHECK(bank.entry(idx).activity_id != 1);
    CHECK(std::abs(static_cast<double>(c) - mean) <= 3.0 * sigma + 1.0);
  }
}

TEST_CASE("bank from dataset has one entry per segment", "[data]") {
  SynthConfig cfg;
  cfg.n_videos = 6;
  cfg.dim = 4;
  const Dataset d = generate_synthetic(cfg);
  std::mt19937_64 a(16), b(16);
  const NegativeBank bank = NegativeBank::from_dataset(d, a);
  CHECK(bank.size() == d.segment_count());
  const NegativeBank again = NegativeBank::from_dataset(d, b);
  for (std::size_t i = 0; i < bank.size(); ++i) CHECK(bank.entry(i).feature == again.entry(i).feature);
}

// ---------------------------------------------------------------------------
// Labels

TEST_CASE("activity labels decompose into verb and first noun", "[data]") {
  const std::vector<std::string> verbs = {"put", "close", "stir", "take"};
  const std::vector<std::string> nouns = {"egg", "plate", "butter", "pan"};
  CHECK(decompose_label("put egg to plate", verbs, nouns) ==
        std::pair<std::string, std::string>{"put", "egg"});
  CHECK(decompose_label("close butter", verbs, nouns) ==
        std::pair<std::string, std::string>{"close", "butter"});
  CHECK(decompose_label("take_pan", verbs, nouns) ==
        std::pair<std::string, std::string>{"take", "pan"});
  CHECK_THROWS_AS(decompose_label("stir", verbs, {}), VocabularyError);
  CHECK_THROWS_AS(decompose_label("wash egg", verbs, nouns), VocabularyError);
  try {
    (void)decompose_label("stir", verbs, {});
  } catch (const VocabularyError& e) {
    CHECK(std::string(e.what()).find("stir") != std::string::npos);
  }

  const LabelVocab v = build_vocab({"put egg to plate", "close butter"}, verbs, nouns);
  CHECK(v.activity_to_verb_noun == std::vector<std::pair<int, int>>{{0, 0}, {1, 2}});
  CHECK_NOTHROW(v.validate());
  LabelVocab broken = v;
  broken.activity_to_verb_noun.pop_back();
  CHECK_THROWS_AS(broken.validate(), VocabularyError);
}

// ---------------------------------------------------------------------------
// Synthetic generator

TEST_CASE("noiseless frames equal their class prototype", "[data][synth]") {
  SynthConfig cfg;
  cfg.noise_std = 0.0;
  cfg.n_videos = 20;
  cfg.dim = 8;
  const Dataset d = generate_synthetic(cfg);
  std::map<int, std::vector<double>> proto;
  for (const auto& v : d.videos) {
    const auto labels = v.frame_labels();
    for (std::size_t i = 0; i < v.length(); ++i) {
      const auto row = v.frames.row(i);
      const std::vector<double> r(row.begin(), row.end());
      auto [it, fresh] = proto.emplace(labels[i], r);
      if (!fresh) CHECK(it->second == r);
    }
  }
  for (const auto& [c, p] : proto) {
    double n2 = 0.0;
    for (double x : p) n2 += x * x;
    CHECK(std::abs(std::sqrt(n2) - 1.0) < 1e-6);
  }
}

TEST_CASE("identity transitions repeat one class per video", "[data][synth]") {
  SynthConfig cfg;
  cfg.n_classes = 6;
  cfg.n_nouns = 3;
  cfg.dim = 4;
  cfg.n_videos = 15;
  cfg.transition_matrix.assign(6, std::vector<double>(6, 0.0));
  for (std::size_t i = 0; i < 6; ++i) cfg.transition_matrix[i][i] = 1.0;
  const Dataset d = generate_synthetic(cfg);
  for (const auto& v : d.videos) {
    for (const auto& s : v.segments) CHECK(s.activity_id == v.segments.front().activity_id);
  }
}

TEST_CASE("empirical transitions match the matrix", "[data][synth]") {
  SynthConfig cfg;
  cfg.n_classes = 4;
  cfg.n_nouns = 2;
  cfg.dim = 1;
  cfg.n_videos = 1000;
  cfg.segments_per_video = 101;
  cfg.min_segment_frames = 1;
  cfg.max_segment_frames = 1;
  cfg.transition_matrix = {{0.1, 0.2, 0.3, 0.4},
                           {0.25, 0.25, 0.25, 0.25},
                           {0.7, 0.1, 0.1, 0.1},
                           {0.0, 0.5, 0.0, 0.5}};
  const Dataset d = generate_synthetic(cfg);
  std::vector<std::vector<double>> counts(4, std::vector<double>(4, 0.0));
  std::vector<double> rows(4, 0.0);
  std::size_t steps = 0;
  for (const auto& v : d.videos) {
    for (std::size_t s = 1; s < v.segments.size(); ++s) {
      const auto from = static_cast<std::size_t>(v.segments[s - 1].activity_id);
      const auto to = static_cast<std::size_t>(v.segments[s].activity_id);
      counts[from][to] += 1.0;
      rows[from] += 1.0;
      ++steps;
    }
  }
  CHECK(steps == 100000);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double p = cfg.transition_matrix[i][j];
      const double sigma = std::sqrt(rows[i] * p * (1.0 - p));
      CHECK(std::abs(counts[i][j] - rows[i] * p) <= 3.0 * sigma + 1e-9);
    }
  }
}

TEST_CASE("synthetic labels factorize and the generator is seeded", "[data][synth]") {
  SynthConfig cfg;
  cfg.n_videos = 12;
  cfg.dim = 6;
  const Dataset d = generate_synthetic(cfg);
  CHECK(d.vocab.num_activities() == 20);
  CHECK(d.vocab.num_verbs() == 4);
  CHECK(d.vocab.num_nouns() == 5);
  for (const auto& v : d.videos) {
    for (const auto& s : v.segments) {
      CHECK(s.activity_id == s.verb_id * 5 + s.noun_id);
      CHECK(s.start_s < s.stop_s);
      CHECK(s.stop_s <= static_cast<double>(v.length()) * v.delta_s + 1e-9);
    }
  }
  CHECK(generate_synthetic(cfg) == d);
  SynthConfig other = cfg;
  other.seed = 2;
  CHECK_FALSE(generate_synthetic(other) == d);

  auto bad = [](auto mutate) {
    SynthConfig c;
    mutate(c);
    CHECK_THROWS_AS(generate_synthetic(c), ParameterError);
  };
  bad([](SynthConfig& c) { c.n_classes = 1; c.n_nouns = 1; });
  bad([](SynthConfig& c) { c.transition_matrix.assign(20, std::vector<double>(20, 0.1)); });
  bad([](SynthConfig& c) { c.transition_matrix.assign(3, std::vector<double>(3, 1.0 / 3)); });
  bad([](SynthConfig& c) { c.noise_std = -1.0; });
}
