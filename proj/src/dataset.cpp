// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "srl/data.hpp"
#include "srl/errors.hpp"

namespace srl {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// FeatureSequence / LabelVocab / Dataset helpers

std::size_t FeatureSequence::frame_at_or_after(double t) const {
  if (t <= 0.0) return 0;
  return static_cast<std::size_t>(std::ceil(t / delta_s - 1e-9));
}

int FeatureSequence::frame_activity(std::size_t i) const {
  for (const auto& s : segments) {
    if (frame_at_or_after(s.start_s) <= i && i < frame_at_or_after(s.stop_s)) return s.activity_id;
  }
  return kNoLabel;
}

std::vector<int> FeatureSequence::frame_labels() const {
  std::vector<int> labels(length(), kNoLabel);
  // Painted in reverse so the first covering segment wins, as in frame_activity.
  for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
    const std::size_t a = std::min(frame_at_or_after(it->start_s), length());
    const std::size_t b = std::min(frame_at_or_after(it->stop_s), length());
    for (std::size_t i = a; i < b; ++i) labels[i] = it->activity_id;
  }
  return labels;
}

void LabelVocab::validate() const {
  if (activity_to_verb_noun.size() != activities.size()) {
    throw VocabularyError("activity_to_verb_noun has " +
                          std::to_string(activity_to_verb_noun.size()) + " entries for " +
                          std::to_string(activities.size()) + " activities");
  }
  for (std::size_t a = 0; a < activity_to_verb_noun.size(); ++a) {
    const auto [v, n] = activity_to_verb_noun[a];
    if (v < 0 || static_cast<std::size_t>(v) >= verbs.size() || n < 0 ||
        static_cast<std::size_t>(n) >= nouns.size()) {
      throw VocabularyError("activity '" + activities[a] + "' maps outside the verb/noun vocab");
    }
  }
}

std::size_t Dataset::segment_count() const {
  std::size_t n = 0;
  for (const auto& v : videos) n += v.segments.size();
  return n;
}

std::pair<Dataset, Dataset> split_by_video(const Dataset& data, double test_fraction) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ParameterError("test fraction must lie in [0, 1)");
  }
  Dataset train = data;
  Dataset test = data;
  train.videos.clear();
  test.videos.clear();
  const auto n = data.videos.size();
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    (i < n - n_test ? train : test).videos.push_back(data.videos[i]);
  }
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Loading

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

json parse_json_file(const fs::path& p) {
  const std::string text = read_text(p);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(p.string(), line_of_byte(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
}

template <typename F>
auto with_schema(const fs::path& p, std::size_t line, F f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(p.string(), line, e.what());
  }
}

float load_le_float(const unsigned char* bytes) {
  std::uint32_t u;
  std::memcpy(&u, bytes, 4);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

void store_le_float(float f, unsigned char* bytes) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap32(u);
  std::memcpy(bytes, &u, 4);
}

void check_video_id(const std::string& id) {
  if (id.empty() || id.find_first_of("/\\") != std::string::npos || id == "." || id == "..") {
    throw FormatError("invalid video id '" + id + "'");
  }
}

}  // namespace

Dataset load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("dataset directory not found: " + root.string());
  Dataset data;

  // meta.json
  const fs::path meta_path = root / "meta.json";
  const json meta = parse_json_file(meta_path);
  std::vector<std::pair<std::string, std::size_t>> listed;
  with_schema(meta_path, 1, [&] {
    data.dim = meta.at("dim").get<std::size_t>();
    data.delta_s = meta.at("delta_s").get<double>();
    for (const auto& v : meta.at("videos")) {
      listed.emplace_back(v.at("id").get<std::string>(), v.at("frames").get<std::size_t>());
    }
    return 0;
  });
  if (data.dim == 0) throw FormatError(meta_path.string() + ": dim must be >= 1");
  if (!(data.delta_s > 0.0)) throw FormatError(meta_path.string() + ": delta_s must be > 0");

  // vocab.json
  const fs::path vocab_path = root / "vocab.json";
  const json vj = parse_json_file(vocab_path);
  with_schema(vocab_path, 1, [&] {
    data.vocab.activities = vj.at("activities").get<std::vector<std::string>>();
    data.vocab.verbs = vj.at("verbs").get<std::vector<std::string>>();
    data.vocab.nouns = vj.at("nouns").get<std::vector<std::string>>();
    for (const auto& pair : vj.at("activity_to_verb_noun")) {
      if (!pair.is_array() || pair.size() != 2) {
        throw FormatError(vocab_path.string() + ": activity_to_verb_noun entries must be [v, n]");
      }
      data.vocab.activity_to_verb_noun.emplace_back(pair[0].get<int>(), pair[1].get<int>());
    }
    return 0;
  });
  data.vocab.validate();

  // feature files
  std::map<std::string, std::size_t> index_of;
  for (const auto& [id, frames] : listed) {
    check_video_id(id);
    if (index_of.count(id)) throw FormatError("duplicate video id '" + id + "'");
    FeatureSequence seq;
    seq.video_id = id;
    seq.delta_s = data.delta_s;
    seq.dim = data.dim;
    const fs::path fp = root / (id + ".f32");
    const std::string bytes = read_text(fp);
    const std::size_t expected = frames * data.dim * 4;
    if (bytes.size() != expected) {
      throw FormatError(fp.string() + ": expected " + std::to_string(expected) + " bytes (" +
                        std::to_string(frames) + " x " + std::to_string(data.dim) +
                        " f32), found " + std::to_string(bytes.size()));
    }
    seq.frames = Matrix(frames, data.dim);
    const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
    for (std::size_t i = 0; i < frames * data.dim; ++i) {
      const float f = load_le_float(raw + 4 * i);
      if (!std::isfinite(f)) {
        throw FormatError(fp.string() + ": non-finite feature at element " + std::to_string(i));
      }
      seq.frames.data[i] = static_cast<double>(f);
    }
    index_of[id] = data.videos.size();
    data.videos.push_back(std::move(seq));
  }

  // annotations.jsonl
  const fs::path ann_path = root / "annotations.jsonl";
  {
    std::ifstream in(ann_path);
    if (!in) throw IoError("cannot open " + ann_path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        throw ParseError(ann_path.string(), lineno, e.what());
      }
      std::string vid;
      Segment s;
      with_schema(ann_path, lineno, [&] {
        vid = j.at("video_id").get<std::string>();
        s.start_s = j.at("start_s").get<double>();
        s.stop_s = j.at("stop_s").get<double>();
        s.activity_id = j.at("activity_id").get<int>();
        s.verb_id = j.at("verb_id").get<int>();
        s.noun_id = j.at("noun_id").get<int>();
        return 0;
      });
      auto it = index_of.find(vid);
      if (it == index_of.end()) {
        throw ParseError(ann_path.string(), lineno, "unknown video_id '" + vid + "'");
      }
      auto& seq = data.videos[it->second];
      const double end = static_cast<double>(seq.length()) * seq.delta_s;
      if (!(s.start_s >= 0.0 && s.start_s < s.stop_s && s.stop_s <= end + 1e-9)) {
        throw ParseError(ann_path.string(), lineno, "segment outside [0, T*delta] or empty");
      }
      if (s.activity_id < 0 || static_cast<std::size_t>(s.activity_id) >= data.vocab.num_activities()) {
        throw ParseError(ann_path.string(), lineno, "activity_id out of vocabulary range");
      }
      const auto [v, n] = data.vocab.activity_to_verb_noun[static_cast<std::size_t>(s.activity_id)];
      if (s.verb_id != v || s.noun_id != n) {
        throw ParseError(ann_path.string(), lineno, "verb/noun ids disagree with vocab.json");
      }
      seq.segments.push_back(s);
    }
  }

  // many_shot.json (optional)
  const fs::path ms_path = root / "many_shot.json";
  if (fs::exists(ms_path)) {
    const json mj = parse_json_file(ms_path);
    with_schema(ms_path, 1, [&] {
      data.many_shot.activities = mj.at("activities").get<std::vector<int>>();
      data.many_shot.verbs = mj.at("verbs").get<std::vector<int>>();
      data.many_shot.nouns = mj.at("nouns").get<std::vector<int>>();
      return 0;
    });
  }
  return data;
}

// ---------------------------------------------------------------------------
// Writing

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("write failed for " + p.string());
}

}  // namespace

void write_dataset(const Dataset& data, const fs::path& root) {
  data.vocab.validate();
  for (const auto& v : data.videos) {
    check_video_id(v.video_id);
    if (v.frames.cols != data.dim) {
      throw FormatError("video '" + v.video_id + "' has width " + std::to_string(v.frames.cols) +
                        ", dataset dim is " + std::to_string(data.dim));
    }
  }
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) {
    throw IoError("cannot create dataset directory " + root.string());
  }

  json meta;
  meta["dim"] = data.dim;
  meta["delta_s"] = data.delta_s;
  meta["videos"] = json::array();
  for (const auto& v : data.videos) {
    meta["videos"].push_back({{"id", v.video_id}, {"frames", v.length()}});
  }
  write_text(root / "meta.json", meta.dump(2) + "\n");

  json vocab;
  vocab["activities"] = data.vocab.activities;
  vocab["verbs"] = data.vocab.verbs;
  vocab["nouns"] = data.vocab.nouns;
  vocab["activity_to_verb_noun"] = json::array();
  for (const auto& [v, n] : data.vocab.activity_to_verb_noun) {
    vocab["activity_to_verb_noun"].push_back({v, n});
  }
  write_text(root / "vocab.json", vocab.dump(2) + "\n");

  std::string ann;
  for (const auto& v : data.videos) {
    for (const auto& s : v.segments) {
      json j;
      j["video_id"] = v.video_id;
      j["start_s"] = s.start_s;
      j["stop_s"] = s.stop_s;
      j["activity_id"] = s.activity_id;
      j["verb_id"] = s.verb_id;
      j["noun_id"] = s.noun_id;
      ann += j.dump() + "\n";
    }
  }
  write_text(root / "annotations.jsonl", ann);

  for (const auto& v : data.videos) {
    std::string bytes(v.frames.data.size() * 4, '\0');
    auto* raw = reinterpret_cast<unsigned char*>(bytes.data());
    for (std::size_t i = 0; i < v.frames.data.size(); ++i) {
      store_le_float(static_cast<float>(v.frames.data[i]), raw + 4 * i);
    }
    write_text(root / (v.video_id + ".f32"), bytes);
  }

  if (!data.many_shot.empty()) {
    json ms;
    ms["activities"] = data.many_shot.activities;
    ms["verbs"] = data.many_shot.verbs;
    ms["nouns"] = data.many_shot.nouns;
    write_text(root / "many_shot.json", ms.dump(2) + "\n");
  }
}

}  // namespace srl
