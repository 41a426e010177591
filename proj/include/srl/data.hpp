// SPDX-License-Identifier: Apache-2.0
//
// Feature sequences, label vocabularies, datasets and anticipation instances.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace srl {

/// Dense row-major f64 matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

inline constexpr int kNoLabel = -1;

struct Segment {
  double start_s = 0.0;
  double stop_s = 0.0;
  int activity_id = 0;
  int verb_id = 0;
  int noun_id = 0;

  bool operator==(const Segment&) const = default;
};

struct FeatureSequence {
  std::string video_id;
  double delta_s = 0.25;
  std::size_t dim = 0;
  Matrix frames;  // T x dim
  std::vector<Segment> segments;

  std::size_t length() const noexcept { return frames.rows; }
  /// First frame index whose timestamp (i * delta_s) is >= t.
  std::size_t frame_at_or_after(double t) const;
  /// Activity of frame i (first covering segment), or kNoLabel.
  int frame_activity(std::size_t i) const;
  /// Per-frame activity ids for the whole sequence.
  std::vector<int> frame_labels() const;

  bool operator==(const FeatureSequence&) const = default;
};

struct LabelVocab {
  std::vector<std::string> activities;
  std::vector<std::string> verbs;
  std::vector<std::string> nouns;
  std::vector<std::pair<int, int>> activity_to_verb_noun;

  std::size_t num_activities() const noexcept { return activities.size(); }
  std::size_t num_verbs() const noexcept { return verbs.size(); }
  std::size_t num_nouns() const noexcept { return nouns.size(); }
  /// Throws VocabularyError when the map is not total or ids are out of range.
  void validate() const;

  bool operator==(const LabelVocab&) const = default;
};

/// Many-shot class lists used by mean top-k recall.
struct ManyShot {
  std::vector<int> activities;
  std::vector<int> verbs;
  std::vector<int> nouns;

  bool empty() const noexcept { return activities.empty() && verbs.empty() && nouns.empty(); }
  bool operator==(const ManyShot&) const = default;
};

struct Dataset {
  std::size_t dim = 0;
  double delta_s = 0.25;
  std::vector<FeatureSequence> videos;
  LabelVocab vocab;
  ManyShot many_shot;

  std::size_t segment_count() const;
  bool operator==(const Dataset&) const = default;
};

struct Labels {
  int activity = 0;
  int verb = 0;
  int noun = 0;

  bool operator==(const Labels&) const = default;
};

/// One training / evaluation example.
struct AnticipationInstance {
  std::string video_id;
  Matrix observed;              // o x d
  Matrix future;                // horizon x d; row t-1 is the frame at step t
  std::vector<int> future_activity;  // per future row, kNoLabel if unannotated
  std::size_t horizon = 0;
  Labels labels;
  std::size_t target_frame = 0;  // frame index of the anticipated step in its video

  bool has_future() const noexcept { return future.rows >= horizon && horizon > 0; }
};

/// Splits videos deterministically: the last round(test_fraction * n) videos
/// go to the test side.
std::pair<Dataset, Dataset> split_by_video(const Dataset& data, double test_fraction);

// ---------------------------------------------------------------------------
// On-disk format (see README for the full layout):
//   meta.json, <video_id>.f32, annotations.jsonl, vocab.json [, many_shot.json]

/// Throws ParseError (file:line) on malformed JSON and FormatError on size or
/// consistency violations.
Dataset load_dataset(const std::filesystem::path& root);
/// Writes the canonical layout. Features are stored as f32.
void write_dataset(const Dataset& data, const std::filesystem::path& root);

}  // namespace srl
