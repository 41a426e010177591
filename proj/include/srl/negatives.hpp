// SPDX-License-Identifier: Apache-2.0
//
// Pool of single-frame features labelled by activity and video, sampled as
// contrastive negatives.

#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "srl/data.hpp"

namespace srl {

enum class SamplingMode { SameVideo, OtherVideo, AllVideo };

std::string to_string(SamplingMode mode);
/// Accepts "same_video", "other_video", "all_video".
SamplingMode parse_sampling_mode(const std::string& s);

struct BankEntry {
  std::vector<double> feature;
  int activity_id = 0;
  std::string video_id;
};

class NegativeBank {
 public:
  NegativeBank() = default;

  void add(BankEntry entry);
  /// One entry per segment, taken from a uniformly drawn frame of it.
  static NegativeBank from_dataset(const Dataset& data, std::mt19937_64& rng);

  std::size_t size() const noexcept { return entries_.size(); }
  const BankEntry& entry(std::size_t i) const { return entries_[i]; }

  /// Number of entries eligible as negatives for the given positive.
  std::size_t eligible_count(int activity_id, const std::string& video_id,
                             SamplingMode mode) const;

  /// Uniform draw of entry indices whose activity differs from the positive's
  /// (kNoLabel positives exclude nothing) and that satisfy the mode's video
  /// restriction. Without replacement when the eligible pool holds at least
  /// `count` entries, with replacement otherwise. Throws DataError when no
  /// entry is eligible.
  std::vector<std::size_t> sample_indices(int activity_id, const std::string& video_id,
                                          SamplingMode mode, std::size_t count,
                                          std::mt19937_64& rng) const;

  std::vector<std::span<const double>> sample(int activity_id, const std::string& video_id,
                                              SamplingMode mode, std::size_t count,
                                              std::mt19937_64& rng) const;

 private:
  bool eligible(std::size_t idx, int activity_id, const std::string& video_id,
                SamplingMode mode) const;

  std::vector<BankEntry> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_video_;
  std::unordered_map<int, std::size_t> activity_count_;
  std::unordered_map<std::string, std::unordered_map<int, std::size_t>> video_activity_count_;
};

}  // namespace srl
