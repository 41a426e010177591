// SPDX-License-Identifier: Apache-2.0

#include "srl/negatives.hpp"

#include <algorithm>

#include "srl/errors.hpp"

namespace srl {

std::string to_string(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::SameVideo:
      return "same_video";
    case SamplingMode::OtherVideo:
      return "other_video";
    case SamplingMode::AllVideo:
      return "all_video";
  }
  return "all_video";
}

SamplingMode parse_sampling_mode(const std::string& s) {
  if (s == "same_video") return SamplingMode::SameVideo;
  if (s == "other_video") return SamplingMode::OtherVideo;
  if (s == "all_video") return SamplingMode::AllVideo;
  throw ParameterError("unknown sampling mode '" + s + "'");
}

void NegativeBank::add(BankEntry entry) {
  const std::size_t idx = entries_.size();
  by_video_[entry.video_id].push_back(idx);
  ++activity_count_[entry.activity_id];
  ++video_activity_count_[entry.video_id][entry.activity_id];
  entries_.push_back(std::move(entry));
}

NegativeBank NegativeBank::from_dataset(const Dataset& data, std::mt19937_64& rng) {
  NegativeBank bank;
  for (const auto& video : data.videos) {
    for (const auto& seg : video.segments) {
      const std::size_t first = video.frame_at_or_after(seg.start_s);
      const std::size_t last = std::min(video.frame_at_or_after(seg.stop_s), video.length());
      if (first >= last) continue;
      std::uniform_int_distribution<std::size_t> pick(first, last - 1);
      const auto row = video.frames.row(pick(rng));
      bank.add({std::vector<double>(row.begin(), row.end()), seg.activity_id, video.video_id});
    }
  }
  return bank;
}

bool NegativeBank::eligible(std::size_t idx, int activity_id, const std::string& video_id,
                            SamplingMode mode) const {
  const auto& e = entries_[idx];
  if (activity_id != kNoLabel && e.activity_id == activity_id) return false;
  switch (mode) {
    case SamplingMode::SameVideo:
      return e.video_id == video_id;
    case SamplingMode::OtherVideo:
      return e.video_id != video_id;
    case SamplingMode::AllVideo:
      return true;
  }
  return false;
}

std::size_t NegativeBank::eligible_count(int activity_id, const std::string& video_id,
                                         SamplingMode mode) const {
  auto lookup = [](const auto& map, const auto& key) -> std::size_t {
    auto it = map.find(key);
    return it == map.end() ? 0 : it->second;
  };
  const std::size_t total = entries_.size();
  const std::size_t same_activity = activity_id == kNoLabel ? 0 : lookup(activity_count_, activity_id);
  std::size_t video_total = 0;
  std::size_t video_same_activity = 0;
  if (auto it = by_video_.find(video_id); it != by_video_.end()) video_total = it->second.size();
  if (activity_id != kNoLabel) {
    if (auto it = video_activity_count_.find(video_id); it != video_activity_count_.end()) {
      video_same_activity = lookup(it->second, activity_id);
    }
  }
  switch (mode) {
    case SamplingMode::SameVideo:
      return video_total - video_same_activity;
    case SamplingMode::OtherVideo:
      return (total - same_activity) - (video_total - video_same_activity);
    case SamplingMode::AllVideo:
      return total - same_activity;
  }
  return 0;
}

std::vector<std::size_t> NegativeBank::sample_indices(int activity_id,
                                                      const std::string& video_id,
                                                      SamplingMode mode, std::size_t count,
                                                      std::mt19937_64& rng) const {
  std::vector<std::size_t> out;
  if (count == 0) return out;
  const std::size_t pool = eligible_count(activity_id, video_id, mode);
  if (pool == 0) {
    throw DataError("no eligible negatives for activity " + std::to_string(activity_id) +
                    " in video '" + video_id + "' (mode " + to_string(mode) + ")");
  }

  static const std::vector<std::size_t> kEmpty;
  const std::vector<std::size_t>* source_list = nullptr;
  std::size_t source_size = entries_.size();
  if (mode == SamplingMode::SameVideo) {
    auto it = by_video_.find(video_id);
    source_list = it == by_video_.end() ? &kEmpty : &it->second;
    source_size = source_list->size();
  }
  auto source_at = [&](std::size_t i) { return source_list ? (*source_list)[i] : i; };

  const bool with_replacement = pool < count;
  const bool dense = pool * 4 >= source_size && (with_replacement || count * 2 <= pool);
  out.reserve(count);

  if (dense) {
    // Rejection sampling against the source keeps draws uniform over the
    // eligible subset.
    std::uniform_int_distribution<std::size_t> pick(0, source_size - 1);
    while (out.size() < count) {
      const std::size_t idx = source_at(pick(rng));
      if (!eligible(idx, activity_id, video_id, mode)) continue;
      if (!with_replacement && std::find(out.begin(), out.end(), idx) != out.end()) continue;
      out.push_back(idx);
    }
    return out;
  }

  std::vector<std::size_t> candidates;
  candidates.reserve(pool);
  for (std::size_t i = 0; i < source_size; ++i) {
    const std::size_t idx = source_at(i);
    if (eligible(idx, activity_id, video_id, mode)) candidates.push_back(idx);
  }
  if (with_replacement) {
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    for (std::size_t k = 0; k < count; ++k) out.push_back(candidates[pick(rng)]);
    return out;
  }
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, candidates.size() - 1);
    std::swap(candidates[k], candidates[pick(rng)]);
    out.push_back(candidates[k]);
  }
  return out;
}

std::vector<std::span<const double>> NegativeBank::sample(int activity_id,
                                                          const std::string& video_id,
                                                          SamplingMode mode, std::size_t count,
                                                          std::mt19937_64& rng) const {
  std::vector<std::span<const double>> out;
  for (auto idx : sample_indices(activity_id, video_id, mode, count, rng)) {
    out.emplace_back(entries_[idx].feature);
  }
  return out;
}

}  // namespace srl
