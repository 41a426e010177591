// SPDX-License-Identifier: Apache-2.0

#include "srl/instances.hpp"

#include <algorithm>

#include "srl/errors.hpp"

namespace srl {

namespace {

Matrix copy_rows(const Matrix& src, std::size_t first, std::size_t count) {
  Matrix out(count, src.cols);
  std::copy_n(src.data.begin() + static_cast<std::ptrdiff_t>(first * src.cols), count * src.cols,
              out.data.begin());
  return out;
}

}  // namespace

InstanceSet make_instances_egocentric(const FeatureSequence& seq, std::size_t o, std::size_t a) {
  if (o == 0 || a == 0) throw ParameterError("egocentric instances need o >= 1 and a >= 1");
  InstanceSet out;
  const std::vector<int> frame_labels = seq.frame_labels();
  for (const auto& segment : seq.segments) {
    const std::size_t s = seq.frame_at_or_after(segment.start_s);
    if (s + 1 < o + a || s >= seq.length()) {
      ++out.skipped;
      continue;
    }
    for (std::size_t h = 1; h <= a; ++h) {
      AnticipationInstance inst;
      inst.video_id = seq.video_id;
      inst.horizon = h;
      inst.target_frame = s;
      inst.labels = {segment.activity_id, segment.verb_id, segment.noun_id};
      const std::size_t last_observed = s - h;
      inst.observed = copy_rows(seq.frames, last_observed + 1 - o, o);
      inst.future = copy_rows(seq.frames, last_observed + 1, h);
      inst.future_activity.assign(frame_labels.begin() + static_cast<std::ptrdiff_t>(last_observed + 1),
                                  frame_labels.begin() + static_cast<std::ptrdiff_t>(s + 1));
      out.instances.push_back(std::move(inst));
    }
  }
  return out;
}

std::vector<AnticipationInstance> make_instances_dense(const FeatureSequence& seq,
                                                       const LabelVocab& vocab, std::size_t o,
                                                       std::size_t a, std::size_t stride) {
  if (o == 0 || a == 0) throw ParameterError("dense instances need o >= 1 and a >= 1");
  if (stride == 0) throw ParameterError("dense stride must be >= 1");
  std::vector<AnticipationInstance> out;
  const std::size_t window = o + a;
  if (seq.length() < window) return out;
  const std::vector<int> frame_labels = seq.frame_labels();
  for (std::size_t start = 0; start + window <= seq.length(); start += stride) {
    AnticipationInstance inst;
    inst.video_id = seq.video_id;
    inst.horizon = a;
    inst.target_frame = start + window - 1;
    inst.observed = copy_rows(seq.frames, start, o);
    inst.future = copy_rows(seq.frames, start + o, a);
    inst.future_activity.assign(frame_labels.begin() + static_cast<std::ptrdiff_t>(start + o),
                                frame_labels.begin() + static_cast<std::ptrdiff_t>(start + window));
    const int act = inst.future_activity.back();
    if (act == kNoLabel) {
      inst.labels = {kNoLabel, kNoLabel, kNoLabel};
    } else {
      const auto [v, n] = vocab.activity_to_verb_noun.at(static_cast<std::size_t>(act));
      inst.labels = {act, v, n};
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<AnticipationInstance> expand_horizons(const AnticipationInstance& window,
                                                  const LabelVocab& vocab) {
  std::vector<AnticipationInstance> out;
  for (std::size_t h = 1; h <= window.horizon && h <= window.future_activity.size(); ++h) {
    const int act = window.future_activity[h - 1];
    if (act == kNoLabel) continue;
    AnticipationInstance inst;
    inst.video_id = window.video_id;
    inst.observed = window.observed;
    inst.horizon = h;
    inst.target_frame = window.target_frame + h - window.horizon;
    inst.future = copy_rows(window.future, 0, h);
    inst.future_activity.assign(window.future_activity.begin(),
                                window.future_activity.begin() + static_cast<std::ptrdiff_t>(h));
    const auto [v, n] = vocab.activity_to_verb_noun.at(static_cast<std::size_t>(act));
    inst.labels = {act, v, n};
    out.push_back(std::move(inst));
  }
  return out;
}

namespace {

std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '_' || c == '-' || c == ':') {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

}  // namespace

std::pair<std::string, std::string> decompose_label(const std::string& activity_name,
                                                    const std::vector<std::string>& verbs,
                                                    const std::vector<std::string>& nouns) {
  const auto tokens = tokenize(activity_name);
  auto in = [](const std::vector<std::string>& vocab, const std::string& t) {
    return std::find(vocab.begin(), vocab.end(), t) != vocab.end();
  };
  std::size_t i = 0;
  while (i < tokens.size() && !in(verbs, tokens[i])) ++i;
  if (i == tokens.size()) throw VocabularyError("no verb found in activity '" + activity_name + "'");
  const std::string verb = tokens[i];
  for (std::size_t k = i + 1; k < tokens.size(); ++k) {
    if (in(nouns, tokens[k])) return {verb, tokens[k]};
  }
  throw VocabularyError("no noun found in activity '" + activity_name + "'");
}

LabelVocab build_vocab(const std::vector<std::string>& activities,
                       const std::vector<std::string>& verbs,
                       const std::vector<std::string>& nouns) {
  LabelVocab vocab;
  vocab.activities = activities;
  vocab.verbs = verbs;
  vocab.nouns = nouns;
  for (const auto& name : activities) {
    const auto [v, n] = decompose_label(name, verbs, nouns);
    const auto vi = std::find(verbs.begin(), verbs.end(), v) - verbs.begin();
    const auto ni = std::find(nouns.begin(), nouns.end(), n) - nouns.begin();
    vocab.activity_to_verb_noun.emplace_back(static_cast<int>(vi), static_cast<int>(ni));
  }
  return vocab;
}

}  // namespace srl
