// SPDX-License-Identifier: Apache-2.0
//
// Turning annotated feature sequences into anticipation instances, plus
// activity-label decomposition into (verb, noun).

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "srl/data.hpp"

namespace srl {

struct InstanceSet {
  std::vector<AnticipationInstance> instances;
  std::size_t skipped = 0;  // segments without enough preceding video
};

/// Egocentric protocol. For each segment starting at frame s the (o + a)-frame
/// window [s - o - a + 1, s] ends on the segment's first frame. The instance
/// with horizon h observes window frames (a - h) + 1 .. (a - h) + o, so its last
/// observed frame is s - h and the target lies exactly h steps ahead. Future
/// rows are frames s - h + 1 .. s. Emits a instances (h = 1..a) per eligible
/// segment.
InstanceSet make_instances_egocentric(const FeatureSequence& seq, std::size_t o = 6,
                                      std::size_t a = 8);

/// Dense protocol: (o + a)-frame windows every `stride` frames from the start.
/// Each window yields one instance with horizon a whose future_activity holds
/// the frame-level labels of its a future frames; labels are those of the last
/// future frame (kNoLabel fields when unannotated). Returns an empty list when
/// the sequence is shorter than o + a.
std::vector<AnticipationInstance> make_instances_dense(const FeatureSequence& seq,
                                                       const LabelVocab& vocab,
                                                       std::size_t o = 16, std::size_t a = 16,
                                                       std::size_t stride = 1);

/// Splits a dense window into per-horizon training instances, skipping
/// unannotated target frames.
std::vector<AnticipationInstance> expand_horizons(const AnticipationInstance& window,
                                                  const LabelVocab& vocab);

/// Verb is the first token found in `verbs`; noun is the first later token
/// found in `nouns`. Tokens are split on whitespace, '_' , '-' and ':'.
/// Throws VocabularyError when either is missing.
std::pair<std::string, std::string> decompose_label(const std::string& activity_name,
                                                    const std::vector<std::string>& verbs,
                                                    const std::vector<std::string>& nouns);

/// Builds activity_to_verb_noun for `activities` by decomposition.
LabelVocab build_vocab(const std::vector<std::string>& activities,
                       const std::vector<std::string>& verbs,
                       const std::vector<std::string>& nouns);

}  // namespace srl
