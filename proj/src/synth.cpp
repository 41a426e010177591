// SPDX-License-Identifier: Apache-2.0

#include "srl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "srl/errors.hpp"
#include "srl/rng.hpp"

namespace srl {

void SynthConfig::validate() const {
  if (n_classes < 2) throw ParameterError("synthetic data needs n_classes >= 2");
  if (n_nouns == 0 || n_classes % n_nouns != 0) {
    throw ParameterError("n_classes must be a multiple of n_nouns");
  }
  if (dim == 0) throw ParameterError("dim must be >= 1");
  if (n_videos == 0 || segments_per_video == 0) {
    throw ParameterError("n_videos and segments_per_video must be >= 1");
  }
  if (min_segment_frames == 0 || min_segment_frames > max_segment_frames) {
    throw ParameterError("segment frame range must satisfy 1 <= min <= max");
  }
  if (!(noise_std >= 0.0)) throw ParameterError("noise_std must be >= 0");
  if (!(delta_s > 0.0)) throw ParameterError("delta_s must be > 0");
  if (context_order != 1 && context_order != 2) throw ParameterError("context_order must be 1 or 2");
  if (!(p_follow >= 0.0 && p_follow <= 1.0)) throw ParameterError("p_follow must lie in [0, 1]");
  if (!transition_matrix.empty()) {
    if (context_order != 1) {
      throw ParameterError("an explicit transition matrix requires context_order 1");
    }
    if (transition_matrix.size() != n_classes) {
      throw ParameterError("transition matrix must have n_classes rows");
    }
    for (const auto& row : transition_matrix) {
      if (row.size() != n_classes) throw ParameterError("transition matrix must be square");
      double s = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw ParameterError("transition probabilities must be >= 0");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-9) throw ParameterError("transition matrix rows must sum to 1");
    }
  }
}

namespace {

std::vector<std::size_t> successor_cycle(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> next(n);
  for (std::size_t i = 0; i < n; ++i) next[order[i]] = order[(i + 1) % n];
  return next;
}

std::vector<std::vector<double>> follow_matrix(const std::vector<std::size_t>& next,
                                               double p_follow) {
  const std::size_t n = next.size();
  const double base = (1.0 - p_follow) / static_cast<double>(n);
  std::vector<std::vector<double>> m(n, std::vector<double>(n, base));
  for (std::size_t i = 0; i < n; ++i) m[i][next[i]] += p_follow;
  return m;
}

}  // namespace

std::vector<std::vector<double>> resolved_transition_matrix(const SynthConfig& config) {
  config.validate();
  if (!config.transition_matrix.empty()) return config.transition_matrix;
  auto rng = make_stream(config.seed, Stream::Synth, 0);
  return follow_matrix(successor_cycle(config.n_classes, rng), config.p_follow);
}

Dataset generate_synthetic(const SynthConfig& config) {
  config.validate();
  const std::size_t n = config.n_classes;
  const std::size_t d = config.dim;

  // Structure draws come from their own streams so that e.g. changing noise
  // does not change the class chain.
  auto structure_rng = make_stream(config.seed, Stream::Synth, 0);
  const auto next = successor_cycle(n, structure_rng);
  const auto matrix =
      config.transition_matrix.empty() ? follow_matrix(next, config.p_follow) : config.transition_matrix;
  std::vector<std::size_t> pair_next(n * n);
  {
    auto rng = make_stream(config.seed, Stream::Synth, 1);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (auto& v : pair_next) v = pick(rng);
  }

  std::vector<std::vector<double>> prototypes(n, std::vector<double>(d));
  {
    auto rng = make_stream(config.seed, Stream::Synth, 2);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& p : prototypes) {
      double norm2 = 0.0;
      do {
        norm2 = 0.0;
        for (auto& v : p) {
          v = gauss(rng);
          norm2 += v * v;
        }
      } while (norm2 == 0.0);
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& v : p) v = static_cast<double>(static_cast<float>(v * inv));
    }
  }

  Dataset data;
  data.dim = d;
  data.delta_s = config.delta_s;
  const std::size_t n_verbs = n / config.n_nouns;
  for (std::size_t v = 0; v < n_verbs; ++v) data.vocab.verbs.push_back("v" + std::to_string(v));
  for (std::size_t k = 0; k < config.n_nouns; ++k) data.vocab.nouns.push_back("n" + std::to_string(k));
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t v = c / config.n_nouns;
    const std::size_t k = c % config.n_nouns;
    data.vocab.activities.push_back(data.vocab.verbs[v] + " " + data.vocab.nouns[k]);
    data.vocab.activity_to_verb_noun.emplace_back(static_cast<int>(v), static_cast<int>(k));
  }

  std::vector<std::size_t> class_count(n, 0);
  for (std::size_t vid = 0; vid < config.n_videos; ++vid) {
    auto rng = make_stream(config.seed, Stream::Synth, 100 + vid);
    std::uniform_int_distribution<std::size_t> uniform_class(0, n - 1);
    std::uniform_int_distribution<std::size_t> seg_len(config.min_segment_frames,
                                                       config.max_segment_frames);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::vector<std::size_t> classes;
    classes.push_back(uniform_class(rng));
    for (std::size_t s = 1; s < config.segments_per_video; ++s) {
      const std::size_t cur = classes.back();
      std::size_t nxt = 0;
      if (config.context_order == 2) {
        const std::size_t prev = classes.size() >= 2 ? classes[classes.size() - 2] : cur;
        nxt = unit(rng) < config.p_follow ? pair_next[prev * n + cur] : uniform_class(rng);
      } else {
        std::discrete_distribution<std::size_t> step(matrix[cur].begin(), matrix[cur].end());
        nxt = step(rng);
      }
      classes.push_back(nxt);
    }

    FeatureSequence seq;
    seq.video_id = "vid" + std::to_string(vid);
    seq.delta_s = config.delta_s;
    seq.dim = d;
    std::vector<std::size_t> lengths;
    std::size_t total = 0;
    for (std::size_t s = 0; s < classes.size(); ++s) {
      lengths.push_back(seg_len(rng));
      total += lengths.back();
    }
    seq.frames = Matrix(total, d);
    std::size_t frame = 0;
    for (std::size_t s = 0; s < classes.size(); ++s) {
      const std::size_t c = classes[s];
      ++class_count[c];
      Segment seg;
      seg.start_s = static_cast<double>(frame) * config.delta_s;
      seg.stop_s = static_cast<double>(frame + lengths[s]) * config.delta_s;
      seg.activity_id = static_cast<int>(c);
      seg.verb_id = data.vocab.activity_to_verb_noun[c].first;
      seg.noun_id = data.vocab.activity_to_verb_noun[c].second;
      seq.segments.push_back(seg);
      for (std::size_t f = 0; f < lengths[s]; ++f, ++frame) {
        auto row = seq.frames.row(frame);
        for (std::size_t k = 0; k < d; ++k) {
          const double v = prototypes[c][k] + config.noise_std * noise(rng);
          row[k] = static_cast<double>(static_cast<float>(v));
        }
      }
    }
    data.videos.push_back(std::move(seq));
  }

  std::map<int, std::size_t> verb_count;
  std::map<int, std::size_t> noun_count;
  for (std::size_t c = 0; c < n; ++c) {
    verb_count[data.vocab.activity_to_verb_noun[c].first] += class_count[c];
    noun_count[data.vocab.activity_to_verb_noun[c].second] += class_count[c];
    if (class_count[c] >= config.many_shot_min_count) {
      data.many_shot.activities.push_back(static_cast<int>(c));
    }
  }
  for (const auto& [v, cnt] : verb_count) {
    if (cnt >= config.many_shot_min_count) data.many_shot.verbs.push_back(v);
  }
  for (const auto& [k, cnt] : noun_count) {
    if (cnt >= config.many_shot_min_count) data.many_shot.nouns.push_back(k);
  }
  return data;
}

}  // namespace srl
