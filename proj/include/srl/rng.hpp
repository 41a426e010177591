// SPDX-License-Identifier: Apache-2.0
//
// Named, counter-addressed random streams. Every random draw in the project
// comes from make_stream(seed, stream, i, j), so any consumer (an instance in
// a batch, an epoch's shuffle) can be reproduced in isolation and in any
// thread order.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace srl {

enum class Stream : std::uint64_t {
  Init = 1,
  Dropout = 2,
  Sampling = 3,
  Shuffle = 4,
  Bank = 5,
  Synth = 6,
  Eval = 7,
};

/// 64-bit FNV-1a, used for config hashes and checkpoint checksums.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, Stream stream, std::uint64_t i = 0,
                                 std::uint64_t j = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = splitmix64(h ^ i);
  return splitmix64(h ^ (j + 0x632BE59BD9B4E019ULL));
}

inline std::mt19937_64 make_stream(std::uint64_t seed, Stream stream, std::uint64_t i = 0,
                                   std::uint64_t j = 0) {
  return std::mt19937_64(stream_seed(seed, stream, i, j));
}

}  // namespace srl
