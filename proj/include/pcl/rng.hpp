#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace pcl {

// splitmix64; used to mix seed material into well-distributed 64-bit states.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_str(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Per-item seeds are derived, never shared, so parallel loaders and reordered
// batches produce the same data.
inline std::uint64_t derive_seed(std::uint64_t global_seed, const std::string& video_id,
                                 std::uint64_t epoch, std::uint64_t clip_index) {
  std::uint64_t h = mix64(global_seed);
  h = mix64(h ^ hash_str(video_id));
  h = mix64(h ^ epoch);
  h = mix64(h ^ clip_index);
  return h;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {  // inclusive bounds
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double gaussian(Rng& rng, double mean = 0.0, double stddev = 1.0) {
  return std::normal_distribution<double>(mean, stddev)(rng);
}

}  // namespace pcl
