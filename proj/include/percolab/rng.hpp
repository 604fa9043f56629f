#pragma once

#include <cstdint>

// Counter-based randomness: every random quantity in the library is a pure
// function of (seed, stream tag, key words).  Trials, vertices and retries are
// folded into the key, so results never depend on evaluation order, lazy
// evaluation or the number of workers.

namespace percolab {


inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t keyed(std::uint64_t seed, std::uint64_t a,
                           std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

inline double to_unit(std::uint64_t x) { return double(x >> 11) * 0x1.0p-53; }

// uniform in [0, 1)
inline double uniform01(std::uint64_t seed, std::uint64_t a,
                        std::uint64_t b = 0, std::uint64_t c = 0) {
  return to_unit(keyed(seed, a, b, c));
}

// Stream tags.  Arbitrary distinct constants; never reuse one for a new
// purpose or previously published bits change under the same seed.
namespace tag {
constexpr std::uint64_t site = 0x736974651ull;
constexpr std::uint64_t mark = 0x6d61726b1ull;
constexpr std::uint64_t lr_shell = 0x6c727368ull;
constexpr std::uint64_t cover = 0x636f7672ull;
constexpr std::uint64_t iso_sample = 0x69736f73ull;
constexpr std::uint64_t trial = 0x7472696cull;
constexpr std::uint64_t subcommand = 0x73756263ull;
constexpr std::uint64_t misc = 0x6d697363ull;
}  // namespace tag

// Sequential stream for algorithms that draw a data-dependent number of
// values (subset growth, shell skip-sampling).  Still a pure function of its
// key, so replays are deterministic.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t tag_word, std::uint64_t id0 = 0,
         std::uint64_t id1 = 0)
      : key_(keyed(seed, tag_word, id0, id1)), n_(0) {}

  std::uint64_t next_u64() { return mix64(key_ ^ n_++); }
  double next_u01() { return to_unit(next_u64()); }

  // uniform integer in [0, n); n >= 1
  std::uint64_t next_below(std::uint64_t n) {
    // multiply-shift; bias is negligible for the n used here (|n| << 2^32)
    return std::uint64_t((__uint128_t(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t n_;
};


}  // namespace percolab
