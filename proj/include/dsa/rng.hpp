#pragma once

#include <cstdint>
#include <string_view>

namespace dsa {

// Counter-based pseudo-random generator: the SplitMix64 output function
// applied to (key + counter * golden_gamma). Every draw is a pure function of
// (key, counter), so the sequence is identical on every platform and streams
// can be forked by deriving fresh keys from labels without consuming state.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  static std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
  }

  std::uint64_t next_u64() {
    return mix(key_ + ++counter_ * 0x9e3779b97f4a7c15ull);
  }

  // [0, 1) with 53-bit resolution
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // inclusive bounds; Lemire multiply-shift reduction
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    const auto n = static_cast<std::uint64_t>(hi - lo + 1);
    return lo +
           std::int64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  std::uint64_t key() const { return key_; }

  Rng fork(std::string_view label) const { return Rng(derive(key_, label)); }
  Rng fork(std::uint64_t n) const {
    return Rng(mix(key_ ^ mix(n + 0x517cc1b727220a95ull)));
  }

  // FNV-1a over the label, folded into the key through the mixer
  static std::uint64_t derive(std::uint64_t key, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : label) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return mix(key ^ mix(h));
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace dsa
