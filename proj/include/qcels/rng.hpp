#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string_view>

namespace qcels {

// SplitMix64 finalizer. Bijective on 64-bit words, good avalanche.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a over a byte string; used to turn stream names into keys and for
// content digests of files.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Counter-based generator: every draw is a pure function of (key, counter),
// so any (n, k, slot) index can be evaluated in any order or thread and the
// result is the same. Streams are derived by folding indices into the key.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t key) noexcept : key_(mix64(key)) {}

  constexpr std::uint64_t key() const noexcept { return key_; }

  // Child stream for an integer index (level, point, shot...).
  constexpr CounterRng split(std::uint64_t index) const noexcept {
    return CounterRng(key_ ^ mix64(index + 0x632be59bd9b4e019ULL), raw_tag{});
  }

  // Child stream for a named purpose ("dataset", "weights", ...).
  constexpr CounterRng split(std::string_view name) const noexcept {
    return split(fnv1a64(name));
  }

  constexpr CounterRng split(std::initializer_list<std::uint64_t> path) const noexcept {
    CounterRng r = *this;
    for (auto i : path) r = r.split(i);
    return r;
  }

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix64(key_ ^ mix64(counter));
  }

  // Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on a private sub-stream, so normals never
  // share counters with uniform() on the same stream.
  double normal(std::uint64_t counter) const noexcept {
    const CounterRng sub = split(std::string_view("normal"));
    double u1 = sub.uniform(2 * counter);
    const double u2 = sub.uniform(2 * counter + 1);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  struct raw_tag {};
  constexpr CounterRng(std::uint64_t key, raw_tag) noexcept : key_(key) {}

  std::uint64_t key_;
};

// Sequential view over a CounterRng for code that just wants "the next"
// number. Still deterministic: the i-th call returns uniform(i).
class RngCursor {
 public:
  explicit RngCursor(CounterRng rng) noexcept : rng_(rng) {}

  double uniform() noexcept { return rng_.uniform(counter_++); }
  double normal() noexcept { return rng_.normal(counter_++); }
  std::uint64_t bits() noexcept { return rng_.bits(counter_++); }
  const CounterRng& stream() const noexcept { return rng_; }

 private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace qcels
