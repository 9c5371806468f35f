#pragma once

// Deterministic, splittable random streams.
//
// Every random quantity is drawn from an engine seeded by a StreamKey. Keys
// form a tree: a master seed, then named scopes (subcommand, study phase),
// then integer indices (time point, replicate). Two keys that differ anywhere
// on their path give unrelated streams, so adding replicates never perturbs
// existing ones and results do not depend on how work is split over threads.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace kinetic_brw {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class StreamKey {
 public:
  constexpr explicit StreamKey(std::uint64_t master_seed)
      : state_(splitmix64(master_seed)) {}

  constexpr StreamKey child(std::uint64_t index) const {
    return StreamKey(Raw{}, splitmix64(state_ ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
  }
  constexpr StreamKey child(std::string_view scope) const {
    return StreamKey(Raw{}, splitmix64(state_ + fnv1a(scope)));
  }
  constexpr std::uint64_t value() const { return state_; }

 private:
  struct Raw {};
  constexpr StreamKey(Raw, std::uint64_t s) : state_(s) {}
  std::uint64_t state_;
};

/// The engine type used throughout. Seeded from a StreamKey only.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(const StreamKey& key) : engine_(key.value()) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Unit-mean exponential.
  double exponential() { return -std::log(uniform()); }
  /// Uniform index in [0, n). Uses the top bits of a 64-bit draw.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }
  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace kinetic_brw
