#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dpdhsic {

/// Deterministic random stream with cheap derived sub-streams.
///
/// Monte Carlo replicates, resample indices and noise draws each run on their
/// own stream derived by fork(tag) from a parent key, so results are
/// bit-reproducible regardless of evaluation order or thread count. fork()
/// depends only on (key, tag), never on how many variates were drawn.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc908ull)), gen_(key_) {}

  /// Independent child stream; fork(a).fork(b) != fork(b).fork(a).
  Rng fork(std::uint64_t tag) const { return Rng(from_key_tag{}, mix(key_ + mix(tag))); }

  std::uint64_t bits() { return gen_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1): never exactly 0, 0.5 or 1.
  double uniform_open() { return (static_cast<double>(bits() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  /// Uniform integer in [0, n); n >= 1 (multiply-shift reduction).
  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>((static_cast<unsigned __int128>(bits()) * n) >> 64);
  }

 private:
  struct from_key_tag {};
  Rng(from_key_tag, std::uint64_t key) : key_(key), gen_(key) {}

  // splitmix64 finalizer: the stream-derivation hash.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dpdhsic
