#pragma once

#include <cstdint>
#include <cmath>

namespace gtsim {

// Deterministic counter-based random stream. Every consumer derives its own
// stream from (root seed, phase, agent, round, step), so results do not
// depend on the order in which agents are processed or on thread count.
//
// The generator core is SplitMix64; distributions are implemented here
// rather than taken from <random> so that byte-identical output does not
// depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound) without modulo bias.
  std::uint64_t next_below(std::uint64_t bound) {
    std::uint64_t threshold = (0ULL - bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    u2 = next_double();
    double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(6.283185307179586477 * u2);
    have_spare_ = true;
    return mag * std::cos(6.283185307179586477 * u2);
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Stream labels. Keeping them centralized avoids accidental collisions
// between consumers that draw from the same root seed.
enum class StreamKind : std::uint64_t {
  param_init = 1,   // shared model initialization
  init_batch = 2,   // per-agent batch used at algorithm initialization
  local_batch = 3,  // per-(agent, round, local-step) mini-batches
  partition = 4,    // data partitioning
  dataset = 5,      // synthetic data generation
  graph = 6,        // topology generation
  probe = 7,        // constant-estimation probes
};

inline std::uint64_t mix_u64(std::uint64_t h, std::uint64_t w) {
  h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  std::uint64_t z = h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derive an independent stream for (seed, kind, a, b, c). The mixing is a
// fixed-point hash chain, so derivation order is part of the contract.
inline Rng derive_stream(std::uint64_t root_seed, StreamKind kind,
                         std::uint64_t a = 0, std::uint64_t b = 0,
                         std::uint64_t c = 0) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;
  h = mix_u64(h, root_seed);
  h = mix_u64(h, static_cast<std::uint64_t>(kind));
  h = mix_u64(h, a);
  h = mix_u64(h, b);
  h = mix_u64(h, c);
  return Rng(h);
}

}  // namespace gtsim
