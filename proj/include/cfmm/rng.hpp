// SPDX-License-Identifier: Apache-2.0
//
// Deterministic random number generation. All randomness in the library flows
// through this header so that a given seed reproduces the same realization,
// solver trajectory, and Monte-Carlo estimate on every platform. The standard
// engine is fully specified by the C++ standard; the distribution transforms
// (uniform conversion, Box-Muller) are hand-rolled because the std
// distributions are implementation-defined.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace cfmm {

// One SplitMix64 step: advances `state` and returns a mixed 64-bit value.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from (base, stream). Used to give each
// realization, scheme, and sub-task its own stream: distinct inputs map to
// uncorrelated seeds, and the mapping is stable across runs.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t s = base;
  (void)splitmix64(s);
  s ^= 0xd1342543de82ef95ULL * (stream + 1);
  return splitmix64(s);
}

// Deterministic generator: mt19937_64 plus explicit scalar transforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; generates pairs, caches the second value.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double t = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  // Circularly symmetric complex normal with unit variance (0.5 per part).
  std::complex<double> cnormal() {
    const double s = std::numbers::sqrt2 / 2.0;
    const double re = normal() * s;
    const double im = normal() * s;
    return {re, im};
  }

  std::uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cfmm
