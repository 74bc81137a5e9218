// Copyright 2026 The qflat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace qflat {

// Counter-based splittable generator. Every random decision in the library is
// keyed by (seed, derivation path, counter), so results are reproducible
// across platforms and independent of evaluation order: deriving a child
// stream never perturbs the parent, and two children with different tags are
// statistically independent.
//
// The core is the SplitMix64 finalizer (a 64-bit avalanche permutation)
// applied to key + counter * golden-ratio increment.

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix64(seed ^ kGolden)) {}
  Rng(std::uint64_t key, std::uint64_t counter, bool raw)
      : key_(key), ctr_(counter) {
    (void)raw;
  }

  // Child stream for an independent subtask. Children are keyed by the parent
  // key and the tag only; drawing from the parent later does not affect them.
  Rng derive(std::uint64_t tag) const {
    return Rng(mix64(key_ ^ mix64(tag + 0x1b873593a55a5a5aull)), 0, true);
  }
  Rng derive(std::uint64_t tag_a, std::uint64_t tag_b) const {
    return derive(tag_a).derive(tag_b);
  }
  Rng derive_path(std::initializer_list<std::uint64_t> tags) const {
    Rng r = *this;
    for (std::uint64_t t : tags) r = r.derive(t);
    return r;
  }

  std::uint64_t u64() { return mix64(key_ + (++ctr_) * kGolden); }

  // Unbiased integer in [0, bound) by rejection.
  std::uint64_t u64_below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    std::uint64_t mask = ~0ull >> __builtin_clzll((bound - 1) | 1);
    for (;;) {
      std::uint64_t v = u64() & mask;
      if (v < bound) return v;
    }
  }

  // k uniform bits, k <= 64.
  std::uint64_t bits(unsigned k) {
    if (k == 0) return 0;
    return u64() >> (64 - k);
  }
  bool bit() { return (u64() >> 63) != 0; }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (stateless: two uniforms per call, no
  // cached spare, so the draw count per call is fixed).
  double normal() {
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return ctr_; }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace qflat
