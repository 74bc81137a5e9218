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

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "qflat/rng.hpp"

namespace qflat {

// Binary field GF(2^s) for 1 <= s <= 64, with one fixed modulus per degree.
//
// Elements are polynomials over GF(2) of degree < s, packed as bits (bit i =
// coefficient of x^i). The modulus for degree s is x^s + tail(s), where the
// tails below are: the Conway polynomial of GF(2^s) for s <= 16, and the
// lexicographically smallest monic irreducible for 17 <= s <= 64. The full
// table, and the procedure that generated and checked it, are documented in
// docs/field_polynomials.md; the test suite re-verifies irreducibility of
// every entry from scratch.
inline constexpr std::uint64_t kFieldPolyTail[65] = {
    0,
    // s = 1..16: Conway polynomials.
    0x1, 0x3, 0x3, 0x3, 0x5, 0x1B, 0x3, 0x1D, 0x11, 0x6F, 0x5, 0xEB, 0x1B,
    0xA9, 0x35, 0x2D,
    // s = 17..64: lexicographically least irreducible tails.
    0x9, 0x9, 0x27, 0x9, 0x5, 0x3, 0x21, 0x1B, 0x9, 0x1B, 0x27, 0x3, 0x5,
    0x3, 0x9, 0x8D, 0x4B, 0x1B, 0x5, 0x35, 0x3F, 0x63, 0x11, 0x39, 0x9,
    0x27, 0x59, 0x21, 0x1B, 0x3, 0x21, 0x2D, 0x71, 0x1D, 0x4B, 0x9, 0x47,
    0x7D, 0x47, 0x95, 0x11, 0x63, 0x7B, 0x3, 0x27, 0x69, 0x3, 0x1B};

struct FieldElement {
  std::uint64_t bits = 0;
  unsigned s = 1;
};

inline std::uint64_t field_mask(unsigned s) {
  return s >= 64 ? ~0ull : ((1ull << s) - 1);
}

inline FieldElement make_element(std::uint64_t bits, unsigned s) {
  if (s < 1 || s > 64) throw std::invalid_argument("field width out of range");
  if ((bits & ~field_mask(s)) != 0)
    throw std::invalid_argument("element bits exceed field width");
  return FieldElement{bits, s};
}

inline FieldElement gf_add(FieldElement a, FieldElement b) {
  if (a.s != b.s) throw std::invalid_argument("mismatched field widths");
  return FieldElement{a.bits ^ b.bits, a.s};
}

// Carry-less product reduced mod x^s + tail(s).
inline FieldElement gf_mul(FieldElement a, FieldElement b) {
  if (a.s != b.s) throw std::invalid_argument("mismatched field widths");
  const unsigned s = a.s;
  unsigned __int128 acc = 0;
  unsigned __int128 shifted = a.bits;
  std::uint64_t rhs = b.bits;
  while (rhs) {
    if (rhs & 1) acc ^= shifted;
    shifted <<= 1;
    rhs >>= 1;
  }
  const unsigned __int128 tail = kFieldPolyTail[s];
  for (int i = 2 * static_cast<int>(s) - 2; i >= static_cast<int>(s); --i) {
    if ((acc >> i) & 1) {
      acc ^= (static_cast<unsigned __int128>(1) << i);
      acc ^= tail << (i - s);
    }
  }
  return FieldElement{static_cast<std::uint64_t>(acc & field_mask(s)), s};
}

inline FieldElement gf_pow(FieldElement a, std::uint64_t e) {
  FieldElement r{1, a.s};
  while (e) {
    if (e & 1) r = gf_mul(r, a);
    a = gf_mul(a, a);
    e >>= 1;
  }
  return r;
}

// Multiplicative inverse via a^(2^s - 2); the zero element has none.
inline FieldElement gf_inv(FieldElement a) {
  if (a.bits == 0) throw std::domain_error("zero element has no inverse");
  std::uint64_t e = (a.s >= 64 ? ~0ull : (1ull << a.s) - 1) - 1;
  return gf_pow(a, e);
}

// A univariate polynomial over GF(2^s) used as a keyed function family
// member: f(x) = sum_i coeffs[i] * x^i. Output is truncated to the low
// out_bits bits of the field representation of f(x).
struct PolyFn {
  unsigned s = 1;
  unsigned out_bits = 1;
  std::vector<std::uint64_t> coeffs;  // coeffs[i] < 2^s
};

inline std::uint64_t poly_eval(const PolyFn& f, std::uint64_t x) {
  if (f.out_bits < 1 || f.out_bits > f.s)
    throw std::invalid_argument("out_bits must be within 1..s");
  if ((x & ~field_mask(f.s)) != 0)
    throw std::invalid_argument("input exceeds field width");
  FieldElement acc{0, f.s};
  FieldElement xe{x, f.s};
  for (auto it = f.coeffs.rbegin(); it != f.coeffs.rend(); ++it) {
    acc = gf_mul(acc, xe);
    acc.bits ^= *it;
  }
  return acc.bits & field_mask(f.out_bits);
}

// Uniformly random degree-(t-1) polynomial: a t-wise independent function
// family on GF(2^s) for t <= 2^s (distinct inputs give uniform independent
// outputs over the key draw).
inline PolyFn sample_twise_family(unsigned s, unsigned t, unsigned out_bits,
                                  Rng& rng) {
  if (s < 1 || s > 64) throw std::invalid_argument("field width out of range");
  if (t < 1) throw std::invalid_argument("t must be positive");
  if (out_bits < 1 || out_bits > s)
    throw std::invalid_argument("out_bits must be within 1..s");
  PolyFn f;
  f.s = s;
  f.out_bits = out_bits;
  f.coeffs.resize(t);
  for (unsigned i = 0; i < t; ++i) f.coeffs[i] = rng.bits(s);
  return f;
}

}  // namespace qflat
