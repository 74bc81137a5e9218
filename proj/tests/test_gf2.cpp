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

#include "qflat/gf2.hpp"

#include <cstdint>
#include <map>
#include <vector>

#include "gtest/gtest.h"

namespace qflat {
namespace {

// ---------------------------------------------------------------------------
// Independent oracle: schoolbook polynomial arithmetic over GF(2) via long
// division, sharing no code with the library implementation.
namespace oracle {

using u128 = unsigned __int128;

u128 pmul(u128 a, std::uint64_t b) {
  u128 r = 0;
  while (b) {
    if (b & 1) r ^= a;
    a <<= 1;
    b >>= 1;
  }
  return r;
}

int degree(u128 a) {
  int d = -1;
  while (a) {
    a >>= 1;
    ++d;
  }
  return d;
}

u128 pmod(u128 a, u128 f) {
  int df = degree(f);
  while (degree(a) >= df && a) a ^= f << (degree(a) - df);
  return a;
}

u128 modulus(unsigned s) {
  return (static_cast<u128>(1) << s) ^ kFieldPolyTail[s];
}

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, unsigned s) {
  return static_cast<std::uint64_t>(pmod(pmul(a, b), modulus(s)));
}

u128 gcd(u128 a, u128 b) {
  while (b) {
    u128 t = pmod(a, b);
    a = b;
    b = t;
  }
  return a;
}

}  // namespace oracle
// ---------------------------------------------------------------------------

TEST(Gf2, MulMatchesBruteForceTableGf8) {
  // Brute-force multiplication table for GF(8) = GF(2)[x]/(x^3+x+1),
  // computed by polynomial long division before the implementation existed.
  // Frozen spot value: (x^2+x) * (x+1) = x^3+x = (x+1)+x = 1.
  FieldElement a = make_element(0b110, 3);
  FieldElement b = make_element(0b011, 3);
  EXPECT_EQ(gf_mul(a, b).bits, 0b001u);

  for (std::uint64_t x = 0; x < 8; ++x)
    for (std::uint64_t y = 0; y < 8; ++y)
      EXPECT_EQ(gf_mul(make_element(x, 3), make_element(y, 3)).bits,
                oracle::mulmod(x, y, 3))
          << "x=" << x << " y=" << y;
}

TEST(Gf2, MulMatchesOracleOnRandomWideInputs) {
  Rng rng(2024);
  for (unsigned s : {1u, 2u, 5u, 8u, 13u, 16u, 23u, 32u, 47u, 63u, 64u}) {
    for (int i = 0; i < 200; ++i) {
      std::uint64_t x = rng.bits(s), y = rng.bits(s);
      EXPECT_EQ(gf_mul(make_element(x, s), make_element(y, s)).bits,
                oracle::mulmod(x, y, s))
          << "s=" << s;
    }
  }
}

TEST(Gf2, EveryTableEntryIsIrreducible) {
  // Rabin's test: f (degree s) is irreducible over GF(2) iff
  // x^(2^s) == x (mod f) and gcd(x^(2^(s/q)) - x, f) = 1 for all prime q | s.
  for (unsigned s = 1; s <= 64; ++s) {
    oracle::u128 f = oracle::modulus(s);
    oracle::u128 x = oracle::pmod(0b10, f);
    oracle::u128 t = x;
    for (unsigned i = 0; i < s; ++i) t = oracle::pmod(oracle::pmul(t, static_cast<std::uint64_t>(t)), f);
    EXPECT_EQ(t, x) << "Frobenius fixed point fails at s=" << s;
    std::vector<unsigned> primes;
    unsigned m = s;
    for (unsigned d = 2; d * d <= m; ++d)
      while (m % d == 0) {
        primes.push_back(d);
        m /= d;
      }
    if (m > 1) primes.push_back(m);
    for (unsigned q : primes) {
      oracle::u128 u = x;
      for (unsigned i = 0; i < s / q; ++i)
        u = oracle::pmod(oracle::pmul(u, static_cast<std::uint64_t>(u)), f);
      EXPECT_EQ(oracle::gcd(u ^ x, f), static_cast<oracle::u128>(1))
          << "proper-subfield factor at s=" << s << " q=" << q;
    }
  }
}

TEST(Gf2, FieldAxiomsSampled) {
  Rng rng(11);
  for (unsigned s : {3u, 8u, 16u, 40u, 64u}) {
    for (int i = 0; i < 100; ++i) {
      FieldElement a = make_element(rng.bits(s), s);
      FieldElement b = make_element(rng.bits(s), s);
      FieldElement c = make_element(rng.bits(s), s);
      EXPECT_EQ(gf_mul(a, b).bits, gf_mul(b, a).bits);
      EXPECT_EQ(gf_mul(gf_mul(a, b), c).bits, gf_mul(a, gf_mul(b, c)).bits);
      EXPECT_EQ(gf_mul(a, gf_add(b, c)).bits,
                gf_add(gf_mul(a, b), gf_mul(a, c)).bits);
      EXPECT_EQ(gf_mul(a, FieldElement{1, s}).bits, a.bits);
    }
  }
}

TEST(Gf2, InversesExistExhaustivelyUpToS8) {
  // Every nonzero element must have a multiplicative inverse; exhaustive for
  // s <= 8 this doubles as an irreducibility witness for those moduli.
  for (unsigned s = 1; s <= 8; ++s) {
    for (std::uint64_t x = 1; x < (1ull << s); ++x) {
      FieldElement inv = gf_inv(make_element(x, s));
      EXPECT_EQ(gf_mul(make_element(x, s), inv).bits, 1u)
          << "s=" << s << " x=" << x;
    }
  }
  EXPECT_THROW(gf_inv(FieldElement{0, 5}), std::domain_error);
}

TEST(Gf2, MismatchedWidthsRejected) {
  EXPECT_THROW(gf_mul(FieldElement{1, 3}, FieldElement{1, 4}),
               std::invalid_argument);
  EXPECT_THROW(gf_add(FieldElement{1, 3}, FieldElement{1, 4}),
               std::invalid_argument);
  EXPECT_THROW(make_element(0b1000, 3), std::invalid_argument);
  EXPECT_THROW(make_element(1, 0), std::invalid_argument);
  EXPECT_THROW(make_element(1, 65), std::invalid_argument);
}

TEST(Gf2, PolyEvalFrozenExample) {
  // f(x) = a0 + a1*x over GF(8) with (a0, a1) = (0b001, 0b010), x = 0b011:
  // f(x) = 1 XOR (x * (x+1)) = 1 XOR 0b110 = 0b111; low bit = 1.
  PolyFn f;
  f.s = 3;
  f.out_bits = 3;
  f.coeffs = {0b001, 0b010};
  EXPECT_EQ(poly_eval(f, 0b011), 0b111u);
  f.out_bits = 1;
  EXPECT_EQ(poly_eval(f, 0b011), 1u);
}

TEST(Gf2, PolyEvalMatchesDirectSum) {
  Rng rng(12);
  for (unsigned s : {4u, 9u, 17u}) {
    for (int rep = 0; rep < 50; ++rep) {
      PolyFn f = sample_twise_family(s, 4, s, rng);
      std::uint64_t x = rng.bits(s);
      FieldElement acc{0, s};
      FieldElement xe = make_element(x, s);
      FieldElement xp{1, s};
      for (std::uint64_t c : f.coeffs) {
        acc = gf_add(acc, gf_mul(FieldElement{c, s}, xp));
        xp = gf_mul(xp, xe);
      }
      EXPECT_EQ(poly_eval(f, x), acc.bits);
    }
  }
}

TEST(Gf2, PolyEvalValidatesArguments) {
  PolyFn f;
  f.s = 3;
  f.out_bits = 4;  // wider than the field
  f.coeffs = {1};
  EXPECT_THROW(poly_eval(f, 0), std::invalid_argument);
  f.out_bits = 1;
  EXPECT_THROW(poly_eval(f, 0b1000), std::invalid_argument);
}

TEST(Gf2, TwiseFamilyIsExactlyUniformOnPairs) {
  // Degree-1 polynomials over GF(8): over all 64 keys, every pair of
  // distinct inputs must hit every output pair exactly once (2-wise
  // independence, exact counting).
  const unsigned s = 3;
  for (std::uint64_t x1 = 0; x1 < 8; ++x1) {
    for (std::uint64_t x2 = x1 + 1; x2 < 8; ++x2) {
      std::map<std::pair<std::uint64_t, std::uint64_t>, int> counts;
      for (std::uint64_t a0 = 0; a0 < 8; ++a0)
        for (std::uint64_t a1 = 0; a1 < 8; ++a1) {
          PolyFn f;
          f.s = s;
          f.out_bits = s;
          f.coeffs = {a0, a1};
          counts[{poly_eval(f, x1), poly_eval(f, x2)}]++;
        }
      EXPECT_EQ(counts.size(), 64u);
      for (auto& [k, v] : counts) EXPECT_EQ(v, 1);
    }
  }
}

TEST(Gf2, SampleTwiseFamilyShapes) {
  Rng rng(1);
  PolyFn f = sample_twise_family(8, 4, 1, rng);
  EXPECT_EQ(f.coeffs.size(), 4u);
  EXPECT_EQ(f.s, 8u);
  EXPECT_EQ(f.out_bits, 1u);
  for (auto c : f.coeffs) EXPECT_LT(c, 256u);
  EXPECT_THROW(sample_twise_family(0, 2, 1, rng), std::invalid_argument);
  EXPECT_THROW(sample_twise_family(8, 0, 1, rng), std::invalid_argument);
  EXPECT_THROW(sample_twise_family(8, 2, 9, rng), std::invalid_argument);
}

}  // namespace
}  // namespace qflat
