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

// Small dense matrix of residues, row-major.
struct ZqMatrix {
  unsigned rows = 0;
  unsigned cols = 0;
  std::vector<std::uint64_t> a;  // rows*cols entries

  std::uint64_t& at(unsigned r, unsigned c) { return a[r * cols + c]; }
  std::uint64_t at(unsigned r, unsigned c) const { return a[r * cols + c]; }
};

inline ZqMatrix zq_mul(const ZqMatrix& x, const ZqMatrix& y, std::uint64_t q) {
  if (x.cols != y.rows) throw std::invalid_argument("dimension mismatch");
  ZqMatrix z{x.rows, y.cols, std::vector<std::uint64_t>(x.rows * y.cols, 0)};
  for (unsigned i = 0; i < x.rows; ++i)
    for (unsigned k = 0; k < x.cols; ++k) {
      std::uint64_t v = x.at(i, k);
      if (!v) continue;
      for (unsigned j = 0; j < y.cols; ++j)
        z.at(i, j) = (z.at(i, j) + v * y.at(k, j)) % q;
    }
  return z;
}

// Rounded mod-q matrix-product PRF (the lattice-style "round the product"
// construction, at toy parameters for desk-scale testing only -- the
// parameters here carry no security).
//
// Key: matrix A with n_dim rows and m columns over Z_q, plus l square n_dim
// x n_dim matrices S_i over Z_q. Evaluation on an l-bit input x:
//
//   F(x) = round_p( transpose(A) * prod_{i: x_i = 1} S_i )   (m x n_dim)
//
// where the product runs left-to-right over i = 1..l and round_p maps each
// entry v in [0, q) to nearest(p*v/q) with exact ties rounded down, mod p.
struct BprKey {
  std::uint64_t q = 256;
  std::uint64_t p = 4;
  unsigned m = 4;
  unsigned n_dim = 4;
  unsigned l = 8;
  ZqMatrix A;                // n_dim x m
  std::vector<ZqMatrix> S;   // l matrices, n_dim x n_dim
};

struct BprParams {
  std::uint64_t q = 256;
  std::uint64_t p = 4;
  unsigned m = 4;
  unsigned n_dim = 4;
  unsigned l = 8;
};

inline void bpr_check(const BprParams& pr) {
  if (pr.p < 2 || pr.p >= pr.q)
    throw std::invalid_argument("require 2 <= p < q");
  if (pr.m == 0 || pr.n_dim == 0 || pr.l == 0)
    throw std::invalid_argument("dimensions must be positive");
  if (pr.l > 63) throw std::invalid_argument("input width too large");
  if (pr.p > (1ull << 62) / pr.q)
    throw std::invalid_argument("p*q too large for exact rounding");
}

inline BprKey sample_bpr_key(const BprParams& pr, Rng& rng) {
  bpr_check(pr);
  BprKey k;
  k.q = pr.q;
  k.p = pr.p;
  k.m = pr.m;
  k.n_dim = pr.n_dim;
  k.l = pr.l;
  k.A = ZqMatrix{pr.n_dim, pr.m,
                 std::vector<std::uint64_t>(pr.n_dim * pr.m, 0)};
  for (auto& v : k.A.a) v = rng.u64_below(pr.q);
  k.S.resize(pr.l);
  for (unsigned i = 0; i < pr.l; ++i) {
    k.S[i] = ZqMatrix{pr.n_dim, pr.n_dim,
                      std::vector<std::uint64_t>(pr.n_dim * pr.n_dim, 0)};
    for (auto& v : k.S[i].a) v = rng.u64_below(pr.q);
  }
  return k;
}

// nearest(p*v/q) with ties rounded down, mod p. Exact in integers:
// ceil((2pv - q) / 2q) = floor((2pv + q - 1) / 2q).
inline std::uint64_t bpr_round(std::uint64_t v, std::uint64_t q,
                               std::uint64_t p) {
  return ((2 * p * v + q - 1) / (2 * q)) % p;
}

// Evaluate the PRF: matrix of residues mod p, shape m x n_dim. Input bit i
// (counting from the least significant bit of x) selects S_{i+1}.
inline ZqMatrix bpr_prf_eval(const BprKey& k, std::uint64_t x) {
  if (k.A.rows != k.n_dim || k.A.cols != k.m)
    throw std::invalid_argument("dimension mismatch");
  if (k.l < 64 && (x >> k.l) != 0)
    throw std::invalid_argument("input exceeds l bits");
  ZqMatrix prod{k.n_dim, k.n_dim,
                std::vector<std::uint64_t>(k.n_dim * k.n_dim, 0)};
  for (unsigned i = 0; i < k.n_dim; ++i) prod.at(i, i) = 1;
  for (unsigned i = 0; i < k.l; ++i) {
    if ((x >> i) & 1) {
      if (k.S[i].rows != k.n_dim || k.S[i].cols != k.n_dim)
        throw std::invalid_argument("dimension mismatch");
      prod = zq_mul(prod, k.S[i], k.q);
    }
  }
  ZqMatrix at{k.m, k.n_dim, std::vector<std::uint64_t>(k.m * k.n_dim, 0)};
  for (unsigned i = 0; i < k.n_dim; ++i)
    for (unsigned j = 0; j < k.m; ++j) at.at(j, i) = k.A.at(i, j);
  ZqMatrix out = zq_mul(at, prod, k.q);
  for (auto& v : out.a) v = bpr_round(v, k.q, k.p);
  return out;
}

// One-bit typecast used by phase oracles: XOR of the low bits of all output
// entries.
inline int bpr_prf_bit(const BprKey& k, std::uint64_t x) {
  ZqMatrix out = bpr_prf_eval(k, x);
  std::uint64_t acc = 0;
  for (auto v : out.a) acc ^= (v & 1);
  return static_cast<int>(acc);
}

// k-bit extraction used by permutation round functions: low bits of the
// first `nbits` entries of the rounded output, row-major, bit j from entry j.
inline std::uint64_t bpr_prf_bits(const BprKey& k, std::uint64_t x,
                                  unsigned nbits) {
  ZqMatrix out = bpr_prf_eval(k, x);
  if (nbits > out.a.size())
    throw std::invalid_argument("requested more bits than output entries");
  std::uint64_t r = 0;
  for (unsigned j = 0; j < nbits; ++j) r |= (out.a[j] & 1) << j;
  return r;
}

}  // namespace qflat
