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
#include <utility>
#include <vector>

#include "qflat/circuit.hpp"
#include "qflat/clifford.hpp"
#include "qflat/linalg.hpp"
#include "qflat/rng.hpp"
#include "qflat/simulator.hpp"
#include "qflat/teleport.hpp"
#include "qflat/verification.hpp"

namespace qflat {
namespace testutil {

inline Mat2 mat2_from(const MatC& m) {
  return {m(0, 0), m(0, 1), m(1, 0), m(1, 1)};
}

inline MatC mat2_to(const Mat2& m) {
  MatC a(2, 2);
  a << m[0], m[1], m[2], m[3];
  return a;
}

// Random layered unitary-model circuit mixing 1q unitaries, TOFFOLIs, and
// FANOUTs, with every layer acting on disjoint qubits.
inline Circuit random_unitary_circuit(unsigned n_in, unsigned n_anc,
                                      unsigned depth, Rng& rng) {
  Circuit c;
  c.model = Model::kQac0f;
  c.n_in = n_in;
  c.n_anc = n_anc;
  const unsigned n = c.n_total();
  for (unsigned l = 0; l < depth; ++l) {
    std::vector<unsigned> pool(n);
    for (unsigned i = 0; i < n; ++i) pool[i] = i;
    for (unsigned i = n; i > 1; --i)
      std::swap(pool[i - 1], pool[rng.u64_below(i)]);
    Layer layer;
    std::size_t pos = 0;
    while (pos < pool.size()) {
      const std::uint64_t pick = rng.u64_below(3);
      const std::size_t left = pool.size() - pos;
      if (pick == 0 || left < 3) {
        layer.push_back(u1(pool[pos], mat2_from(haar_unitary(2, rng))));
        pos += 1;
      } else if (pick == 1) {
        layer.push_back(ToffoliGate{{pool[pos], pool[pos + 1]}, pool[pos + 2]});
        pos += 3;
      } else {
        layer.push_back(FanoutGate{pool[pos], {pool[pos + 1], pool[pos + 2]}});
        pos += 3;
      }
    }
    c.layers.push_back(std::move(layer));
  }
  return c;
}

// Single-qubit circuit for the 2x2 unitary u with a deliberate noise leak
// of implementation error exactly sin^2(delta): a small rotation on a
// private ancilla, controlled (in a basis conjugated by r) by the data
// qubit. With r = identity and plain = true the leak is uncontrolled.
inline Circuit noisy_1q_circuit(const Mat2& u, double delta, bool plain,
                                const Mat2& r) {
  Circuit c;
  c.model = Model::kQac0f;
  c.n_in = 1;
  c.n_anc = 1;
  c.layers.push_back({u1(0, u)});
  if (plain) {
    c.layers.push_back({u1(1, rx_mat(2 * delta))});
    return c;
  }
  c.layers.push_back({u1(0, r)});
  for (auto& l : controlled_u1_layers(0, 1, rx_mat(2 * delta)))
    c.layers.push_back(std::move(l));
  c.layers.push_back({u1(0, mat2_dagger(r))});
  return c;
}

// --- Tracked Cliffords -------------------------------------------------------

// A tableau paired with the dense unitary of the same gate sequence, so the
// dense side can serve as an independent oracle for tableau operations.
struct TrackedClifford {
  CliffordTableau tab;
  MatC u;
};

inline MatC embed_1q(unsigned n, unsigned q, const MatC& m) {
  MatC out = MatC::Identity(1, 1);
  for (unsigned j = 0; j < n; ++j)
    out = kron(out, j == q ? m : MatC::Identity(2, 2));
  return out;
}

inline MatC dense_cnot(unsigned n, unsigned c, unsigned t) {
  const MatC id = MatC::Identity(Eigen::Index(1) << n, Eigen::Index(1) << n);
  const MatC zc = embed_1q(n, c, pauli_z());
  const MatC xt = embed_1q(n, t, pauli_x());
  return 0.5 * (id + zc) + 0.5 * (id - zc) * xt;
}

inline TrackedClifford tracked_identity(unsigned n) {
  const Eigen::Index d = Eigen::Index(1) << n;
  return {CliffordTableau::identity(n), MatC::Identity(d, d)};
}

// Apply `len` random generators (H, S, Sdg, X, Z, CNOT on a random ordered
// pair) to both representations.
inline void tracked_apply_random(TrackedClifford& tc, unsigned len, Rng& rng) {
  const unsigned n = tc.tab.n;
  for (unsigned i = 0; i < len; ++i) {
    const std::uint64_t kind = rng.u64_below(n >= 2 ? 6 : 5);
    if (kind == 5) {
      const unsigned c = static_cast<unsigned>(rng.u64_below(n));
      unsigned t = static_cast<unsigned>(rng.u64_below(n - 1));
      if (t >= c) ++t;
      tc.tab.apply_cnot(c, t);
      tc.u = dense_cnot(n, c, t) * tc.u;
      continue;
    }
    const unsigned q = static_cast<unsigned>(rng.u64_below(n));
    MatC g(2, 2);
    switch (kind) {
      case 0:
        tc.tab.apply_h(q);
        g = mat2_to(h_mat());
        break;
      case 1:
        tc.tab.apply_s(q);
        g = mat2_to(s_mat());
        break;
      case 2:
        tc.tab.apply_sdg(q);
        g = mat2_to(sdg_mat());
        break;
      case 3:
        tc.tab.apply_x(q);
        g = mat2_to(x_mat());
        break;
      default:
        tc.tab.apply_z(q);
        g = mat2_to(z_mat());
        break;
    }
    tc.u = embed_1q(n, q, g) * tc.u;
  }
}

inline TrackedClifford random_tracked_clifford(unsigned n, unsigned len,
                                               Rng& rng) {
  TrackedClifford tc = tracked_identity(n);
  tracked_apply_random(tc, len, rng);
  return tc;
}

// Largest |a - b| after aligning global phase on the largest entry of b.
inline double mod_phase_distance(const MatC& a, const MatC& b) {
  Eigen::Index bi = 0, bj = 0;
  b.cwiseAbs().maxCoeff(&bi, &bj);
  const cplx pa = a(bi, bj), pb = b(bi, bj);
  if (std::abs(pa) < 1e-14) return 1.0;
  const cplx align = pb / pa;
  return ((align / std::abs(align)) * a - b).cwiseAbs().maxCoeff();
}

// --- Teleport-plan verification ------------------------------------------------

// The per-boundary teleport verifier lives in the library so that tooling can
// run the same check; re-export the names tests were written against.
using ::qflat::piece_unitary;
using ::qflat::teleport_branch_deviation;
using ::qflat::xz_operator;

}  // namespace testutil
}  // namespace qflat
