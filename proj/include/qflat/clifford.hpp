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

#include <algorithm>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qflat/circuit.hpp"
#include "qflat/linalg.hpp"
#include "qflat/rng.hpp"

namespace qflat {

// --- Pauli strings --------------------------------------------------------

// n-qubit Pauli string in the Hermitian convention: the represented operator
// is i^phase * W(x, z) with W(x, z) = i^{x.z} X^x Z^z. W is Hermitian and
// squares to the identity, so even phases mark Hermitian strings, and
// Clifford conjugation keeps even phases even.
struct Pauli {
  unsigned n = 0;
  std::vector<std::uint8_t> x, z;
  std::uint8_t phase = 0;  // exponent of i, mod 4

  bool operator==(const Pauli&) const = default;
};

inline Pauli pauli_identity(unsigned n) {
  return Pauli{n, std::vector<std::uint8_t>(n, 0),
               std::vector<std::uint8_t>(n, 0), 0};
}

namespace detail {

inline unsigned dot4(const std::vector<std::uint8_t>& a,
                     const std::vector<std::uint8_t>& b) {
  unsigned s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] & b[i];
  return s & 3u;
}

}  // namespace detail

// Product with exact phase tracking:
//   W(x1,z1) W(x2,z2) = i^g W(x1^x2, z1^z2),
//   g = x1.z1 + x2.z2 - x3.z3 + 2 z1.x2  (mod 4),
// where x3 = x1^x2, z3 = z1^z2 and dots are integer inner products.
inline Pauli pauli_mul(const Pauli& a, const Pauli& b) {
  if (a.n != b.n) throw std::invalid_argument("pauli size mismatch");
  Pauli c = pauli_identity(a.n);
  for (unsigned j = 0; j < a.n; ++j) {
    c.x[j] = a.x[j] ^ b.x[j];
    c.z[j] = a.z[j] ^ b.z[j];
  }
  const unsigned g = detail::dot4(a.x, a.z) + detail::dot4(b.x, b.z) + 4 -
                     detail::dot4(c.x, c.z) + 2 * detail::dot4(a.z, b.x);
  c.phase = static_cast<std::uint8_t>((a.phase + b.phase + g) & 3u);
  return c;
}

inline bool pauli_commutes(const Pauli& a, const Pauli& b) {
  if (a.n != b.n) throw std::invalid_argument("pauli size mismatch");
  unsigned s = 0;
  for (unsigned j = 0; j < a.n; ++j)
    s ^= (a.x[j] & b.z[j]) ^ (a.z[j] & b.x[j]);
  return (s & 1u) == 0;
}

// Dense matrix. W(x, z) factorizes per qubit as (0,0) -> I, (1,0) -> X,
// (0,1) -> Z, (1,1) -> Y, with the global i^phase in front.
inline MatC pauli_dense(const Pauli& p) {
  static const std::complex<double> kIPow[4] = {
      {1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  MatC m = MatC::Identity(1, 1);
  for (unsigned j = 0; j < p.n; ++j) {
    if (p.x[j] && p.z[j])
      m = kron(m, pauli_y());
    else if (p.x[j])
      m = kron(m, pauli_x());
    else if (p.z[j])
      m = kron(m, pauli_z());
    else
      m = kron(m, pauli_i());
  }
  return kIPow[p.phase & 3u] * m;
}

// --- Clifford tableaux ------------------------------------------------------

// A Clifford unitary U represented by the generator images U X_i U^dagger
// (x_out[i]) and U Z_i U^dagger (z_out[i]); all image phases are even. The
// binary parts of the rows form a 2n x 2n symplectic matrix over GF(2), and
// the 2n phase bits complete the description of U mod global phase.
struct CliffordTableau {
  unsigned n = 0;
  std::vector<Pauli> x_out, z_out;

  bool operator==(const CliffordTableau&) const = default;

  static CliffordTableau identity(unsigned n) {
    CliffordTableau t;
    t.n = n;
    t.x_out.reserve(n);
    t.z_out.reserve(n);
    for (unsigned i = 0; i < n; ++i) {
      Pauli px = pauli_identity(n), pz = pauli_identity(n);
      px.x[i] = 1;
      pz.z[i] = 1;
      t.x_out.push_back(std::move(px));
      t.z_out.push_back(std::move(pz));
    }
    return t;
  }

  // Gate application is left-multiplication of the represented unitary, so
  // every image row is conjugated by the gate. The local bit/phase rules
  // below are the conjugation tables of H, S, X, Z, and CNOT written in the
  // Hermitian convention.
  void apply_h(unsigned q) {
    for_rows([q](Pauli& p) {
      std::swap(p.x[q], p.z[q]);
      if (p.x[q] & p.z[q]) flip_sign(p);
    });
  }

  void apply_s(unsigned q) {
    for_rows([q](Pauli& p) {
      if (p.x[q]) {
        if (p.z[q]) flip_sign(p);
        p.z[q] ^= 1u;
      }
    });
  }

  void apply_sdg(unsigned q) {
    for_rows([q](Pauli& p) {
      if (p.x[q]) {
        if (!p.z[q]) flip_sign(p);
        p.z[q] ^= 1u;
      }
    });
  }

  void apply_x(unsigned q) {
    for_rows([q](Pauli& p) {
      if (p.z[q]) flip_sign(p);
    });
  }

  void apply_z(unsigned q) {
    for_rows([q](Pauli& p) {
      if (p.x[q]) flip_sign(p);
    });
  }

  void apply_cnot(unsigned c, unsigned t) {
    if (c == t) throw std::invalid_argument("cnot needs distinct qubits");
    for_rows([c, t](Pauli& p) {
      if (p.x[c] & p.z[t] & (1u ^ p.x[t] ^ p.z[c])) flip_sign(p);
      p.x[t] ^= p.x[c];
      p.z[c] ^= p.z[t];
    });
  }

  void apply_swap(unsigned a, unsigned b) {
    for_rows([a, b](Pauli& p) {
      std::swap(p.x[a], p.x[b]);
      std::swap(p.z[a], p.z[b]);
    });
  }

  // U p U^dagger, via W(x,z) = i^{x.z} prod_j X_j^{x_j} prod_j Z_j^{z_j} and
  // the multiplicativity of conjugation.
  Pauli conjugate(const Pauli& p) const {
    if (p.n != n) throw std::invalid_argument("pauli size mismatch");
    Pauli acc = pauli_identity(n);
    for (unsigned j = 0; j < n; ++j)
      if (p.x[j]) acc = pauli_mul(acc, x_out[j]);
    for (unsigned j = 0; j < n; ++j)
      if (p.z[j]) acc = pauli_mul(acc, z_out[j]);
    acc.phase = static_cast<std::uint8_t>(
        (acc.phase + p.phase + detail::dot4(p.x, p.z)) & 3u);
    return acc;
  }

  // Structural invariant: rows pairwise satisfy the generator commutation
  // pattern (only X_i vs Z_i anticommute) and every phase is even.
  bool symplectic_ok() const {
    if (x_out.size() != n || z_out.size() != n) return false;
    for (const auto* rows : {&x_out, &z_out})
      for (const Pauli& p : *rows)
        if (p.n != n || p.x.size() != n || p.z.size() != n || (p.phase & 1u))
          return false;
    for (unsigned i = 0; i < n; ++i) {
      for (unsigned j = 0; j < n; ++j) {
        if (!pauli_commutes(x_out[i], x_out[j])) return false;
        if (!pauli_commutes(z_out[i], z_out[j])) return false;
        if (pauli_commutes(x_out[i], z_out[j]) != (i != j)) return false;
      }
    }
    return true;
  }

 private:
  static void flip_sign(Pauli& p) {
    p.phase = static_cast<std::uint8_t>((p.phase + 2) & 3u);
  }

  template <typename F>
  void for_rows(F f) {
    for (Pauli& p : x_out) f(p);
    for (Pauli& p : z_out) f(p);
  }
};

// Tableau of the product a*b (apply b first): images of b's rows conjugated
// by a. Exact, phases included.
inline CliffordTableau compose(const CliffordTableau& a,
                               const CliffordTableau& b) {
  if (a.n != b.n) throw std::invalid_argument("tableau size mismatch");
  CliffordTableau c;
  c.n = a.n;
  c.x_out.reserve(a.n);
  c.z_out.reserve(a.n);
  for (unsigned i = 0; i < a.n; ++i) {
    c.x_out.push_back(a.conjugate(b.x_out[i]));
    c.z_out.push_back(a.conjugate(b.z_out[i]));
  }
  return c;
}

// Inverse tableau: the binary part inverts through the symplectic identity
// M^{-1} = L M^T L (L swaps the X and Z halves), and each candidate row's
// sign is fixed so that conjugating it by the original tableau returns the
// corresponding generator exactly.
inline CliffordTableau inverse_tableau(const CliffordTableau& t) {
  const unsigned n = t.n;
  const unsigned d = 2 * n;
  auto mbit = [&](unsigned r, unsigned c) -> std::uint8_t {
    const Pauli& img = c < n ? t.x_out[c] : t.z_out[c - n];
    return r < n ? img.x[r] : img.z[r - n];
  };
  CliffordTableau inv;
  inv.n = n;
  inv.x_out.assign(n, pauli_identity(n));
  inv.z_out.assign(n, pauli_identity(n));
  for (unsigned j = 0; j < d; ++j) {
    Pauli q = pauli_identity(n);
    for (unsigned i = 0; i < d; ++i) {
      if (!mbit((j + n) % d, (i + n) % d)) continue;
      if (i < n)
        q.x[i] = 1;
      else
        q.z[i - n] = 1;
    }
    const Pauli round = t.conjugate(q);
    Pauli gen = pauli_identity(n);
    if (j < n)
      gen.x[j] = 1;
    else
      gen.z[j - n] = 1;
    if (round.x != gen.x || round.z != gen.z || (round.phase & 1u))
      throw std::logic_error("tableau inverse round trip failed");
    q.phase = round.phase;  // conjugation is i^phase-linear, so this cancels
    if (j < n)
      inv.x_out[j] = std::move(q);
    else
      inv.z_out[j - n] = std::move(q);
  }
  return inv;
}

// --- Uniform sampling -------------------------------------------------------

// Exactly uniform random Clifford (mod global phase). The symplectic image
// is drawn pair by pair: v uniform over nonzero vectors of the current
// complement, w uniform over the affine space of solutions of <v,w> = 1,
// followed by a symplectic Gram-Schmidt step that re-pairs the rest of the
// basis. Conditioned on a pair, the valid completions form a coset of the
// next smaller symplectic group, so the product of uniform levels is uniform
// over the whole group; 2n fair sign bits complete the tableau. The level-j
// pair count is (4^j - 1) * 2^{2j-1}, giving 24 single-qubit elements.
inline CliffordTableau random_clifford(unsigned n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_clifford needs n >= 1");
  Rng rng = Rng(seed).derive(0x636c6664u);  // domain tag for tableau draws
  using Vec = std::vector<std::uint8_t>;    // length 2n, layout (x | z)
  const unsigned d = 2 * n;
  auto symp = [n](const Vec& a, const Vec& b) -> unsigned {
    unsigned s = 0;
    for (unsigned i = 0; i < n; ++i)
      s ^= (a[i] & b[n + i]) ^ (a[n + i] & b[i]);
    return s & 1u;
  };
  auto add = [d](Vec& a, const Vec& b) {
    for (unsigned i = 0; i < d; ++i) a[i] ^= b[i];
  };
  auto is_zero = [](const Vec& a) {
    for (std::uint8_t v : a)
      if (v) return false;
    return true;
  };

  std::vector<Vec> rem;
  rem.reserve(d);
  for (unsigned i = 0; i < n; ++i) {
    Vec e(d, 0), f(d, 0);
    e[i] = 1;
    f[n + i] = 1;
    rem.push_back(std::move(e));
    rem.push_back(std::move(f));
  }

  std::vector<Vec> vs, ws;
  vs.reserve(n);
  ws.reserve(n);
  for (unsigned level = 0; level < n; ++level) {
    const std::size_t m2 = rem.size();
    // v: uniformly random nonzero combination of the complement basis.
    Vec v(d, 0);
    bool nz = false;
    while (!nz) {
      std::fill(v.begin(), v.end(), 0);
      for (std::size_t i = 0; i < m2; ++i) {
        if (rng.bits(1)) {
          add(v, rem[i]);
          nz = true;
        }
      }
    }
    // w: pivot plus a uniform combination of the kernel of u -> <v,u>.
    std::vector<std::uint8_t> s(m2);
    std::size_t pivot = m2;
    for (std::size_t i = 0; i < m2; ++i) {
      s[i] = static_cast<std::uint8_t>(symp(v, rem[i]));
      if (pivot == m2 && s[i]) pivot = i;
    }
    if (pivot == m2) throw std::logic_error("symplectic form degenerated");
    Vec w = rem[pivot];
    for (std::size_t i = 0; i < m2; ++i) {
      if (i == pivot) continue;
      if (rng.bits(1)) {
        add(w, rem[i]);
        if (s[i]) add(w, rem[pivot]);
      }
    }
    // Project the old basis onto the symplectic complement of (v, w) and
    // re-pair it (deterministic given (v, w), as uniformity requires).
    std::vector<Vec> pool;
    pool.reserve(m2);
    for (const Vec& u0 : rem) {
      Vec u = u0;
      if (symp(v, u)) add(u, w);
      if (symp(w, u)) add(u, v);
      if (!is_zero(u)) pool.push_back(std::move(u));
    }
    std::vector<Vec> next;
    next.reserve(m2 - 2);
    while (!pool.empty()) {
      Vec a = std::move(pool.back());
      pool.pop_back();
      if (is_zero(a)) continue;
      std::size_t bi = pool.size();
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (symp(a, pool[i])) {
          bi = i;
          break;
        }
      }
      if (bi == pool.size())
        throw std::logic_error("gram-schmidt pairing failed");
      Vec b = pool[bi];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(bi));
      for (Vec& u : pool) {
        if (symp(a, u)) add(u, b);
        if (symp(b, u)) add(u, a);
      }
      next.push_back(std::move(a));
      next.push_back(std::move(b));
    }
    if (next.size() != m2 - 2)
      throw std::logic_error("complement basis has wrong size");
    vs.push_back(std::move(v));
    ws.push_back(std::move(w));
    rem = std::move(next);
  }

  CliffordTableau t;
  t.n = n;
  t.x_out.reserve(n);
  t.z_out.reserve(n);
  for (unsigned k = 0; k < n; ++k) {
    Pauli px = pauli_identity(n), pz = pauli_identity(n);
    for (unsigned i = 0; i < n; ++i) {
      px.x[i] = vs[k][i];
      px.z[i] = vs[k][n + i];
      pz.x[i] = ws[k][i];
      pz.z[i] = ws[k][n + i];
    }
    t.x_out.push_back(std::move(px));
    t.z_out.push_back(std::move(pz));
  }
  for (unsigned k = 0; k < n; ++k) {
    t.x_out[k].phase = static_cast<std::uint8_t>(2 * rng.bits(1));
    t.z_out[k].phase = static_cast<std::uint8_t>(2 * rng.bits(1));
  }
  if (!t.symplectic_ok()) throw std::logic_error("sampled tableau invalid");
  return t;
}

// --- 1D nearest-neighbor synthesis -------------------------------------------

// Circuit over {H, S, CNOT on adjacent wires} whose unitary realizes the
// tableau (up to global phase). The inverse tableau is reduced to the
// identity one qubit at a time — S turns Y legs into X legs, H turns Z legs
// into X legs, and adjacent CNOT/SWAP sweeps collapse the support onto the
// pivot wire; the dual moves clear the Z image, and Z / X conjugations fix
// the two signs. The emitted gate list, in emission order, is then a circuit
// for the input tableau itself. Layers are re-packed greedily; measured
// depths are recorded in the test suite and README rather than claimed
// asymptotically.
inline Circuit tableau_to_nn_circuit(const CliffordTableau& t) {
  const unsigned n = t.n;
  CliffordTableau w = inverse_tableau(t);
  std::vector<Gate> ops;
  auto emit_h = [&](unsigned q) {
    w.apply_h(q);
    ops.push_back(h_gate(q));
  };
  auto emit_s = [&](unsigned q) {
    w.apply_s(q);
    ops.push_back(s_gate(q));
  };
  auto emit_cnot = [&](unsigned c, unsigned q) {
    w.apply_cnot(c, q);
    ops.push_back(cnot_gate(c, q));
  };
  auto emit_swap_at = [&](unsigned j) {  // swap wires j and j+1
    emit_cnot(j, j + 1);
    emit_cnot(j + 1, j);
    emit_cnot(j, j + 1);
  };
  auto is_unit = [](const Pauli& p, unsigned k, bool want_x) {
    for (unsigned j = 0; j < p.n; ++j) {
      const std::uint8_t ex = (want_x && j == k) ? 1 : 0;
      const std::uint8_t ez = (!want_x && j == k) ? 1 : 0;
      if (p.x[j] != ex || p.z[j] != ez) return false;
    }
    return true;
  };

  for (unsigned k = 0; k < n; ++k) {
    const Pauli& xr = w.x_out[k];
    if (!is_unit(xr, k, true)) {
      for (unsigned j = k; j < n; ++j)
        if (xr.x[j] && xr.z[j]) emit_s(j);
      for (unsigned j = k; j < n; ++j)
        if (!xr.x[j] && xr.z[j]) emit_h(j);
      // Support is now pure X and nonempty; sweep it onto wire k.
      while (true) {
        unsigned jm = k;
        for (unsigned j = n; j-- > k;) {
          if (xr.x[j]) {
            jm = j;
            break;
          }
        }
        if (jm == k) break;
        if (xr.x[jm - 1])
          emit_cnot(jm - 1, jm);
        else
          emit_swap_at(jm - 1);
      }
    }
    const Pauli& zr = w.z_out[k];
    if (!is_unit(zr, k, false)) {
      // sqrt(X) = H S H maps the Y_k leg to Z_k while fixing X_k, so the X
      // image survives the Z-image cleanup.
      if (zr.x[k]) {
        emit_h(k);
        emit_s(k);
        emit_h(k);
      }
      for (unsigned j = k + 1; j < n; ++j)
        if (zr.x[j] && zr.z[j]) emit_s(j);
      for (unsigned j = k + 1; j < n; ++j)
        if (zr.x[j] && !zr.z[j]) emit_h(j);
      while (true) {
        unsigned jm = k;
        for (unsigned j = n; j-- > k;) {
          if (zr.z[j]) {
            jm = j;
            break;
          }
        }
        if (jm == k) break;
        if (zr.z[jm - 1])
          emit_cnot(jm, jm - 1);
        else
          emit_swap_at(jm - 1);
      }
    }
    if (w.x_out[k].phase == 2) {  // conjugation by Z flips the X image sign
      emit_s(k);
      emit_s(k);
    }
    if (w.z_out[k].phase == 2) {  // conjugation by X flips the Z image sign
      emit_h(k);
      emit_s(k);
      emit_s(k);
      emit_h(k);
    }
  }
  if (!(w == CliffordTableau::identity(n)))
    throw std::logic_error("nn synthesis failed to reach identity");

  Circuit c;
  c.model = Model::kQac0f;
  c.n_in = n;
  c.layers.reserve(ops.size());
  for (auto& g : ops) c.layers.push_back({std::move(g)});
  return pack_layers(c);
}

}  // namespace qflat
