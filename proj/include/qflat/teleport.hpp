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
#include <map>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "qflat/circuit.hpp"
#include "qflat/clifford.hpp"

namespace qflat {

// --- Teleportation plans ------------------------------------------------------
//
// A Clifford is compiled to constant quantum depth by cutting its 1D
// nearest-neighbor circuit at every two-qubit layer and teleporting the state
// through one Bell-pair column per cut. The plan below is that cut: a merged
// single-qubit prefix, then pieces C_1..C_D, each a two-qubit layer followed
// by the merged run of single-qubit layers behind it.

struct TeleportPiece {
  Layer mixed;              // the nearest-neighbor layer with two-qubit gates
  Layer singles;            // merged single-qubit follow-up (may be empty)
  CliffordTableau tableau;  // exact tableau of mixed followed by singles
};

struct TeleportPlan {
  unsigned n = 0;
  Layer prefix;                    // merged leading single-qubit gates
  CliffordTableau prefix_tableau;  // exact tableau of the prefix
  std::vector<TeleportPiece> pieces;
};

// Parity-controlled Pauli corrections: qubit q needs X (resp. Z) exactly
// when the parity of the measurement bits selected by x_mask[q] (resp.
// z_mask[q]) is odd. Masks reference only cbits measured earlier in the
// compiled circuit.
struct PauliFrame {
  unsigned n = 0;
  unsigned n_cbits = 0;
  std::vector<std::vector<std::uint8_t>> x_mask, z_mask;  // [qubit][cbit]
};

namespace detail {

inline bool mat2_close(const Mat2& a, const Mat2& b, double tol = 1e-12) {
  for (int i = 0; i < 4; ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

// Fold one synthesized nearest-neighbor gate into a tableau.
inline void fold_nn_gate(CliffordTableau& t, const Gate& g) {
  if (const auto* u = std::get_if<U1Gate>(&g)) {
    if (mat2_close(u->m, h_mat()))
      t.apply_h(u->q);
    else if (mat2_close(u->m, s_mat()))
      t.apply_s(u->q);
    else if (mat2_close(u->m, sdg_mat()))
      t.apply_sdg(u->q);
    else if (mat2_close(u->m, x_mat()))
      t.apply_x(u->q);
    else if (mat2_close(u->m, z_mat()))
      t.apply_z(u->q);
    else if (!mat2_close(u->m, id_mat()))
      throw std::invalid_argument("non-clifford gate in synthesized layer");
    return;
  }
  if (const auto* c = std::get_if<ToffoliGate>(&g)) {
    if (c->controls.size() != 1)
      throw std::invalid_argument("toffoli in synthesized layer");
    t.apply_cnot(c->controls[0], c->target);
    return;
  }
  throw std::invalid_argument("unexpected gate kind in synthesized layer");
}

inline bool is_single_qubit_layer(const Layer& l) {
  for (const Gate& g : l)
    if (!std::holds_alternative<U1Gate>(g)) return false;
  return true;
}

}  // namespace detail

// Cut the tableau's nearest-neighbor circuit into teleportable pieces. Runs
// of single-qubit layers are merged per wire into one layer each (per-wire
// 2x2 products, identities dropped); each piece's tableau is folded exactly
// from the unmerged gate sequence.
inline TeleportPlan teleport_plan(const CliffordTableau& t) {
  TeleportPlan plan;
  plan.n = t.n;
  plan.prefix_tableau = CliffordTableau::identity(t.n);
  const Circuit nn = tableau_to_nn_circuit(t);

  std::map<unsigned, Mat2> merged;
  auto absorb_singles = [&](const Layer& l, CliffordTableau& tab) {
    for (const Gate& g : l) {
      detail::fold_nn_gate(tab, g);
      const auto& u = std::get<U1Gate>(g);
      auto it = merged.find(u.q);
      if (it == merged.end())
        merged.emplace(u.q, u.m);
      else
        it->second = mat2_mul(u.m, it->second);
    }
  };
  auto flush_singles = [&]() {
    Layer out;
    for (const auto& [q, m] : merged)
      if (!detail::mat2_close(m, id_mat())) out.push_back(u1(q, m));
    merged.clear();
    return out;
  };

  bool in_prefix = true;
  for (const Layer& l : nn.layers) {
    if (detail::is_single_qubit_layer(l)) {
      absorb_singles(l, in_prefix ? plan.prefix_tableau
                                  : plan.pieces.back().tableau);
      continue;
    }
    Layer run = flush_singles();
    if (in_prefix) {
      plan.prefix = std::move(run);
      in_prefix = false;
    } else {
      plan.pieces.back().singles = std::move(run);
    }
    TeleportPiece piece;
    piece.mixed = l;
    piece.tableau = CliffordTableau::identity(t.n);
    for (const Gate& g : l) detail::fold_nn_gate(piece.tableau, g);
    plan.pieces.push_back(std::move(piece));
  }
  Layer run = flush_singles();
  if (in_prefix)
    plan.prefix = std::move(run);
  else
    plan.pieces.back().singles = std::move(run);
  return plan;
}

// Correction masks for the plan's compiled circuit. The Bell measurement at
// boundary l deposits the byproduct X^{m[v]} Z^{m[u]} on each row before
// piece l acts, so its correction is that Pauli conjugated by the tail
// C_D...C_l. Conjugates of different boundaries commute up to (unobservable
// global) phase, so the masks are plain XOR accumulations, GF(2)-linear in
// the outcome bits.
inline PauliFrame teleport_frame(const TeleportPlan& plan) {
  const unsigned n = plan.n;
  const unsigned depth = static_cast<unsigned>(plan.pieces.size());
  PauliFrame f;
  f.n = n;
  f.n_cbits = 2 * n * depth;
  f.x_mask.assign(n, std::vector<std::uint8_t>(f.n_cbits, 0));
  f.z_mask.assign(n, std::vector<std::uint8_t>(f.n_cbits, 0));
  CliffordTableau run = CliffordTableau::identity(n);
  for (unsigned l = depth; l >= 1; --l) {
    run = compose(run, plan.pieces[l - 1].tableau);  // run = C_D ... C_l
    for (unsigned r = 0; r < n; ++r) {
      const unsigned u_bit = (l - 1) * 2 * n + r;
      const unsigned v_bit = (l - 1) * 2 * n + n + r;
      const Pauli& ix = run.x_out[r];  // conjugate of the X_r byproduct
      const Pauli& iz = run.z_out[r];  // conjugate of the Z_r byproduct
      for (unsigned q = 0; q < n; ++q) {
        f.x_mask[q][v_bit] ^= ix.x[q];
        f.z_mask[q][v_bit] ^= ix.z[q];
        f.x_mask[q][u_bit] ^= iz.x[q];
        f.z_mask[q][u_bit] ^= iz.z[q];
      }
    }
  }
  return f;
}

// Constant-depth measurement-feedforward compilation of a Clifford. The
// register is an n x (2D+1) grid, one column per piece boundary pair:
// column 0 is the input, columns (2l-1, 2l) hold Bell pairs. All Bell pairs
// are prepared at once, every piece acts on its target column, all Bell
// measurements fire in a single layer, and the frame corrections close the
// circuit. Total quantum depth is 12 layers whenever the plan has at least
// one piece, independent of n and D; a plan with no two-qubit content
// compiles to just its merged prefix. The final three CNOT layers swap the
// output column back onto the input wires; they are index relabeling and the
// only gates that are long-range under the attached layout.
inline Circuit teleport_compile(const CliffordTableau& t,
                                unsigned max_qubits = 0) {
  const unsigned n = t.n;
  const TeleportPlan plan = teleport_plan(t);
  const unsigned depth = static_cast<unsigned>(plan.pieces.size());

  Circuit c;
  c.model = Model::kMeasFF;
  c.n_in = n;

  if (depth == 0) {
    if (max_qubits > 0 && n > max_qubits)
      throw std::invalid_argument("qubit cap exceeded");
    if (!plan.prefix.empty()) c.layers.push_back(plan.prefix);
    Layout lay;
    lay.rows = n;
    lay.cols = 1;
    for (unsigned r = 0; r < n; ++r) lay.positions[r] = {r, 0};
    c.layout = std::move(lay);
    c.metadata["teleport_columns"] = 1;
    return c;
  }

  const unsigned cols = 2 * depth + 1;
  const unsigned width = n * cols;
  if (max_qubits > 0 && width > max_qubits)
    throw std::invalid_argument("qubit cap exceeded");
  c.n_anc = width - n;
  c.n_cbits = 2 * n * depth;

  auto at = [n](unsigned r, unsigned col) { return col * n + r; };
  auto to_column = [&](const Layer& src, unsigned col) {
    Layer out = src;
    for (Gate& g : out) {
      if (auto* u = std::get_if<U1Gate>(&g)) {
        u->q = at(u->q, col);
      } else if (auto* tf = std::get_if<ToffoliGate>(&g)) {
        for (unsigned& cq : tf->controls) cq = at(cq, col);
        tf->target = at(tf->target, col);
      } else {
        throw std::logic_error("unexpected gate kind in piece layer");
      }
    }
    return out;
  };

  Layer prep_h, prep_cnot, piece_b, piece_a, meas_cnot, meas_h, meas;
  Layer swap_a, swap_b, swap_c, cp_x, cp_z;
  for (unsigned l = 1; l <= depth; ++l) {
    for (unsigned r = 0; r < n; ++r) {
      prep_h.push_back(h_gate(at(r, 2 * l - 1)));
      prep_cnot.push_back(cnot_gate(at(r, 2 * l - 1), at(r, 2 * l)));
      meas_cnot.push_back(cnot_gate(at(r, 2 * l - 2), at(r, 2 * l - 1)));
      meas_h.push_back(h_gate(at(r, 2 * l - 2)));
      meas.push_back(MeasureGate{at(r, 2 * l - 2), (l - 1) * 2 * n + r});
      meas.push_back(MeasureGate{at(r, 2 * l - 1), (l - 1) * 2 * n + n + r});
    }
    const TeleportPiece& piece = plan.pieces[l - 1];
    for (const Gate& g : to_column(piece.mixed, 2 * l)) piece_b.push_back(g);
    for (const Gate& g : to_column(piece.singles, 2 * l)) piece_a.push_back(g);
  }
  for (const Gate& g : plan.prefix) piece_a.push_back(g);  // column 0
  for (unsigned r = 0; r < n; ++r) {
    swap_a.push_back(cnot_gate(at(r, 2 * depth), r));
    swap_b.push_back(cnot_gate(r, at(r, 2 * depth)));
    swap_c.push_back(cnot_gate(at(r, 2 * depth), r));
  }
  const PauliFrame frame = teleport_frame(plan);
  for (unsigned q = 0; q < n; ++q) {
    std::vector<unsigned> xs, zs;
    for (unsigned b = 0; b < frame.n_cbits; ++b) {
      if (frame.x_mask[q][b]) xs.push_back(b);
      if (frame.z_mask[q][b]) zs.push_back(b);
    }
    if (!xs.empty()) cp_x.push_back(CPauliGate{'X', q, std::move(xs)});
    if (!zs.empty()) cp_z.push_back(CPauliGate{'Z', q, std::move(zs)});
  }

  c.layers = {std::move(prep_h),    std::move(prep_cnot), std::move(piece_b),
              std::move(piece_a),   std::move(meas_cnot), std::move(meas_h),
              std::move(meas),      std::move(swap_a),    std::move(swap_b),
              std::move(swap_c),    std::move(cp_x),      std::move(cp_z)};

  Layout lay;
  lay.rows = n;
  lay.cols = cols;
  for (unsigned col = 0; col < cols; ++col)
    for (unsigned r = 0; r < n; ++r) lay.positions[at(r, col)] = {r, col};
  c.layout = std::move(lay);
  c.metadata["teleport_columns"] = cols;
  c.metadata["teleport_ancillae"] = c.n_anc;
  return c;
}

// Lower a unitary circuit whose multiqubit gates are FANOUTs (CNOT included
// as the single-target case) to measurement-feedforward form: single-qubit
// gates pass through, and each layer's FANOUT content — a CNOT fan, hence a
// Clifford — is replaced by its teleport compilation on private ancillae and
// classical bits. Measured ancillae are never reused. Each source layer
// expands to at most 13 layers (a split single-qubit layer plus the 12-layer
// teleport block), which bounds the depth blowup.
inline Circuit fanout_layer_lower(const Circuit& c, unsigned max_qubits = 0) {
  require_valid(c);
  for (const Layer& l : c.layers) {
    for (const Gate& g : l) {
      if (const auto* tf = std::get_if<ToffoliGate>(&g)) {
        if (tf->controls.size() > 1)
          throw std::invalid_argument("toffoli lowering is out of scope");
      } else if (std::holds_alternative<MeasureGate>(g) ||
                 std::holds_alternative<CPauliGate>(g)) {
        throw std::invalid_argument("input circuit must be unitary");
      } else if (std::holds_alternative<DiagGate>(g) ||
                 std::holds_alternative<PermGate>(g)) {
        throw std::invalid_argument(
            "oracle gates have no fanout-layer lowering");
      }
    }
  }

  const unsigned n = c.n_total();
  Circuit out;
  out.model = Model::kMeasFF;
  out.n_in = c.n_in;
  out.n_anc = c.n_anc;
  out.n_cbits = 0;
  unsigned blocks = 0;

  for (const Layer& l : c.layers) {
    Layer singles;
    CliffordTableau tab = CliffordTableau::identity(n);
    bool has_multi = false;
    for (const Gate& g : l) {
      if (std::holds_alternative<U1Gate>(g)) {
        singles.push_back(g);
        continue;
      }
      has_multi = true;
      if (const auto* f = std::get_if<FanoutGate>(&g)) {
        for (unsigned tq : f->targets) tab.apply_cnot(f->source, tq);
      } else {
        const auto& tf = std::get<ToffoliGate>(g);
        tab.apply_cnot(tf.controls[0], tf.target);
      }
    }
    if (!singles.empty()) out.layers.push_back(std::move(singles));
    if (!has_multi) continue;

    ++blocks;
    const Circuit block = teleport_compile(tab);
    const unsigned anc_base = out.n_total();
    const unsigned cbit_base = out.n_cbits;
    auto remap = [&](unsigned q) { return q < n ? q : anc_base + (q - n); };
    for (const Layer& bl : block.layers) {
      Layer el = bl;
      for (Gate& g : el) {
        if (auto* u = std::get_if<U1Gate>(&g)) {
          u->q = remap(u->q);
        } else if (auto* tf = std::get_if<ToffoliGate>(&g)) {
          for (unsigned& cq : tf->controls) cq = remap(cq);
          tf->target = remap(tf->target);
        } else if (auto* m = std::get_if<MeasureGate>(&g)) {
          m->q = remap(m->q);
          m->cbit += cbit_base;
        } else if (auto* cp = std::get_if<CPauliGate>(&g)) {
          cp->q = remap(cp->q);
          for (unsigned& b : cp->cbits) b += cbit_base;
        } else {
          throw std::logic_error("unexpected gate in teleport block");
        }
      }
      out.layers.push_back(std::move(el));
    }
    out.n_anc += block.n_anc;
    out.n_cbits += block.n_cbits;
  }

  if (max_qubits > 0 && out.n_total() > max_qubits)
    throw std::invalid_argument("qubit cap exceeded");
  out.metadata["teleport_blocks"] = blocks;
  out.metadata["depth_factor_bound"] = 13;
  return out;
}

}  // namespace qflat
