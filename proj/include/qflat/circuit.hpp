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
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace qflat {

using cplx = std::complex<double>;

// Row-major 2x2 complex matrix: {m00, m01, m10, m11}.
using Mat2 = std::array<cplx, 4>;

// Gate model a circuit is allowed to use. The unitary models admit no
// measurement; the fanout-free model additionally rejects FANOUT.
enum class Model { kQac0, kQac0f, kMeasFF };

inline std::string model_name(Model m) {
  switch (m) {
    case Model::kQac0: return "qac0";
    case Model::kQac0f: return "qac0f";
    case Model::kMeasFF: return "measff";
  }
  throw std::logic_error("unreachable");
}

inline Model model_from_name(const std::string& s) {
  if (s == "qac0") return Model::kQac0;
  if (s == "qac0f") return Model::kQac0f;
  if (s == "measff") return Model::kMeasFF;
  throw std::invalid_argument("unknown model: " + s);
}

// --- Gate kinds --------------------------------------------------------------

// Arbitrary single-qubit unitary.
struct U1Gate {
  unsigned q = 0;
  Mat2 m{};
  bool operator==(const U1Gate&) const = default;
};

// |x_1..x_k, t> -> |x_1..x_k, t XOR AND(x_1..x_k)>. One control makes a CNOT.
struct ToffoliGate {
  std::vector<unsigned> controls;
  unsigned target = 0;
  bool operator==(const ToffoliGate&) const = default;
};

// |s, x_1..x_k> -> |s, s XOR x_1, ..., s XOR x_k>. One target makes a CNOT.
struct FanoutGate {
  unsigned source = 0;
  std::vector<unsigned> targets;
  bool operator==(const FanoutGate&) const = default;
};

// Computational-basis measurement writing its outcome to a classical bit.
struct MeasureGate {
  unsigned q = 0;
  unsigned cbit = 0;
  bool operator==(const MeasureGate&) const = default;
};

// Pauli correction applied iff the parity of the referenced classical bits
// is 1. This is the only classical feedforward the IR admits.
struct CPauliGate {
  char pauli = 'X';  // 'X' or 'Z'
  unsigned q = 0;
  std::vector<unsigned> cbits;
  bool operator==(const CPauliGate&) const = default;
};

// Diagonal phase oracle |x> -> (-1)^{f(x)}|x> on an ordered qubit subset.
// flips is the 2^k-entry truth table of f; the table index is read with
// qubits[0] as its most significant bit, so on qubits {0..k-1} the index is
// the basis index. Oracle gates stand for the function's constant-depth
// fanout-based evaluation, so they require a fanout-capable model.
struct DiagGate {
  std::vector<unsigned> qubits;
  std::vector<std::uint8_t> flips;
  bool operator==(const DiagGate&) const = default;
};

// Basis permutation |x> -> |image[x]> on an ordered qubit subset, with the
// same index convention as DiagGate. image must be a bijection on [0, 2^k).
struct PermGate {
  std::vector<unsigned> qubits;
  std::vector<std::uint64_t> image;
  bool operator==(const PermGate&) const = default;
};

using Gate = std::variant<U1Gate, ToffoliGate, FanoutGate, MeasureGate,
                          CPauliGate, DiagGate, PermGate>;
using Layer = std::vector<Gate>;

// All qubit indices a gate touches (classical bits excluded).
inline std::vector<unsigned> qubits_of(const Gate& g) {
  std::vector<unsigned> q;
  std::visit(
      [&](const auto& gate) {
        using T = std::decay_t<decltype(gate)>;
        if constexpr (std::is_same_v<T, U1Gate>) {
          q.push_back(gate.q);
        } else if constexpr (std::is_same_v<T, ToffoliGate>) {
          q = gate.controls;
          q.push_back(gate.target);
        } else if constexpr (std::is_same_v<T, FanoutGate>) {
          q = gate.targets;
          q.push_back(gate.source);
        } else if constexpr (std::is_same_v<T, DiagGate> ||
                             std::is_same_v<T, PermGate>) {
          q = gate.qubits;
        } else {
          q.push_back(gate.q);
        }
      },
      g);
  return q;
}

// All classical bit indices a gate reads or writes.
inline std::vector<unsigned> cbits_of(const Gate& g) {
  if (const auto* m = std::get_if<MeasureGate>(&g)) return {m->cbit};
  if (const auto* cp = std::get_if<CPauliGate>(&g)) return cp->cbits;
  return {};
}

// --- Circuit ------------------------------------------------------------------

// Planar placement of qubits on a rows x cols grid; gates between qubits at
// Manhattan distance 1 are nearest-neighbor under this layout.
struct Layout {
  unsigned rows = 0, cols = 0;
  std::map<unsigned, std::pair<unsigned, unsigned>> positions;  // q -> (r, c)

  bool operator==(const Layout&) const = default;
};

// Layered circuit over n_in input qubits and n_anc ancillae. Ancillae are
// indexed after inputs and start in |0>. Gates within a layer act on
// disjoint qubits. Circuits are treated as immutable once validated.
//
// `metadata` carries construction bookkeeping (e.g. parity-tree node counts);
// it is not part of the serialized format. `layout`, when present, is.
struct Circuit {
  Model model = Model::kQac0f;
  unsigned n_in = 0;
  unsigned n_anc = 0;
  unsigned n_cbits = 0;
  std::vector<Layer> layers;
  std::optional<Layout> layout;
  std::map<std::string, double> metadata;

  unsigned n_total() const { return n_in + n_anc; }
  unsigned depth() const { return static_cast<unsigned>(layers.size()); }
  std::size_t size() const {
    std::size_t s = 0;
    for (const auto& l : layers) s += l.size();
    return s;
  }

  bool operator==(const Circuit& o) const {
    return model == o.model && n_in == o.n_in && n_anc == o.n_anc &&
           n_cbits == o.n_cbits && layers == o.layers && layout == o.layout;
  }
};

// --- Single-qubit gate constructors -------------------------------------------

inline U1Gate u1(unsigned q, const Mat2& m) { return U1Gate{q, m}; }

inline const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

inline Mat2 h_mat() { return {kInvSqrt2, kInvSqrt2, kInvSqrt2, -kInvSqrt2}; }
inline Mat2 x_mat() { return {0, 1, 1, 0}; }
inline Mat2 y_mat() { return {0, cplx(0, -1), cplx(0, 1), 0}; }
inline Mat2 z_mat() { return {1, 0, 0, -1}; }
inline Mat2 s_mat() { return {1, 0, 0, cplx(0, 1)}; }
inline Mat2 sdg_mat() { return {1, 0, 0, cplx(0, -1)}; }
inline Mat2 t_mat() {
  return {1, 0, 0, std::polar(1.0, std::atan(1.0))};  // exp(i*pi/4)
}
inline Mat2 id_mat() { return {1, 0, 0, 1}; }
inline Mat2 rx_mat(double theta) {
  double c = std::cos(theta / 2), s = std::sin(theta / 2);
  return {c, cplx(0, -s), cplx(0, -s), c};
}
inline Mat2 ry_mat(double theta) {
  double c = std::cos(theta / 2), s = std::sin(theta / 2);
  return {c, -s, s, c};
}
inline Mat2 rz_mat(double theta) {
  return {std::polar(1.0, -theta / 2), 0, 0, std::polar(1.0, theta / 2)};
}
// diag(1, e^{i*theta})
inline Mat2 phase_mat(double theta) { return {1, 0, 0, std::polar(1.0, theta)}; }

inline Gate h_gate(unsigned q) { return U1Gate{q, h_mat()}; }
inline Gate x_gate(unsigned q) { return U1Gate{q, x_mat()}; }
inline Gate y_gate(unsigned q) { return U1Gate{q, y_mat()}; }
inline Gate z_gate(unsigned q) { return U1Gate{q, z_mat()}; }
inline Gate s_gate(unsigned q) { return U1Gate{q, s_mat()}; }
inline Gate sdg_gate(unsigned q) { return U1Gate{q, sdg_mat()}; }
inline Gate t_gate(unsigned q) { return U1Gate{q, t_mat()}; }
inline Gate cnot_gate(unsigned control, unsigned target) {
  return ToffoliGate{{control}, target};
}

inline Mat2 mat2_mul(const Mat2& a, const Mat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

inline Mat2 mat2_dagger(const Mat2& m) {
  return {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])};
}

inline bool mat2_is_unitary(const Mat2& m, double tol = 1e-12) {
  Mat2 p = mat2_mul(mat2_dagger(m), m);
  return std::abs(p[0] - 1.0) <= tol && std::abs(p[1]) <= tol &&
         std::abs(p[2]) <= tol && std::abs(p[3] - 1.0) <= tol;
}

// Angles of U = e^{i alpha} Rz(beta) Ry(gamma) Rz(delta).
struct ZyzAngles {
  double alpha, beta, gamma, delta;
};

inline ZyzAngles zyz_decompose(const Mat2& u) {
  const cplx det = u[0] * u[3] - u[1] * u[2];
  const double alpha = 0.5 * std::arg(det);
  const cplx s = std::polar(1.0, -alpha);
  const cplx a = s * u[0], b = s * u[1];  // SU(2) part, top row
  const double gamma = 2.0 * std::atan2(std::abs(b), std::abs(a));
  double beta = 0, delta = 0;
  if (std::abs(a) > 1e-12 && std::abs(b) > 1e-12) {
    const double sum = -2 * std::arg(a), diff = -2 * std::arg(-b);
    beta = (sum + diff) / 2;
    delta = (sum - diff) / 2;
  } else if (std::abs(a) > 1e-12) {
    beta = -2 * std::arg(a);
  } else {
    beta = -2 * std::arg(-b);
  }
  return {alpha, beta, gamma, delta};
}

// Controlled arbitrary single-qubit unitary, decomposed into two CNOTs and
// single-qubit corrections (the standard A-B-C construction), with the
// global phase of u pushed onto the control as a phase gate.
inline std::vector<Layer> controlled_u1_layers(unsigned control,
                                               unsigned target,
                                               const Mat2& u) {
  if (control == target) throw std::invalid_argument("index collision");
  const ZyzAngles z = zyz_decompose(u);
  const Mat2 am = mat2_mul(rz_mat(z.beta), ry_mat(z.gamma / 2));
  const Mat2 bm =
      mat2_mul(ry_mat(-z.gamma / 2), rz_mat(-(z.delta + z.beta) / 2));
  const Mat2 cm = rz_mat((z.delta - z.beta) / 2);
  return {{u1(target, cm)},
          {cnot_gate(control, target)},
          {u1(target, bm)},
          {cnot_gate(control, target)},
          {u1(target, am), u1(control, phase_mat(z.alpha))}};
}

// --- Validation ---------------------------------------------------------------

// Checks every structural invariant and returns all violations (empty means
// the circuit is well formed): index ranges, intra-gate and intra-layer
// qubit disjointness, 1q unitarity, model restrictions, and that every
// classical control references a bit written in a strictly earlier layer.
inline std::vector<std::string> validate(const Circuit& c) {
  std::vector<std::string> errors;
  const unsigned n = c.n_total();
  std::vector<bool> cbit_written(c.n_cbits, false);

  for (std::size_t li = 0; li < c.layers.size(); ++li) {
    std::set<unsigned> used;
    std::vector<unsigned> written_here;
    for (const Gate& g : c.layers[li]) {
      std::vector<unsigned> qs = qubits_of(g);
      std::set<unsigned> uniq(qs.begin(), qs.end());
      std::string at = " (layer " + std::to_string(li) + ")";
      if (uniq.size() != qs.size())
        errors.push_back("duplicate qubit within gate" + at);
      for (unsigned q : qs)
        if (q >= n) errors.push_back("qubit index out of range" + at);
      for (unsigned q : uniq)
        if (!used.insert(q).second)
          errors.push_back("overlap: qubit " + std::to_string(q) +
                           " used twice" + at);

      if (const auto* u = std::get_if<U1Gate>(&g)) {
        if (!mat2_is_unitary(u->m))
          errors.push_back("non-unitary single-qubit matrix" + at);
      } else if (const auto* t = std::get_if<ToffoliGate>(&g)) {
        if (t->controls.empty())
          errors.push_back("toffoli with no controls" + at);
      } else if (const auto* f = std::get_if<FanoutGate>(&g)) {
        if (f->targets.empty())
          errors.push_back("fanout with no targets" + at);
        if (c.model == Model::kQac0)
          errors.push_back("fanout not allowed in qac0 model" + at);
      } else if (const auto* m = std::get_if<MeasureGate>(&g)) {
        if (c.model != Model::kMeasFF)
          errors.push_back("measurement not allowed in unitary model" + at);
        if (m->cbit >= c.n_cbits)
          errors.push_back("classical bit out of range" + at);
        else
          written_here.push_back(m->cbit);
      } else if (const auto* p = std::get_if<CPauliGate>(&g)) {
        if (c.model != Model::kMeasFF)
          errors.push_back("feedforward not allowed in unitary model" + at);
        if (p->pauli != 'X' && p->pauli != 'Z')
          errors.push_back("cpauli must be X or Z" + at);
        if (p->cbits.empty())
          errors.push_back("cpauli with empty control set" + at);
        for (unsigned b : p->cbits) {
          if (b >= c.n_cbits)
            errors.push_back("classical bit out of range" + at);
          else if (!cbit_written[b])
            errors.push_back("dangling classical control on bit " +
                             std::to_string(b) + at);
        }
      } else if (const auto* d = std::get_if<DiagGate>(&g)) {
        if (c.model == Model::kQac0)
          errors.push_back("oracle gate not allowed in qac0 model" + at);
        if (d->qubits.empty() || d->qubits.size() > 20)
          errors.push_back("oracle gate arity out of range" + at);
        else if (d->flips.size() != (std::size_t(1) << d->qubits.size()))
          errors.push_back("diag table size mismatch" + at);
        for (std::uint8_t v : d->flips)
          if (v > 1) {
            errors.push_back("diag table entries must be bits" + at);
            break;
          }
      } else if (const auto* pe = std::get_if<PermGate>(&g)) {
        if (c.model == Model::kQac0)
          errors.push_back("oracle gate not allowed in qac0 model" + at);
        if (pe->qubits.empty() || pe->qubits.size() > 20) {
          errors.push_back("oracle gate arity out of range" + at);
        } else if (pe->image.size() != (std::size_t(1) << pe->qubits.size())) {
          errors.push_back("perm table size mismatch" + at);
        } else {
          std::vector<bool> seen(pe->image.size(), false);
          bool ok = true;
          for (std::uint64_t y : pe->image) {
            if (y >= pe->image.size() || seen[y]) {
              ok = false;
              break;
            }
            seen[y] = true;
          }
          if (!ok) errors.push_back("perm table is not a bijection" + at);
        }
      }
    }
    for (unsigned b : written_here) cbit_written[b] = true;
  }
  return errors;
}

inline void require_valid(const Circuit& c) {
  std::vector<std::string> errors = validate(c);
  if (!errors.empty()) throw std::invalid_argument("invalid circuit: " + errors[0]);
}

// --- Structural operations ------------------------------------------------------

inline bool has_nonunitary_gates(const Circuit& c) {
  for (const auto& l : c.layers)
    for (const auto& g : l)
      if (std::holds_alternative<MeasureGate>(g) ||
          std::holds_alternative<CPauliGate>(g))
        return true;
  return false;
}

// Sequential composition: a followed by b, on the same input register.
// Ancillae are shared by index; b's classical bits are renumbered after a's.
inline Circuit compose(const Circuit& a, const Circuit& b) {
  if (a.n_in != b.n_in) throw std::invalid_argument("input width mismatch");
  if (a.model != b.model) throw std::invalid_argument("model mismatch");
  Circuit c;
  c.model = a.model;
  c.n_in = a.n_in;
  c.n_anc = std::max(a.n_anc, b.n_anc);
  c.n_cbits = a.n_cbits + b.n_cbits;
  c.layers = a.layers;
  for (const Layer& l : b.layers) {
    Layer shifted = l;
    for (Gate& g : shifted) {
      if (auto* m = std::get_if<MeasureGate>(&g)) m->cbit += a.n_cbits;
      if (auto* p = std::get_if<CPauliGate>(&g))
        for (unsigned& cb : p->cbits) cb += a.n_cbits;
    }
    c.layers.push_back(std::move(shifted));
  }
  return c;
}

// Reverse of a unitary circuit: layers reversed, each gate inverted.
// TOFFOLI, FANOUT, and diagonal oracles are involutions; a permutation
// oracle inverts its table; measurement has no inverse.
inline Circuit inverse(const Circuit& c) {
  if (has_nonunitary_gates(c))
    throw std::invalid_argument("cannot invert a circuit with measurements");
  Circuit r = c;
  std::reverse(r.layers.begin(), r.layers.end());
  for (Layer& l : r.layers)
    for (Gate& g : l) {
      if (auto* u = std::get_if<U1Gate>(&g)) u->m = mat2_dagger(u->m);
      if (auto* p = std::get_if<PermGate>(&g)) {
        std::vector<std::uint64_t> inv(p->image.size(), 0);
        for (std::uint64_t x = 0; x < p->image.size(); ++x)
          inv[p->image[x]] = x;
        p->image = std::move(inv);
      }
    }
  return r;
}

// Relabel qubits: gate index q becomes map[q]. The map must cover every
// index the circuit uses; classical bits are unchanged.
inline Circuit remap_qubits(const Circuit& c, const std::vector<unsigned>& map,
                            unsigned new_n_in, unsigned new_n_anc) {
  if (map.size() < c.n_total())
    throw std::invalid_argument("qubit map too small");
  Circuit r = c;
  r.n_in = new_n_in;
  r.n_anc = new_n_anc;
  auto remap = [&](unsigned& q) {
    if (map[q] >= new_n_in + new_n_anc)
      throw std::invalid_argument("mapped index out of range");
    q = map[q];
  };
  for (Layer& l : r.layers)
    for (Gate& g : l)
      std::visit(
          [&](auto& gate) {
            using T = std::decay_t<decltype(gate)>;
            if constexpr (std::is_same_v<T, U1Gate>) {
              remap(gate.q);
            } else if constexpr (std::is_same_v<T, ToffoliGate>) {
              for (auto& q : gate.controls) remap(q);
              remap(gate.target);
            } else if constexpr (std::is_same_v<T, FanoutGate>) {
              remap(gate.source);
              for (auto& q : gate.targets) remap(q);
            } else if constexpr (std::is_same_v<T, DiagGate> ||
                                 std::is_same_v<T, PermGate>) {
              for (auto& q : gate.qubits) remap(q);
            } else {
              remap(gate.q);
            }
          },
          g);
  return r;
}

// Zip two circuits acting on disjoint qubits of the same register into one,
// layer by layer (layer i of the result is the union of both layer i's).
inline Circuit overlay(const Circuit& a, const Circuit& b) {
  if (a.n_in != b.n_in || a.n_anc != b.n_anc)
    throw std::invalid_argument("register mismatch");
  if (a.model != b.model) throw std::invalid_argument("model mismatch");
  if (a.n_cbits != b.n_cbits) throw std::invalid_argument("cbit mismatch");
  Circuit c = a;
  if (b.layers.size() > c.layers.size()) c.layers.resize(b.layers.size());
  for (std::size_t i = 0; i < b.layers.size(); ++i)
    c.layers[i].insert(c.layers[i].end(), b.layers[i].begin(),
                       b.layers[i].end());
  return c;
}

// Greedy as-soon-as-possible repacking: each gate moves to the earliest
// layer after every earlier gate that shares one of its qubits or classical
// bits. Relative order on shared resources is preserved, so the circuit is
// unchanged as a channel (independent measurements may land in different
// layers, which permutes coin-flip order but not outcome statistics).
inline Circuit pack_layers(const Circuit& c) {
  Circuit out = c;
  out.layers.clear();
  std::vector<std::size_t> qfree(c.n_total(), 0), cfree(c.n_cbits, 0);
  for (const Layer& layer : c.layers) {
    for (const Gate& g : layer) {
      std::size_t at = 0;
      for (unsigned q : qubits_of(g)) at = std::max(at, qfree.at(q));
      for (unsigned cb : cbits_of(g)) at = std::max(at, cfree.at(cb));
      if (at >= out.layers.size()) out.layers.resize(at + 1);
      out.layers[at].push_back(g);
      for (unsigned q : qubits_of(g)) qfree[q] = at + 1;
      for (unsigned cb : cbits_of(g)) cfree[cb] = at + 1;
    }
  }
  return out;
}

// --- Parity constructions --------------------------------------------------------

// Three-layer parity |x, t> -> |x, t XOR parity(x)| built from the Hadamard
// conjugation identity: H-conjugating a FANOUT sourced at the target turns
// it into a PARITY collected at the target.
inline Circuit parity_block(const std::vector<unsigned>& qubits,
                            unsigned target) {
  std::set<unsigned> uniq(qubits.begin(), qubits.end());
  if (uniq.size() != qubits.size() || uniq.count(target))
    throw std::invalid_argument("index collision");
  if (qubits.empty()) throw std::invalid_argument("empty parity support");
  unsigned n = target;
  for (unsigned q : qubits) n = std::max(n, q);
  ++n;
  Circuit c;
  c.model = Model::kQac0f;
  c.n_in = n;
  Layer h;
  for (unsigned q : qubits) h.push_back(h_gate(q));
  h.push_back(h_gate(target));
  c.layers.push_back(h);
  c.layers.push_back({FanoutGate{target, qubits}});
  c.layers.push_back(h);
  return c;
}

// A parity gadget produces layers computing |x, t> -> |x, t XOR parity(x)>
// at the given indices (possibly approximately, possibly touching private
// scratch qubits it captured at construction).
using ParityGadget = std::function<std::vector<Layer>(
    const std::vector<unsigned>& inputs, unsigned target)>;

inline ParityGadget exact_parity_gadget() {
  return [](const std::vector<unsigned>& inputs, unsigned target) {
    return parity_block(inputs, target).layers;
  };
}

// Depth-d fan-in-w parity tree over w^d inputs. Qubit layout:
//   [0, w^d)            leaf inputs
//   w^d                 parity target (part of the input register)
//   [w^d+1, ...)        internal tree nodes, then `extra_scratch` qubits
//                       reserved for the gadget's own use
// Internal nodes are uncomputed by re-applying their gadgets in reverse
// order, so the whole block acts as a clean parity on |x, t>. The number of
// tree nodes, (w^d - 1)/(w - 1), is recorded as metadata["node_count"].
inline Circuit parity_tree(unsigned w, unsigned d, const ParityGadget& gadget,
                           unsigned extra_scratch = 0) {
  if (w < 2 || d < 1) throw std::invalid_argument("need w >= 2, d >= 1");
  std::uint64_t leaves = 1;
  for (unsigned i = 0; i < d; ++i) {
    leaves *= w;
    if (leaves > (1u << 20)) throw std::invalid_argument("tree too large");
  }
  const std::uint64_t node_count = (leaves - 1) / (w - 1);
  const unsigned n_in = static_cast<unsigned>(leaves) + 1;
  const unsigned target = static_cast<unsigned>(leaves);

  Circuit c;
  c.model = Model::kQac0f;
  c.n_in = n_in;
  c.n_anc = static_cast<unsigned>(node_count - 1) + extra_scratch;

  std::vector<unsigned> current(leaves);
  for (unsigned i = 0; i < leaves; ++i) current[i] = i;
  unsigned next_anc = n_in;

  // Forward pass, level by level; remember every non-root application so we
  // can uncompute it afterwards.
  std::vector<std::pair<std::vector<unsigned>, unsigned>> interior;
  for (unsigned level = 1; level <= d; ++level) {
    std::vector<unsigned> outputs;
    for (std::size_t i = 0; i < current.size(); i += w) {
      std::vector<unsigned> group(current.begin() + i,
                                  current.begin() + i + w);
      const bool root = (level == d);
      unsigned out = root ? target : next_anc++;
      for (auto& l : gadget(group, out)) c.layers.push_back(std::move(l));
      if (!root) interior.emplace_back(std::move(group), out);
      outputs.push_back(out);
    }
    current = outputs;
  }
  for (auto it = interior.rbegin(); it != interior.rend(); ++it)
    for (auto& l : gadget(it->first, it->second)) c.layers.push_back(std::move(l));

  c.metadata["node_count"] = static_cast<double>(node_count);
  return c;
}

// --- Serialization ---------------------------------------------------------------

inline nlohmann::json gate_to_json(const Gate& g) {
  using nlohmann::json;
  return std::visit(
      [](const auto& gate) -> json {
        using T = std::decay_t<decltype(gate)>;
        if constexpr (std::is_same_v<T, U1Gate>) {
          json m = json::array();
          for (const cplx& v : gate.m) m.push_back({v.real(), v.imag()});
          return {{"kind", "u1"}, {"q", gate.q}, {"matrix", m}};
        } else if constexpr (std::is_same_v<T, ToffoliGate>) {
          return {{"kind", "toffoli"},
                  {"controls", gate.controls},
                  {"target", gate.target}};
        } else if constexpr (std::is_same_v<T, FanoutGate>) {
          return {{"kind", "fanout"},
                  {"source", gate.source},
                  {"targets", gate.targets}};
        } else if constexpr (std::is_same_v<T, MeasureGate>) {
          return {{"kind", "measure"}, {"q", gate.q}, {"cbit", gate.cbit}};
        } else if constexpr (std::is_same_v<T, CPauliGate>) {
          return {{"kind", "cpauli"},
                  {"pauli", std::string(1, gate.pauli)},
                  {"q", gate.q},
                  {"cbits", gate.cbits}};
        } else if constexpr (std::is_same_v<T, DiagGate>) {
          return {{"kind", "diag"},
                  {"qubits", gate.qubits},
                  {"flips", gate.flips}};
        } else {
          return {{"kind", "perm"},
                  {"qubits", gate.qubits},
                  {"image", gate.image}};
        }
      },
      g);
}

inline Gate gate_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "u1") {
    U1Gate g;
    g.q = j.at("q").get<unsigned>();
    const auto& m = j.at("matrix");
    if (!m.is_array() || m.size() != 4)
      throw std::runtime_error("u1 matrix must have 4 entries");
    for (int i = 0; i < 4; ++i)
      g.m[i] = cplx(m[i].at(0).get<double>(), m[i].at(1).get<double>());
    return g;
  }
  if (kind == "toffoli")
    return ToffoliGate{j.at("controls").get<std::vector<unsigned>>(),
                       j.at("target").get<unsigned>()};
  if (kind == "fanout")
    return FanoutGate{j.at("source").get<unsigned>(),
                      j.at("targets").get<std::vector<unsigned>>()};
  if (kind == "measure")
    return MeasureGate{j.at("q").get<unsigned>(), j.at("cbit").get<unsigned>()};
  if (kind == "cpauli") {
    const std::string p = j.at("pauli").get<std::string>();
    if (p != "X" && p != "Z") throw std::runtime_error("cpauli must be X or Z");
    return CPauliGate{p[0], j.at("q").get<unsigned>(),
                      j.at("cbits").get<std::vector<unsigned>>()};
  }
  if (kind == "diag")
    return DiagGate{j.at("qubits").get<std::vector<unsigned>>(),
                    j.at("flips").get<std::vector<std::uint8_t>>()};
  if (kind == "perm")
    return PermGate{j.at("qubits").get<std::vector<unsigned>>(),
                    j.at("image").get<std::vector<std::uint64_t>>()};
  throw std::runtime_error("unknown gate kind: " + kind);
}

inline nlohmann::json serialize(const Circuit& c) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& l : c.layers) {
    nlohmann::json jl = nlohmann::json::array();
    for (const Gate& g : l) jl.push_back(gate_to_json(g));
    layers.push_back(jl);
  }
  nlohmann::json j = {{"version", 1},        {"model", model_name(c.model)},
                      {"n_in", c.n_in},      {"n_anc", c.n_anc},
                      {"n_cbits", c.n_cbits}, {"layers", layers}};
  if (c.layout) {
    nlohmann::json positions = nlohmann::json::object();
    for (const auto& [q, rc] : c.layout->positions)
      positions[std::to_string(q)] = {rc.first, rc.second};
    j["layout"] = {{"grid", {c.layout->rows, c.layout->cols}},
                   {"positions", positions}};
  }
  return j;
}

inline Circuit deserialize(const nlohmann::json& j) {
  if (!j.contains("version") || !j.at("version").is_number_integer() ||
      j.at("version").get<int>() != 1)
    throw std::runtime_error("unsupported version");
  Circuit c;
  c.model = model_from_name(j.at("model").get<std::string>());
  c.n_in = j.at("n_in").get<unsigned>();
  c.n_anc = j.at("n_anc").get<unsigned>();
  c.n_cbits = j.at("n_cbits").get<unsigned>();
  for (const auto& jl : j.at("layers")) {
    Layer l;
    for (const auto& jg : jl) l.push_back(gate_from_json(jg));
    c.layers.push_back(std::move(l));
  }
  if (j.contains("layout")) {
    const auto& jlay = j.at("layout");
    Layout lay;
    lay.rows = jlay.at("grid").at(0).get<unsigned>();
    lay.cols = jlay.at("grid").at(1).get<unsigned>();
    for (const auto& [key, rc] : jlay.at("positions").items())
      lay.positions[static_cast<unsigned>(std::stoul(key))] = {
          rc.at(0).get<unsigned>(), rc.at(1).get<unsigned>()};
    c.layout = std::move(lay);
  }
  return c;
}

}  // namespace qflat
