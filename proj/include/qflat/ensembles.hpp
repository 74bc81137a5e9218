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

// Random-unitary ensembles built from constant-depth ingredients.
//
// The centerpiece is the CPFC construction: a unitary C2 * P * F * C1 made of
// two random Clifford layers, a random diagonal phase oracle F, and a random
// basis permutation P realized as a two-round Feistel network.  The classical
// randomness behind F and P comes from a pluggable keyed-function source:
// bounded-independence polynomials over GF(2^s), a toy lattice PRF, or an
// explicit truth table (the gold standard for tests).  Larger ensembles are
// assembled by gluing independent patch unitaries in two brick-like layers
// whose patches overlap at shifted boundaries.
//
// Oracle components appear in circuits as DiagGate / PermGate primitives: the
// gate carries the full truth table, and circuit metadata records the source
// that generated it.  Every ensemble offers a dense sampler; circuit samplers
// exist for the kinds with a gate-level realization, and both paths are built
// from the same sampled data so they agree to floating-point accuracy.

#ifndef QFLAT_ENSEMBLES_HPP_
#define QFLAT_ENSEMBLES_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qflat/bpr.hpp"
#include "qflat/circuit.hpp"
#include "qflat/clifford.hpp"
#include "qflat/gf2.hpp"
#include "qflat/linalg.hpp"
#include "qflat/rng.hpp"
#include "qflat/simulator.hpp"

namespace qflat {

// --- Keyed boolean-function sources ----------------------------------------

// Where the classical randomness behind an oracle component comes from.
enum class SourceKind {
  kTwise,  // random degree-bounded polynomial over GF(2^s): 2t-wise sample
  kPrf,    // toy learning-with-rounding PRF (desk-scale parameters)
  kTable,  // explicit uniformly random truth table: the gold standard
};

inline std::string source_kind_name(SourceKind k) {
  switch (k) {
    case SourceKind::kTwise:
      return "twise";
    case SourceKind::kPrf:
      return "prf";
    case SourceKind::kTable:
      return "true-random-table";
  }
  throw std::logic_error("unreachable");
}

inline SourceKind source_kind_from_name(const std::string& name) {
  if (name == "twise") return SourceKind::kTwise;
  if (name == "prf") return SourceKind::kPrf;
  if (name == "true-random-table") return SourceKind::kTable;
  throw std::invalid_argument("unknown source kind: " + name);
}

// A sampled keyed function {0,1}^in_bits -> {0,1}^out_bits.  Exactly one of
// the three backing stores is populated, according to `kind`.
struct KeyedFn {
  SourceKind kind = SourceKind::kTable;
  unsigned in_bits = 0;
  unsigned out_bits = 0;
  PolyFn poly;                       // kTwise
  BprKey bpr;                        // kPrf
  std::vector<std::uint64_t> table;  // kTable
};

inline std::uint64_t keyed_fn_eval(const KeyedFn& f, std::uint64_t x) {
  if (x >> f.in_bits) throw std::invalid_argument("keyed fn input out of range");
  switch (f.kind) {
    case SourceKind::kTwise:
      return poly_eval(f.poly, x);
    case SourceKind::kPrf:
      return f.out_bits == 1 ? bpr_prf_bit(f.bpr, x)
                             : bpr_prf_bits(f.bpr, x, f.out_bits);
    case SourceKind::kTable:
      return f.table[x];
  }
  throw std::logic_error("unreachable");
}

// Samples a keyed function.  For the bounded-independence source, `t` is the
// moment target: the family is drawn 2t-wise independent (degree 2t-1
// polynomials), which is what the phase/permutation components of a t-design
// construction consume.  The PRF and table sources ignore `t`.
inline KeyedFn sample_keyed_fn(SourceKind kind, unsigned in_bits,
                               unsigned out_bits, unsigned t, Rng& rng) {
  if (in_bits == 0 || in_bits > 20) {
    throw std::invalid_argument("keyed fn input width out of range");
  }
  if (out_bits == 0 || out_bits > in_bits) {
    throw std::invalid_argument("keyed fn output width out of range");
  }
  KeyedFn f;
  f.kind = kind;
  f.in_bits = in_bits;
  f.out_bits = out_bits;
  switch (kind) {
    case SourceKind::kTwise: {
      if (t == 0) throw std::invalid_argument("moment target must be >= 1");
      f.poly = sample_twise_family(in_bits, 2 * t, out_bits, rng);
      break;
    }
    case SourceKind::kPrf: {
      BprParams params;
      params.l = in_bits;
      f.bpr = sample_bpr_key(params, rng);
      break;
    }
    case SourceKind::kTable: {
      f.table.resize(1ull << in_bits);
      for (auto& v : f.table) v = rng.bits(out_bits);
      break;
    }
  }
  return f;
}

namespace detail {

// Domain tags for deriving independent child streams per component.
inline constexpr std::uint64_t kPhaseTag = 0x70687366;    // "phsf"
inline constexpr std::uint64_t kFeistelLTag = 0x6673656c; // "fsel"
inline constexpr std::uint64_t kFeistelRTag = 0x66736572; // "fser"
inline constexpr std::uint64_t kCliffordATag = 0x63666331; // "cfc1"
inline constexpr std::uint64_t kCliffordBTag = 0x63666332; // "cfc2"
inline constexpr std::uint64_t kGlueTag = 0x676c7565;      // "glue"
inline constexpr std::uint64_t kPauliTag = 0x706c6672;     // "plfr"
inline constexpr std::uint64_t kHaarTag = 0x68617572;      // "haur"

inline void record_oracle_source(Circuit& c, const KeyedFn& f) {
  c.metadata["oracle_source"] = static_cast<double>(f.kind);
  c.metadata["oracle_in_bits"] = static_cast<double>(f.in_bits);
}

}  // namespace detail

// --- Phase oracle F ---------------------------------------------------------

// Samples the boolean function behind a diagonal phase oracle on n qubits.
inline KeyedFn sample_phase_fn(unsigned n, SourceKind source, unsigned t,
                               std::uint64_t seed) {
  Rng rng = Rng(seed).derive(detail::kPhaseTag);
  return sample_keyed_fn(source, n, 1, t, rng);
}

// Dense form: the +/-1 diagonal of |x> -> (-1)^{f(x)} |x>.
inline VecC phase_oracle_diagonal(const KeyedFn& f) {
  if (f.out_bits != 1) {
    throw std::invalid_argument("phase oracle needs a single-bit function");
  }
  const std::uint64_t dim = 1ull << f.in_bits;
  VecC d(dim);
  for (std::uint64_t x = 0; x < dim; ++x) {
    d(x) = keyed_fn_eval(f, x) ? cplx(-1.0, 0.0) : cplx(1.0, 0.0);
  }
  return d;
}

// Circuit form: a single full-register DiagGate carrying the truth table.
inline Circuit phase_oracle_circuit(const KeyedFn& f) {
  const std::uint64_t dim = 1ull << f.in_bits;
  DiagGate g;
  g.qubits.resize(f.in_bits);
  for (unsigned q = 0; q < f.in_bits; ++q) g.qubits[q] = q;
  g.flips.resize(dim);
  for (std::uint64_t x = 0; x < dim; ++x) {
    g.flips[x] = static_cast<std::uint8_t>(keyed_fn_eval(f, x) & 1);
  }
  Circuit c;
  c.model = Model::kQac0f;
  c.n_in = f.in_bits;
  c.layers.push_back({Gate{g}});
  detail::record_oracle_source(c, f);
  return c;
}

inline Circuit phase_oracle_F(unsigned n, SourceKind source, unsigned t,
                              std::uint64_t seed) {
  return phase_oracle_circuit(sample_phase_fn(n, source, t, seed));
}

// --- Feistel permutation P --------------------------------------------------

// Two independent round functions on n/2 bits.  The permutation acts on
// x = (x1, x2) with x1 the high half of the basis index: first the right
// round sets b = x2 ^ f_r(x1), then the left round sets a = x1 ^ f_l(b), and
// the image is (a, b).  Two rounds of XOR-feedforward are always a bijection,
// whatever the round functions are.
struct FeistelPair {
  unsigned n = 0;  // total register width; must be even
  KeyedFn f_l, f_r;
};

inline FeistelPair sample_feistel_pair(unsigned n, SourceKind source,
                                       unsigned t, std::uint64_t seed) {
  if (n == 0 || n % 2 != 0) {
    throw std::invalid_argument("feistel register width must be even");
  }
  FeistelPair p;
  p.n = n;
  Rng rng_l = Rng(seed).derive(detail::kFeistelLTag);
  Rng rng_r = Rng(seed).derive(detail::kFeistelRTag);
  p.f_l = sample_keyed_fn(source, n / 2, n / 2, t, rng_l);
  p.f_r = sample_keyed_fn(source, n / 2, n / 2, t, rng_r);
  return p;
}

inline std::uint64_t feistel_eval(const FeistelPair& p, std::uint64_t x) {
  const unsigned h = p.n / 2;
  const std::uint64_t x1 = x >> h;
  const std::uint64_t x2 = x & ((1ull << h) - 1);
  const std::uint64_t b = x2 ^ keyed_fn_eval(p.f_r, x1);
  const std::uint64_t a = x1 ^ keyed_fn_eval(p.f_l, b);
  return (a << h) | b;
}

inline std::vector<std::uint64_t> permutation_table(const FeistelPair& p) {
  std::vector<std::uint64_t> table(1ull << p.n);
  for (std::uint64_t x = 0; x < table.size(); ++x) table[x] = feistel_eval(p, x);
  return table;
}

// Circuit form: a single full-register PermGate carrying the image table.
inline Circuit permutation_circuit(const FeistelPair& p) {
  PermGate g;
  g.qubits.resize(p.n);
  for (unsigned q = 0; q < p.n; ++q) g.qubits[q] = q;
  g.image = permutation_table(p);
  Circuit c;
  c.model = Model::kQac0f;
  c.n_in = p.n;
  c.layers.push_back({Gate{g}});
  detail::record_oracle_source(c, p.f_l);
  return c;
}

inline Circuit permutation_P(unsigned n, SourceKind source, unsigned t,
                             std::uint64_t seed) {
  return permutation_circuit(sample_feistel_pair(n, source, t, seed));
}

// --- CPFC ensemble ----------------------------------------------------------

// One sampled CPFC unitary: C2 * P * F * C1 with C1 applied first.
struct CpfcInstance {
  unsigned n = 0;
  unsigned t = 1;
  SourceKind source = SourceKind::kTwise;
  CliffordTableau c1, c2;
  KeyedFn f;       // phase oracle function, n -> 1
  FeistelPair perm;  // basis permutation
};

inline CpfcInstance sample_cpfc_instance(unsigned n, unsigned t,
                                         SourceKind source,
                                         std::uint64_t seed) {
  if (n == 0 || n % 2 != 0) {
    throw std::invalid_argument("cpfc register width must be even");
  }
  CpfcInstance inst;
  inst.n = n;
  inst.t = t;
  inst.source = source;
  Rng rng(seed);
  inst.c1 = random_clifford(n, rng.derive(detail::kCliffordATag).u64());
  inst.c2 = random_clifford(n, rng.derive(detail::kCliffordBTag).u64());
  inst.f = sample_phase_fn(n, source, t, seed);
  inst.perm = sample_feistel_pair(n, source, t, seed);
  return inst;
}

// Dense unitary of a Clifford tableau, via its nearest-neighbor synthesis so
// the dense and circuit paths share one global-phase convention.
inline MatC clifford_dense(const CliffordTableau& t) {
  return circuit_unitary(tableau_to_nn_circuit(t));
}

inline MatC cpfc_dense(const CpfcInstance& inst) {
  const std::uint64_t dim = 1ull << inst.n;
  MatC u = clifford_dense(inst.c1);
  u = phase_oracle_diagonal(inst.f).asDiagonal() * u;
  const std::vector<std::uint64_t> table = permutation_table(inst.perm);
  MatC v(dim, dim);
  for (std::uint64_t x = 0; x < dim; ++x) v.row(table[x]) = u.row(x);
  return clifford_dense(inst.c2) * v;
}

// Circuit form: nearest-neighbor synthesis of C1, the two oracle gates, then
// the synthesis of C2.  No ancillae; validates in the oracle-gate model.
inline Circuit cpfc_circuit(const CpfcInstance& inst) {
  Circuit c = tableau_to_nn_circuit(inst.c1);
  const Circuit f = phase_oracle_circuit(inst.f);
  const Circuit p = permutation_circuit(inst.perm);
  c.layers.push_back(f.layers[0]);
  c.layers.push_back(p.layers[0]);
  const Circuit tail = tableau_to_nn_circuit(inst.c2);
  c.layers.insert(c.layers.end(), tail.layers.begin(), tail.layers.end());
  detail::record_oracle_source(c, inst.f);
  c.metadata["cpfc_t"] = static_cast<double>(inst.t);
  return c;
}

inline Circuit sample_cpfc(unsigned n, unsigned t, SourceKind source,
                           std::uint64_t seed) {
  return cpfc_circuit(sample_cpfc_instance(n, t, source, seed));
}

// --- Ensemble specifications -------------------------------------------------

enum class EnsembleKind {
  kHaar,       // exact Haar draws (dense only; Monte Carlo reference)
  kClifford,   // uniform Clifford group
  kPauli,      // uniform Pauli strings
  kCpfc,       // single CPFC block
  kGlued,      // two brick layers of independent CPFC patches
  kPru,        // glued CPFC with all randomness from the toy PRF
  kSingleton,  // the identity ensemble (a maximally non-random control)
};

inline std::string ensemble_kind_name(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::kHaar:
      return "haar";
    case EnsembleKind::kClifford:
      return "clifford";
    case EnsembleKind::kPauli:
      return "pauli";
    case EnsembleKind::kCpfc:
      return "cpfc";
    case EnsembleKind::kGlued:
      return "glued";
    case EnsembleKind::kPru:
      return "pru";
    case EnsembleKind::kSingleton:
      return "singleton";
  }
  throw std::logic_error("unreachable");
}

inline EnsembleKind ensemble_kind_from_name(const std::string& name) {
  if (name == "haar") return EnsembleKind::kHaar;
  if (name == "clifford") return EnsembleKind::kClifford;
  if (name == "pauli") return EnsembleKind::kPauli;
  if (name == "cpfc") return EnsembleKind::kCpfc;
  if (name == "glued") return EnsembleKind::kGlued;
  if (name == "pru") return EnsembleKind::kPru;
  if (name == "singleton") return EnsembleKind::kSingleton;
  throw std::invalid_argument("unknown ensemble kind: " + name);
}

// Everything needed to reproduce an ensemble draw.  `patch` is the glue patch
// width (glued/pru only); `source` feeds the oracle components (cpfc/glued;
// pru is pinned to the PRF source); `seed` is the base seed from which
// per-sample seeds are derived by callers.
struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::kHaar;
  unsigned n = 0;
  unsigned t = 1;
  unsigned patch = 0;
  SourceKind source = SourceKind::kTwise;
  std::uint64_t seed = 0;

  bool operator==(const EnsembleSpec&) const = default;
};

inline void to_json(nlohmann::json& j, const EnsembleSpec& s) {
  j = nlohmann::json{{"kind", ensemble_kind_name(s.kind)},
                     {"n", s.n},
                     {"t", s.t},
                     {"patch", s.patch},
                     {"source", source_kind_name(s.source)},
                     {"seed", s.seed}};
}

inline void from_json(const nlohmann::json& j, EnsembleSpec& s) {
  s.kind = ensemble_kind_from_name(j.at("kind").get<std::string>());
  s.n = j.at("n").get<unsigned>();
  s.t = j.at("t").get<unsigned>();
  s.patch = j.at("patch").get<unsigned>();
  s.source = source_kind_from_name(j.at("source").get<std::string>());
  s.seed = j.at("seed").get<std::uint64_t>();
}

// --- Gluing -------------------------------------------------------------------

// One patch of a glued layer: the ordered qubits it acts on and the fully
// specified (seeded) ensemble draw that fills it.
struct GluePatch {
  std::vector<unsigned> qubits;
  EnsembleSpec spec;
};

// Two layers of disjoint patches.  Layer 0 tiles [0, n) starting at 0; layer
// 1 tiles starting at patch/2, and the ends are handled so every qubit is
// covered in both layers: when patch | n the two boundary stubs of layer 1
// join into one wrapped patch, otherwise they stay as narrower edge patches.
struct GluePlan {
  unsigned n = 0;
  unsigned patch = 0;
  std::vector<std::vector<GluePatch>> layers;
};

inline GluePlan glue_plan(const EnsembleSpec& patch_spec, unsigned n,
                          unsigned patch, std::uint64_t seed) {
  if (patch < 2 || patch % 2 != 0) {
    throw std::invalid_argument("glue patch width must be even and >= 2");
  }
  if (patch > n) throw std::invalid_argument("glue patch wider than register");
  if (patch_spec.kind == EnsembleKind::kGlued ||
      patch_spec.kind == EnsembleKind::kPru) {
    throw std::invalid_argument("glue patches cannot themselves be glued");
  }
  GluePlan plan;
  plan.n = n;
  plan.patch = patch;
  plan.layers.resize(2);

  const auto add_patch = [&](unsigned layer, std::vector<unsigned> qubits) {
    GluePatch p;
    p.qubits = std::move(qubits);
    p.spec = patch_spec;
    p.spec.n = static_cast<unsigned>(p.qubits.size());
    p.spec.patch = 0;
    const unsigned position = static_cast<unsigned>(plan.layers[layer].size());
    p.spec.seed =
        Rng(seed).derive_path({detail::kGlueTag, layer, position}).u64();
    plan.layers[layer].push_back(std::move(p));
  };
  const auto range = [](unsigned lo, unsigned hi) {
    std::vector<unsigned> qs;
    for (unsigned q = lo; q < hi; ++q) qs.push_back(q);
    return qs;
  };

  // Layer 0: full patches from the left edge, plus a truncated tail.
  unsigned start = 0;
  while (start + patch <= n) {
    add_patch(0, range(start, start + patch));
    start += patch;
  }
  if (start < n) add_patch(0, range(start, n));

  // Layer 1: offset by half a patch.
  const unsigned half = patch / 2;
  if (n % patch == 0) {
    // The two half-width stubs at the ends are the same boundary, so they
    // merge into a single wrapped patch (listed tail-first).
    start = half;
    while (start + patch <= n) {
      add_patch(1, range(start, start + patch));
      start += patch;
    }
    std::vector<unsigned> wrap = range(n - half, n);
    const std::vector<unsigned> head = range(0, half);
    wrap.insert(wrap.end(), head.begin(), head.end());
    add_patch(1, std::move(wrap));
  } else {
    add_patch(1, range(0, half));
    start = half;
    while (start + patch <= n) {
      add_patch(1, range(start, start + patch));
      start += patch;
    }
    if (start < n) add_patch(1, range(start, n));
  }
  return plan;
}

// Expands a k-qubit unitary to n qubits, acting on the listed qubits (in
// order: qubits[0] is the high bit of the small unitary's index).
inline MatC embed_on_qubits(unsigned n, const std::vector<unsigned>& qubits,
                            const MatC& u) {
  const unsigned k = static_cast<unsigned>(qubits.size());
  const std::uint64_t dim = 1ull << n;
  const std::uint64_t sub = 1ull << k;
  if (u.rows() != static_cast<Eigen::Index>(sub) || u.cols() != u.rows()) {
    throw std::invalid_argument("embedded unitary has the wrong dimension");
  }
  MatC out = MatC::Zero(dim, dim);
  for (std::uint64_t j = 0; j < dim; ++j) {
    const std::uint64_t x = subindex(j, n, qubits);
    for (std::uint64_t y = 0; y < sub; ++y) {
      std::uint64_t i = j;
      for (unsigned b = 0; b < k; ++b) {
        const std::uint64_t mask = 1ull << (n - 1 - qubits[b]);
        if ((y >> (k - 1 - b)) & 1) {
          i |= mask;
        } else {
          i &= ~mask;
        }
      }
      out(i, j) = u(y, x);
    }
  }
  return out;
}

MatC ensemble_dense_sample(const EnsembleSpec& spec, std::uint64_t seed);
Circuit ensemble_circuit_sample(const EnsembleSpec& spec, std::uint64_t seed);

// Dense glued draw: the product of both layers, each the product of its
// embedded patch unitaries (disjoint within a layer, so order is immaterial).
inline MatC glued_dense(const GluePlan& plan) {
  const std::uint64_t dim = 1ull << plan.n;
  MatC u = MatC::Identity(dim, dim);
  for (const auto& layer : plan.layers) {
    MatC l = MatC::Identity(dim, dim);
    for (const GluePatch& p : layer) {
      l = embed_on_qubits(plan.n, p.qubits,
                          ensemble_dense_sample(p.spec, p.spec.seed)) *
          l;
    }
    u = l * u;
  }
  return u;
}

// Circuit glued draw: each layer is the overlay of its remapped patch
// circuits, and the two layers run in sequence.  Requires every patch kind to
// have a circuit form.
inline Circuit glued_circuit(const GluePlan& plan) {
  Circuit out;
  out.model = Model::kQac0f;
  out.n_in = plan.n;
  for (const auto& layer : plan.layers) {
    Circuit merged;
    bool first = true;
    for (const GluePatch& p : layer) {
      Circuit pc = ensemble_circuit_sample(p.spec, p.spec.seed);
      std::vector<unsigned> map(pc.n_total());
      for (unsigned q = 0; q < map.size(); ++q) map[q] = p.qubits[q];
      pc = remap_qubits(pc, map, plan.n, 0);
      merged = first ? std::move(pc) : overlay(merged, pc);
      first = false;
    }
    out = compose(out, merged);
  }
  out.metadata["glue_patch"] = static_cast<double>(plan.patch);
  out.metadata["glue_layers"] = 2.0;
  return out;
}

// The glue operation itself: two brick layers of independent patch_spec draws.
inline Circuit glue(const EnsembleSpec& patch_spec, unsigned n, unsigned patch,
                    std::uint64_t seed) {
  return glued_circuit(glue_plan(patch_spec, n, patch, seed));
}

// --- Pseudorandom unitaries ---------------------------------------------------

// A PRU draw is a glued CPFC circuit whose oracle components all pull their
// randomness from the toy PRF.  The patch width must divide n so every patch
// is a full (even-width) CPFC block.
inline Circuit sample_pru(unsigned n, unsigned t, unsigned patch,
                          std::uint64_t seed) {
  if (patch == 0 || n % patch != 0) {
    throw std::invalid_argument("pru patch width must divide the register");
  }
  EnsembleSpec patch_spec;
  patch_spec.kind = EnsembleKind::kCpfc;
  patch_spec.t = t;
  patch_spec.source = SourceKind::kPrf;
  Circuit c = glue(patch_spec, n, patch, seed);
  c.metadata["pru"] = 1.0;
  return c;
}

// --- Unified samplers ----------------------------------------------------------

namespace detail {

inline Pauli sample_pauli_string(unsigned n, std::uint64_t seed) {
  Rng rng = Rng(seed).derive(kPauliTag);
  Pauli p = pauli_identity(n);
  for (unsigned q = 0; q < n; ++q) {
    p.x[q] = static_cast<std::uint8_t>(rng.bit());
    p.z[q] = static_cast<std::uint8_t>(rng.bit());
  }
  return p;
}

inline EnsembleSpec cpfc_patch_of(const EnsembleSpec& spec) {
  EnsembleSpec patch_spec;
  patch_spec.kind = EnsembleKind::kCpfc;
  patch_spec.t = spec.t;
  patch_spec.source =
      spec.kind == EnsembleKind::kPru ? SourceKind::kPrf : spec.source;
  return patch_spec;
}

}  // namespace detail

// One dense draw from the ensemble.  `seed` fully determines the draw; the
// spec's own seed field is a base for callers to derive per-draw seeds from.
inline MatC ensemble_dense_sample(const EnsembleSpec& spec,
                                  std::uint64_t seed) {
  switch (spec.kind) {
    case EnsembleKind::kHaar: {
      Rng rng = Rng(seed).derive(detail::kHaarTag);
      return haar_unitary(1ull << spec.n, rng);
    }
    case EnsembleKind::kClifford:
      return clifford_dense(random_clifford(spec.n, seed));
    case EnsembleKind::kPauli:
      return pauli_dense(detail::sample_pauli_string(spec.n, seed));
    case EnsembleKind::kCpfc:
      return cpfc_dense(sample_cpfc_instance(spec.n, spec.t, spec.source, seed));
    case EnsembleKind::kGlued:
    case EnsembleKind::kPru:
      return glued_dense(
          glue_plan(detail::cpfc_patch_of(spec), spec.n, spec.patch, seed));
    case EnsembleKind::kSingleton:
      return MatC::Identity(1ull << spec.n, 1ull << spec.n);
  }
  throw std::logic_error("unreachable");
}

// One circuit draw, for the kinds with a gate-level realization.
inline Circuit ensemble_circuit_sample(const EnsembleSpec& spec,
                                       std::uint64_t seed) {
  switch (spec.kind) {
    case EnsembleKind::kHaar:
      throw std::invalid_argument("haar ensemble has no circuit form");
    case EnsembleKind::kClifford:
      return tableau_to_nn_circuit(random_clifford(spec.n, seed));
    case EnsembleKind::kPauli: {
      const Pauli p = detail::sample_pauli_string(spec.n, seed);
      Circuit c;
      c.model = Model::kQac0f;
      c.n_in = spec.n;
      std::vector<Gate> layer;
      for (unsigned q = 0; q < spec.n; ++q) {
        Mat2 m = id_mat();
        if (p.z[q]) m = mat2_mul(z_mat(), m);
        if (p.x[q]) m = mat2_mul(x_mat(), m);
        if (p.x[q] || p.z[q]) layer.push_back(U1Gate{q, m});
      }
      if (!layer.empty()) c.layers.push_back(std::move(layer));
      return c;
    }
    case EnsembleKind::kCpfc:
      return sample_cpfc(spec.n, spec.t, spec.source, seed);
    case EnsembleKind::kGlued:
    case EnsembleKind::kPru: {
      Circuit c = glued_circuit(
          glue_plan(detail::cpfc_patch_of(spec), spec.n, spec.patch, seed));
      if (spec.kind == EnsembleKind::kPru) c.metadata["pru"] = 1.0;
      return c;
    }
    case EnsembleKind::kSingleton: {
      Circuit c;
      c.model = Model::kQac0f;
      c.n_in = spec.n;
      return c;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace qflat

#endif  // QFLAT_ENSEMBLES_HPP_
