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

#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "qflat/circuit.hpp"
#include "qflat/linalg.hpp"
#include "qflat/rng.hpp"

namespace qflat {

// Basis convention: qubit 0 is the most significant bit, so basis state
// |q_0 q_1 ... q_{n-1}> has index sum q_i * 2^{n-1-i}. Ancillae sit after
// the inputs, i.e. in the least significant bit positions.

struct StateVector {
  unsigned n = 0;
  VecC amps;

  static StateVector zero(unsigned n) { return basis(n, 0); }

  static StateVector basis(unsigned n, std::uint64_t index) {
    StateVector s;
    s.n = n;
    s.amps = VecC::Zero(Eigen::Index(1) << n);
    s.amps(static_cast<Eigen::Index>(index)) = 1.0;
    return s;
  }
};

struct SimOptions {
  unsigned qubit_cap = 22;          // inputs + ancillae
  std::size_t branch_cap = 1 << 22; // run_all_branches leaf limit
  double branch_eps = 1e-12;        // prune branches below this probability
};

// --- Gate kernels (in place, on a 2^n amplitude vector) -------------------------

inline std::uint64_t qubit_mask(unsigned n, unsigned q) {
  return 1ull << (n - 1 - q);
}

inline void apply_u1(VecC& a, unsigned n, unsigned q, const Mat2& m) {
  const std::uint64_t mask = qubit_mask(n, q);
  const std::uint64_t dim = 1ull << n;
  for (std::uint64_t i = 0; i < dim; ++i) {
    if (i & mask) continue;
    const cplx a0 = a(i), a1 = a(i | mask);
    a(i) = m[0] * a0 + m[1] * a1;
    a(i | mask) = m[2] * a0 + m[3] * a1;
  }
}

inline void apply_toffoli(VecC& a, unsigned n,
                          const std::vector<unsigned>& controls,
                          unsigned target) {
  std::uint64_t cmask = 0;
  for (unsigned c : controls) cmask |= qubit_mask(n, c);
  const std::uint64_t tmask = qubit_mask(n, target);
  const std::uint64_t dim = 1ull << n;
  for (std::uint64_t i = 0; i < dim; ++i)
    if ((i & cmask) == cmask && !(i & tmask)) std::swap(a(i), a(i | tmask));
}

inline void apply_fanout(VecC& a, unsigned n, unsigned source,
                         const std::vector<unsigned>& targets) {
  const std::uint64_t smask = qubit_mask(n, source);
  std::uint64_t tmask = 0;
  for (unsigned t : targets) tmask |= qubit_mask(n, t);
  const std::uint64_t dim = 1ull << n;
  for (std::uint64_t i = 0; i < dim; ++i)
    if ((i & smask) && i < (i ^ tmask)) std::swap(a(i), a(i ^ tmask));
}

// Table index of the sub-register selected by `qubits` (qubits[0] is the
// most significant table bit) within the global basis index i.
inline std::uint64_t subindex(std::uint64_t i, unsigned n,
                              const std::vector<unsigned>& qubits) {
  std::uint64_t x = 0;
  for (unsigned q : qubits) x = (x << 1) | ((i >> (n - 1 - q)) & 1);
  return x;
}

inline void apply_diag(VecC& a, unsigned n, const std::vector<unsigned>& qubits,
                       const std::vector<std::uint8_t>& flips) {
  const std::uint64_t dim = 1ull << n;
  for (std::uint64_t i = 0; i < dim; ++i)
    if (flips[subindex(i, n, qubits)]) a(i) = -a(i);
}

inline void apply_perm(VecC& a, unsigned n, const std::vector<unsigned>& qubits,
                       const std::vector<std::uint64_t>& image) {
  const std::uint64_t dim = 1ull << n;
  const unsigned k = static_cast<unsigned>(qubits.size());
  VecC out = VecC::Zero(a.size());
  for (std::uint64_t i = 0; i < dim; ++i) {
    const std::uint64_t y = image[subindex(i, n, qubits)];
    std::uint64_t j = i;
    for (unsigned b = 0; b < k; ++b) {
      const std::uint64_t mask = qubit_mask(n, qubits[b]);
      if ((y >> (k - 1 - b)) & 1)
        j |= mask;
      else
        j &= ~mask;
    }
    out(j) = a(i);
  }
  a = std::move(out);
}

inline void apply_pauli(VecC& a, unsigned n, char pauli, unsigned q) {
  const std::uint64_t mask = qubit_mask(n, q);
  const std::uint64_t dim = 1ull << n;
  if (pauli == 'X') {
    for (std::uint64_t i = 0; i < dim; ++i)
      if (!(i & mask)) std::swap(a(i), a(i | mask));
  } else if (pauli == 'Z') {
    for (std::uint64_t i = 0; i < dim; ++i)
      if (i & mask) a(i) = -a(i);
  } else {
    throw std::invalid_argument("pauli must be X or Z");
  }
}

inline double prob_of_one(const VecC& a, unsigned n, unsigned q) {
  const std::uint64_t mask = qubit_mask(n, q);
  double p = 0;
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(a.size()); ++i)
    if (i & mask) p += std::norm(a(i));
  return p;
}

// Zero out the amplitudes inconsistent with measuring `outcome`, without
// renormalizing: the surviving squared norm is the branch probability.
inline void project(VecC& a, unsigned n, unsigned q, int outcome) {
  const std::uint64_t mask = qubit_mask(n, q);
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(a.size()); ++i)
    if (((i & mask) != 0) != (outcome != 0)) a(i) = 0.0;
}

// --- Execution ------------------------------------------------------------------

namespace detail {

inline void check_runnable(const Circuit& c, const SimOptions& opts) {
  if (c.n_total() > opts.qubit_cap)
    throw std::invalid_argument("qubit cap exceeded");
  require_valid(c);
}

// Apply one non-measurement gate in place.
inline void apply_gate(const Gate& g, VecC& a, unsigned n,
                       const std::vector<int>& cbits) {
  if (const auto* u = std::get_if<U1Gate>(&g)) {
    apply_u1(a, n, u->q, u->m);
  } else if (const auto* t = std::get_if<ToffoliGate>(&g)) {
    apply_toffoli(a, n, t->controls, t->target);
  } else if (const auto* f = std::get_if<FanoutGate>(&g)) {
    apply_fanout(a, n, f->source, f->targets);
  } else if (const auto* p = std::get_if<CPauliGate>(&g)) {
    int parity = 0;
    for (unsigned b : p->cbits) parity ^= cbits[b];
    if (parity) apply_pauli(a, n, p->pauli, p->q);
  } else if (const auto* d = std::get_if<DiagGate>(&g)) {
    apply_diag(a, n, d->qubits, d->flips);
  } else if (const auto* pe = std::get_if<PermGate>(&g)) {
    apply_perm(a, n, pe->qubits, pe->image);
  } else {
    throw std::logic_error("measurement reached unconditional path");
  }
}

inline std::vector<const Gate*> flatten(const Circuit& c) {
  std::vector<const Gate*> gates;
  for (const Layer& l : c.layers)
    for (const Gate& g : l) gates.push_back(&g);
  return gates;
}

// Extend an n_in-qubit input with |0^{n_anc}> trailing ancillae.
inline VecC with_ancillae(const Circuit& c, const StateVector& psi) {
  if (psi.n != c.n_in) throw std::invalid_argument("input width mismatch");
  const std::uint64_t da = 1ull << c.n_anc;
  VecC a = VecC::Zero(psi.amps.size() * static_cast<Eigen::Index>(da));
  for (Eigen::Index j = 0; j < psi.amps.size(); ++j)
    a(j * static_cast<Eigen::Index>(da)) = psi.amps(j);
  return a;
}

// Depth-first walk over measurement outcomes with unnormalized states: the
// squared norm reaching a leaf is exactly the branch probability. `sink`
// receives the unnormalized leaf amplitudes.
inline void branch_walk(
    const std::vector<const Gate*>& gates, std::size_t pos, unsigned n,
    VecC& a, std::vector<int>& cbits, std::vector<int>& outcomes,
    const SimOptions& opts, std::size_t& leaves,
    const std::function<void(const VecC&, const std::vector<int>&,
                             const std::vector<int>&)>& sink) {
  for (; pos < gates.size(); ++pos) {
    const auto* m = std::get_if<MeasureGate>(gates[pos]);
    if (!m) {
      apply_gate(*gates[pos], a, n, cbits);
      continue;
    }
    for (int outcome : {0, 1}) {
      VecC branch = a;
      project(branch, n, m->q, outcome);
      if (branch.squaredNorm() < opts.branch_eps) continue;
      cbits[m->cbit] = outcome;
      outcomes.push_back(outcome);
      branch_walk(gates, pos + 1, n, branch, cbits, outcomes, opts, leaves,
                  sink);
      outcomes.pop_back();
    }
    return;
  }
  if (++leaves > opts.branch_cap) throw std::runtime_error("branch cap exceeded");
  sink(a, cbits, outcomes);
}

// Same walk over a pair of unnormalized states collapsed to identical
// outcomes; the leaves reconstruct a channel's action on a dyad |u><v|.
inline void branch_walk_pair(
    const std::vector<const Gate*>& gates, std::size_t pos, unsigned n,
    VecC& u, VecC& v, std::vector<int>& cbits, const SimOptions& opts,
    std::size_t& leaves,
    const std::function<void(const VecC&, const VecC&)>& sink) {
  for (; pos < gates.size(); ++pos) {
    const auto* m = std::get_if<MeasureGate>(gates[pos]);
    if (!m) {
      apply_gate(*gates[pos], u, n, cbits);
      apply_gate(*gates[pos], v, n, cbits);
      continue;
    }
    for (int outcome : {0, 1}) {
      VecC bu = u, bv = v;
      project(bu, n, m->q, outcome);
      project(bv, n, m->q, outcome);
      if (bu.squaredNorm() < opts.branch_eps &&
          bv.squaredNorm() < opts.branch_eps)
        continue;
      cbits[m->cbit] = outcome;
      branch_walk_pair(gates, pos + 1, n, bu, bv, cbits, opts, leaves, sink);
    }
    return;
  }
  if (++leaves > opts.branch_cap) throw std::runtime_error("branch cap exceeded");
  sink(u, v);
}

}  // namespace detail

struct RunResult {
  StateVector state;       // full register (inputs + ancillae), normalized
  std::vector<int> cbits;  // classical bits (unwritten bits read 0)
  std::vector<int> outcomes;  // measurement outcomes in execution order
  double probability = 1.0;   // probability of the sampled branch
};

struct BranchRun {
  std::vector<int> outcomes;
  std::vector<int> cbits;
  double probability = 0.0;
  StateVector state;  // full register, normalized
};

// Execute the circuit on psi_in (n_in qubits), sampling one measurement
// branch. The coin for measurement k is drawn from an RNG stream derived
// from (seed, k, outcome path so far), so the sampled branch is a
// deterministic function of the seed that selects among the branches
// run_all_branches enumerates.
inline RunResult run(const Circuit& c, const StateVector& psi_in,
                     std::uint64_t seed, const SimOptions& opts = {}) {
  detail::check_runnable(c, opts);
  const unsigned n = c.n_total();
  VecC a = detail::with_ancillae(c, psi_in);
  RunResult r;
  r.cbits.assign(c.n_cbits, 0);
  Rng base = Rng(seed).derive(0x6d656173);  // measurement stream
  unsigned k = 0;
  std::uint64_t path = 1;  // outcome bits with a leading sentinel 1
  for (const Layer& l : c.layers) {
    for (const Gate& g : l) {
      const auto* m = std::get_if<MeasureGate>(&g);
      if (!m) {
        detail::apply_gate(g, a, n, r.cbits);
        continue;
      }
      if (k >= 62) throw std::runtime_error("too many measurements to sample");
      const double p1 = prob_of_one(a, n, m->q);
      const int outcome = base.derive(k, path).uniform() < p1 ? 1 : 0;
      project(a, n, m->q, outcome);
      const double p = outcome ? p1 : 1.0 - p1;
      if (p <= 0) throw std::runtime_error("sampled zero-probability branch");
      a /= std::sqrt(a.squaredNorm());
      r.cbits[m->cbit] = outcome;
      r.outcomes.push_back(outcome);
      r.probability *= p;
      path = path * 2 + outcome;
      ++k;
    }
  }
  r.state = StateVector{n, std::move(a)};
  return r;
}

// Enumerate every measurement branch with its probability and normalized
// post-branch state. Branch probabilities sum to 1 (up to pruning below
// opts.branch_eps).
inline std::vector<BranchRun> run_all_branches(const Circuit& c,
                                               const StateVector& psi_in,
                                               const SimOptions& opts = {}) {
  detail::check_runnable(c, opts);
  const unsigned n = c.n_total();
  VecC a = detail::with_ancillae(c, psi_in);
  std::vector<const Gate*> gates = detail::flatten(c);
  std::vector<int> cbits(c.n_cbits, 0), outcomes;
  std::size_t leaves = 0;
  std::vector<BranchRun> out;
  detail::branch_walk(
      gates, 0, n, a, cbits, outcomes, opts, leaves,
      [&](const VecC& leaf, const std::vector<int>& cb,
          const std::vector<int>& oc) {
        BranchRun b;
        b.probability = leaf.squaredNorm();
        b.state = StateVector{n, leaf / std::sqrt(b.probability)};
        b.cbits = cb;
        b.outcomes = oc;
        out.push_back(std::move(b));
      });
  return out;
}

// --- Channels ---------------------------------------------------------------------

// The channel a circuit implements on its input register:
//   rho -> tr_anc( C (rho (x) |0^a><0^a|) C^† ),
// with measurement outcomes averaged over. Accepts any input matrix (the
// map extends linearly); Hermitian inputs take an eigendecomposition fast
// path, general matrices are processed column-dyad by column-dyad.
inline MatC channel_apply(const Circuit& c, const MatC& rho,
                          const SimOptions& opts = {}) {
  detail::check_runnable(c, opts);
  const Eigen::Index d = Eigen::Index(1) << c.n_in;
  if (rho.rows() != d || rho.cols() != d)
    throw std::invalid_argument("dimension mismatch");
  const unsigned n = c.n_total();
  std::vector<const Gate*> gates = detail::flatten(c);
  MatC out = MatC::Zero(d, d);

  const bool hermitian = (rho - rho.adjoint()).norm() <= 1e-12 * (1 + rho.norm());
  if (hermitian) {
    Eigen::SelfAdjointEigenSolver<MatC> es(rho);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double lam = es.eigenvalues()(i);
      if (std::abs(lam) < 1e-14) continue;
      StateVector psi{c.n_in, es.eigenvectors().col(i)};
      VecC a = detail::with_ancillae(c, psi);
      std::vector<int> cbits(c.n_cbits, 0), outcomes;
      std::size_t leaves = 0;
      detail::branch_walk(gates, 0, n, a, cbits, outcomes, opts, leaves,
                          [&](const VecC& leaf, const std::vector<int>&,
                              const std::vector<int>&) {
                            out += lam * pure_partial_trace_last(leaf, c.n_in,
                                                                 c.n_anc);
                          });
    }
    return out;
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    StateVector u{c.n_in, rho.col(j)};
    StateVector v{c.n_in, VecC::Zero(d)};
    v.amps(j) = 1.0;
    VecC au = detail::with_ancillae(c, u);
    VecC av = detail::with_ancillae(c, v);
    std::vector<int> cbits(c.n_cbits, 0);
    std::size_t leaves = 0;
    detail::branch_walk_pair(
        gates, 0, n, au, av, cbits, opts, leaves,
        [&](const VecC& lu, const VecC& lv) {
          const Eigen::Index dk = Eigen::Index(1) << c.n_in;
          const Eigen::Index dt = Eigen::Index(1) << c.n_anc;
          Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>>
              mu(lu.data(), dk, dt), mv(lv.data(), dk, dt);
          out += mu * mv.adjoint();
        });
  }
  return out;
}

// Full unitary of a measurement-free circuit over all n_total qubits,
// built column by column. Exponential in qubit count; test-scale only.
inline MatC circuit_unitary(const Circuit& c, const SimOptions& opts = {}) {
  detail::check_runnable(c, opts);
  if (has_nonunitary_gates(c))
    throw std::invalid_argument("circuit has measurements");
  const unsigned n = c.n_total();
  const Eigen::Index dim = Eigen::Index(1) << n;
  MatC u(dim, dim);
  std::vector<int> cbits;
  for (Eigen::Index j = 0; j < dim; ++j) {
    VecC a = VecC::Zero(dim);
    a(j) = 1.0;
    for (const Layer& l : c.layers)
      for (const Gate& g : l) detail::apply_gate(g, a, n, cbits);
    u.col(j) = a;
  }
  return u;
}

// The block of C between ancilla-in-|0^a> and ancilla-back-in-|0^a>:
//   B(i, j) = <i, 0^a| C |j, 0^a>,
// i.e. the operator the circuit implements on its input register when the
// ancillae behave. B is a contraction; it is unitary iff the circuit
// implements some unitary exactly.
inline MatC implemented_block(const Circuit& c, const SimOptions& opts = {}) {
  detail::check_runnable(c, opts);
  if (has_nonunitary_gates(c))
    throw std::invalid_argument("circuit has measurements");
  const unsigned n = c.n_total();
  const Eigen::Index d = Eigen::Index(1) << c.n_in;
  const std::uint64_t da = 1ull << c.n_anc;
  MatC b(d, d);
  std::vector<int> cbits;
  for (Eigen::Index j = 0; j < d; ++j) {
    VecC a = detail::with_ancillae(c, StateVector::basis(c.n_in, j));
    for (const Layer& l : c.layers)
      for (const Gate& g : l) detail::apply_gate(g, a, n, cbits);
    for (Eigen::Index i = 0; i < d; ++i)
      b(i, j) = a(i * static_cast<Eigen::Index>(da));
  }
  return b;
}

// Distance from the origin to the numerical range W(M) = {<x|M|x> : |x|=1}.
// W(M) is convex, so the distance is the largest value, over directions
// theta, of the smallest eigenvalue of Herm(e^{-i theta} M) — a coarse
// sweep plus a local ternary refinement pins it to high accuracy.
inline double numerical_range_distance(const MatC& m, unsigned grid = 720) {
  auto support = [&](double theta) {
    MatC h = 0.5 * (std::polar(1.0, -theta) * m +
                    std::polar(1.0, theta) * m.adjoint());
    Eigen::SelfAdjointEigenSolver<MatC> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  };
  const double two_pi = 8 * std::atan(1.0);
  double best = -1e300, best_theta = 0;
  for (unsigned k = 0; k < grid; ++k) {
    const double theta = two_pi * k / grid;
    const double g = support(theta);
    if (g > best) {
      best = g;
      best_theta = theta;
    }
  }
  double lo = best_theta - two_pi / grid, hi = best_theta + two_pi / grid;
  for (int it = 0; it < 200; ++it) {
    const double t1 = lo + (hi - lo) / 3, t2 = hi - (hi - lo) / 3;
    if (support(t1) < support(t2)) lo = t1; else hi = t2;
  }
  best = std::max(best, support((lo + hi) / 2));
  return std::max(0.0, best);
}

// Implementation error of a unitary-model circuit against a target unitary:
//   eps = 1 - min over unit psi of |<psi| B^† U |psi>|^2,
// where B is the implemented block. The minimum modulus of the quadratic
// form over the unit sphere equals the distance from 0 to the numerical
// range of B^† U, which is computed exactly (up to the stated sweep
// tolerance) by convexity of the numerical range.
inline double impl_error(const Circuit& c, const MatC& u,
                         const SimOptions& opts = {}) {
  const Eigen::Index d = Eigen::Index(1) << c.n_in;
  if (u.rows() != d || u.cols() != d)
    throw std::invalid_argument("dimension mismatch");
  MatC m = implemented_block(c, opts).adjoint() * u;
  const double dist = numerical_range_distance(m);
  return std::min(1.0, std::max(0.0, 1.0 - dist * dist));
}

// --- Distances -----------------------------------------------------------------------

inline bool is_density_operator(const MatC& rho, double tol = 1e-8) {
  if (rho.rows() != rho.cols()) return false;
  if ((rho - rho.adjoint()).norm() > tol) return false;
  if (std::abs(rho.trace().real() - 1.0) > tol) return false;
  Eigen::SelfAdjointEigenSolver<MatC> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() > -1e-9;
}

namespace detail {

inline double trace_distance_impl(const MatC& rho, const MatC& sigma) {
  Eigen::SelfAdjointEigenSolver<MatC> es(rho - sigma, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

inline double fidelity_impl(const MatC& rho, const MatC& sigma) {
  // (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 equals the squared nuclear norm
  // of sqrt(rho)*sqrt(sigma); the SVD route keeps full precision on
  // rank-deficient states, where eigenvalue square roots lose half the
  // significant digits.
  Eigen::JacobiSVD<MatC> svd(psd_sqrt(rho) * psd_sqrt(sigma));
  const double t = svd.singularValues().sum();
  return t * t;
}

}  // namespace detail

// Half the trace norm of rho - sigma. In debug builds, density-operator
// arguments are additionally checked against the fidelity bound
// td <= sqrt(1 - F).
inline double trace_distance(const MatC& rho, const MatC& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw std::invalid_argument("dimension mismatch");
  const double td = detail::trace_distance_impl(rho, sigma);
#ifndef NDEBUG
  if (is_density_operator(rho) && is_density_operator(sigma)) {
    const double f = detail::fidelity_impl(rho, sigma);
    assert(td <= std::sqrt(std::max(0.0, 1.0 - f)) + 1e-9);
  }
#endif
  return td;
}

// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
inline double fidelity(const MatC& rho, const MatC& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw std::invalid_argument("dimension mismatch");
  return detail::fidelity_impl(rho, sigma);
}

// --- Kraus extraction and query adversaries ----------------------------------------

// Kraus operators of the channel of a measurement-free circuit:
// E_k = (I (x) <k|) C (I (x) |0^a>), one per ancilla basis state.
inline std::vector<MatC> kraus_ops(const Circuit& c,
                                   const SimOptions& opts = {}) {
  detail::check_runnable(c, opts);
  if (has_nonunitary_gates(c))
    throw std::invalid_argument("kraus extraction needs a unitary-model circuit");
  const unsigned n = c.n_total();
  const Eigen::Index d = Eigen::Index(1) << c.n_in;
  const Eigen::Index da = Eigen::Index(1) << c.n_anc;
  std::vector<MatC> ops(static_cast<std::size_t>(da), MatC(d, d));
  std::vector<int> cbits;
  for (Eigen::Index j = 0; j < d; ++j) {
    VecC a = detail::with_ancillae(c, StateVector::basis(c.n_in, j));
    for (const Layer& l : c.layers)
      for (const Gate& g : l) detail::apply_gate(g, a, n, cbits);
    for (Eigen::Index k = 0; k < da; ++k)
      for (Eigen::Index i = 0; i < d; ++i) ops[k](i, j) = a(i * da + k);
  }
  return ops;
}

// A t-query distinguishing program: t+1 interleaved unitaries over the
// oracle register plus n_env workspace qubits, with a direction flag per
// query (false = forward, true = inverse).
struct QueryAdversary {
  unsigned n_env = 0;
  std::vector<MatC> interludes;     // t+1 unitaries, dim 2^{n_in+n_env}
  std::vector<bool> inverse_query;  // t flags
};

inline QueryAdversary random_query_adversary(unsigned n_in, unsigned n_env,
                                             unsigned t, Rng& rng) {
  QueryAdversary adv;
  adv.n_env = n_env;
  const unsigned dim = 1u << (n_in + n_env);
  for (unsigned i = 0; i <= t; ++i)
    adv.interludes.push_back(haar_unitary(dim, rng));
  for (unsigned i = 0; i < t; ++i) adv.inverse_query.push_back(rng.bits(1));
  return adv;
}

// Run the adversary once against the circuit's channel and once against the
// ideal unitary, and return the trace distance between the two final
// states. The oracle register is the leading n_in qubits.
inline double query_adversary_gap(const Circuit& c, const MatC& u,
                                  const QueryAdversary& adv,
                                  const SimOptions& opts = {}) {
  const unsigned t = static_cast<unsigned>(adv.inverse_query.size());
  if (adv.interludes.size() != t + 1)
    throw std::invalid_argument("need t+1 interleaved unitaries");
  const Eigen::Index denv = Eigen::Index(1) << adv.n_env;
  const Eigen::Index dim = (Eigen::Index(1) << c.n_in) * denv;

  std::vector<MatC> fwd = kraus_ops(c, opts);
  std::vector<MatC> bwd;
  for (bool inv : adv.inverse_query)
    if (inv) {
      bwd = kraus_ops(inverse(c), opts);
      break;
    }
  const MatC ienv = MatC::Identity(denv, denv);
  auto lift = [&](const std::vector<MatC>& ops) {
    std::vector<MatC> l;
    for (const MatC& e : ops) l.push_back(kron(e, ienv));
    return l;
  };
  std::vector<MatC> fwd_l = lift(fwd), bwd_l = lift(bwd);
  MatC u_l = kron(u, ienv), udg_l = kron(MatC(u.adjoint()), ienv);

  MatC rho_c = MatC::Zero(dim, dim), rho_u = MatC::Zero(dim, dim);
  rho_c(0, 0) = 1.0;
  rho_u(0, 0) = 1.0;
  auto sandwich = [](const MatC& v, const MatC& rho) { return MatC(v * rho * v.adjoint()); };
  for (unsigned i = 0; i <= t; ++i) {
    if (adv.interludes[i].rows() != dim)
      throw std::invalid_argument("interlude dimension mismatch");
    rho_c = sandwich(adv.interludes[i], rho_c);
    rho_u = sandwich(adv.interludes[i], rho_u);
    if (i == t) break;
    const std::vector<MatC>& ops = adv.inverse_query[i] ? bwd_l : fwd_l;
    MatC next = MatC::Zero(dim, dim);
    for (const MatC& e : ops) next += sandwich(e, rho_c);
    rho_c = next;
    rho_u = sandwich(adv.inverse_query[i] ? udg_l : u_l, rho_u);
  }
  return trace_distance(rho_c, rho_u);
}

}  // namespace qflat
