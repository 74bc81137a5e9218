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

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "qflat/circuit.hpp"
#include "qflat/clifford.hpp"
#include "qflat/linalg.hpp"
#include "qflat/rng.hpp"
#include "qflat/simulator.hpp"
#include "qflat/teleport.hpp"
#include "test_util.hpp"

namespace qflat {
namespace {

using testutil::dense_cnot;
using testutil::embed_1q;
using testutil::mod_phase_distance;
using testutil::piece_unitary;
using testutil::random_tracked_clifford;
using testutil::teleport_branch_deviation;
using testutil::TrackedClifford;
using testutil::xz_operator;

// Reduced density operator of the first n_keep qubits of a branch state.
MatC reduced_front(const StateVector& s, unsigned n_keep) {
  return pure_partial_trace_last(s.amps, n_keep, s.n - n_keep);
}

// Oracle for the Bell-measurement byproduct convention the compiler encodes:
// teleporting phi at qubit 0 through a Bell pair (1, 2) via CNOT(0, 1), H(0)
// and computational measurements (m0, m1) leaves X^{m1} Z^{m0} phi on
// qubit 2, each outcome pair with probability 1/4. Built from the simulator
// and dense matrices only.
TEST(TeleportPrimitive, ByproductConventionOracle) {
  Rng rng(0x74656c31);
  for (int rep = 0; rep < 5; ++rep) {
    const VecC phi = haar_state(2, rng);
    Circuit c;
    c.model = Model::kMeasFF;
    c.n_in = 1;
    c.n_anc = 2;
    c.n_cbits = 2;
    c.layers.push_back({h_gate(1)});
    c.layers.push_back({cnot_gate(1, 2)});
    c.layers.push_back({cnot_gate(0, 1)});
    c.layers.push_back({h_gate(0)});
    c.layers.push_back({MeasureGate{0, 0}, MeasureGate{1, 1}});
    const auto branches = run_all_branches(c, StateVector{1, phi});
    ASSERT_EQ(branches.size(), 4u);
    for (const BranchRun& b : branches) {
      EXPECT_NEAR(b.probability, 0.25, 1e-12);
      const VecC expected = xz_operator(1, {b.cbits[1]}, {b.cbits[0]}) * phi;
      const Eigen::Index base = (b.cbits[0] * 2 + b.cbits[1]) * 2;
      const VecC sub = b.state.amps.segment(base, 2);
      EXPECT_NEAR(std::abs(expected.dot(sub)), 1.0, 1e-12);
    }
  }
}

TEST(Plan, SingleQubitTableauHasNoPieces) {
  CliffordTableau t = CliffordTableau::identity(2);
  t.apply_h(0);
  t.apply_s(1);
  t.apply_s(0);
  const TeleportPlan plan = teleport_plan(t);
  EXPECT_EQ(plan.pieces.size(), 0u);
  EXPECT_FALSE(plan.prefix.empty());
  EXPECT_EQ(plan.prefix_tableau, t);
}

TEST(Plan, CnotTableauSplitsIntoPieces) {
  CliffordTableau t = CliffordTableau::identity(2);
  t.apply_cnot(0, 1);
  const TeleportPlan plan = teleport_plan(t);
  ASSERT_GE(plan.pieces.size(), 1u);
  for (const TeleportPiece& p : plan.pieces) {
    EXPECT_FALSE(p.mixed.empty());
    for (const Gate& g : p.mixed)
      EXPECT_TRUE(std::holds_alternative<ToffoliGate>(g) ||
                  std::holds_alternative<U1Gate>(g));
  }
}

// The exact (phase-inclusive) composition of the plan's stage tableaux must
// reproduce the input tableau. Tableau composition is exact arithmetic, so
// this is an equality, not a tolerance check.
TEST(Plan, StageTableauxComposeToInputExactly) {
  Rng rng(0x636f6d70);
  for (unsigned n = 2; n <= 6; ++n) {
    for (int rep = 0; rep < 4; ++rep) {
      const CliffordTableau t = random_clifford(n, rng.u64());
      const TeleportPlan plan = teleport_plan(t);
      CliffordTableau acc = plan.prefix_tableau;
      for (const TeleportPiece& piece : plan.pieces)
        acc = compose(piece.tableau, acc);
      EXPECT_EQ(acc, t) << "n=" << n;
    }
  }
}

// The dense product of the plan's stages must reproduce the tableau's
// unitary (tracked alongside the tableau as an independent oracle).
TEST(Plan, StageProductMatchesTrackedUnitary) {
  Rng rng(0x706c616e);
  for (unsigned n = 2; n <= 5; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      const TrackedClifford tc = random_tracked_clifford(n, 4 * n, rng);
      const TeleportPlan plan = teleport_plan(tc.tab);
      Circuit pc;
      pc.model = Model::kQac0f;
      pc.n_in = n;
      if (!plan.prefix.empty()) pc.layers.push_back(plan.prefix);
      MatC u = circuit_unitary(pc);
      for (const TeleportPiece& piece : plan.pieces)
        u = piece_unitary(n, piece) * u;
      EXPECT_LT(mod_phase_distance(u, tc.u), 1e-9) << "n=" << n;
    }
  }
}

// Frame masks against a dense conjugation oracle: the correction for the
// byproduct deposited at boundary l must equal that Pauli conjugated by the
// tail of pieces C_D...C_l, computed here with dense matrices.
TEST(Frame, MasksMatchDenseConjugationOracle) {
  Rng rng(0x6672616d);
  for (unsigned n = 2; n <= 3; ++n) {
    for (int rep = 0; rep < 6; ++rep) {
      const TrackedClifford tc = random_tracked_clifford(n, 3 * n + 2, rng);
      const TeleportPlan plan = teleport_plan(tc.tab);
      const PauliFrame frame = teleport_frame(plan);
      const unsigned depth = static_cast<unsigned>(plan.pieces.size());
      ASSERT_EQ(frame.n_cbits, 2 * n * depth);
      for (unsigned l = 1; l <= depth; ++l) {
        MatC tail = MatC::Identity(1 << n, 1 << n);
        for (unsigned k = l; k <= depth; ++k)
          tail = piece_unitary(n, plan.pieces[k - 1]) * tail;
        for (unsigned r = 0; r < n; ++r) {
          const unsigned u_bit = (l - 1) * 2 * n + r;
          const unsigned v_bit = (l - 1) * 2 * n + n + r;
          for (const auto& [bit, base] :
               {std::pair<unsigned, char>{v_bit, 'X'},
                std::pair<unsigned, char>{u_bit, 'Z'}}) {
            const MatC raw =
                embed_1q(n, r, base == 'X' ? pauli_x() : pauli_z());
            const MatC expected = tail * raw * tail.adjoint();
            std::vector<int> xs(n), zs(n);
            for (unsigned q = 0; q < n; ++q) {
              xs[q] = frame.x_mask[q][bit];
              zs[q] = frame.z_mask[q][bit];
            }
            const MatC claimed = xz_operator(n, xs, zs);
            EXPECT_LT(mod_phase_distance(claimed, expected), 1e-9)
                << "n=" << n << " l=" << l << " r=" << r << " " << base;
          }
        }
      }
    }
  }
}

TEST(Compile, StructureLayoutAndValidation) {
  Rng rng(0x73747275);
  int checked = 0;
  for (int rep = 0; rep < 6 && checked < 3; ++rep) {
    const TrackedClifford tc = random_tracked_clifford(3, 12, rng);
    const TeleportPlan plan = teleport_plan(tc.tab);
    const unsigned n = 3;
    const unsigned depth = static_cast<unsigned>(plan.pieces.size());
    if (depth == 0) continue;
    ++checked;
    const Circuit c = teleport_compile(tc.tab);
    EXPECT_EQ(c.model, Model::kMeasFF);
    EXPECT_EQ(c.n_in, n);
    EXPECT_EQ(c.n_anc, n * (2 * depth + 1) - n);
    EXPECT_EQ(c.n_cbits, 2 * n * depth);
    EXPECT_EQ(c.depth(), 12u);
    EXPECT_NO_THROW(require_valid(c));

    ASSERT_TRUE(c.layout.has_value());
    EXPECT_EQ(c.layout->rows, n);
    EXPECT_EQ(c.layout->cols, 2 * depth + 1);
    ASSERT_EQ(c.layout->positions.size(), c.n_total());
    std::set<std::pair<unsigned, unsigned>> cells;
    for (const auto& [q, rc] : c.layout->positions) {
      EXPECT_LT(q, c.n_total());
      EXPECT_LT(rc.first, c.layout->rows);
      EXPECT_LT(rc.second, c.layout->cols);
      cells.insert(rc);
    }
    EXPECT_EQ(cells.size(), c.n_total());
    for (unsigned r = 0; r < n; ++r) {
      const auto rc = c.layout->positions.at(r);
      EXPECT_EQ(rc.first, r);
      EXPECT_EQ(rc.second, 0u);
    }

    // Every two-qubit gate outside the three relabeling swap layers is
    // nearest-neighbor under the layout.
    for (std::size_t li = 0; li < c.layers.size(); ++li) {
      if (li >= 7 && li <= 9) continue;
      for (const Gate& g : c.layers[li]) {
        const std::vector<unsigned> qs = qubits_of(g);
        if (qs.size() != 2) continue;
        const auto a = c.layout->positions.at(qs[0]);
        const auto b = c.layout->positions.at(qs[1]);
        const unsigned dr =
            a.first > b.first ? a.first - b.first : b.first - a.first;
        const unsigned dc =
            a.second > b.second ? a.second - b.second : b.second - a.second;
        EXPECT_EQ(dr + dc, 1u) << "layer " << li;
      }
    }

    // Measurements all in layer 6; corrections on data wires in layers 10
    // (X) and 11 (Z).
    for (std::size_t li = 0; li < c.layers.size(); ++li) {
      for (const Gate& g : c.layers[li]) {
        if (std::holds_alternative<MeasureGate>(g)) {
          EXPECT_EQ(li, 6u);
        }
        if (const auto* cp = std::get_if<CPauliGate>(&g)) {
          EXPECT_EQ(li, cp->pauli == 'X' ? 10u : 11u);
          EXPECT_LT(cp->q, n);
        }
      }
    }
  }
  EXPECT_GE(checked, 3);
}

TEST(Compile, IdentityGivesInputBackOnAllBranches) {
  Rng rng(0x6964656e);
  const Circuit c = teleport_compile(CliffordTableau::identity(2));
  EXPECT_EQ(c.depth(), 0u);
  EXPECT_EQ(c.n_anc, 0u);
  EXPECT_EQ(c.n_cbits, 0u);
  const VecC psi = haar_state(4, rng);
  const auto branches = run_all_branches(c, StateVector{2, psi});
  ASSERT_EQ(branches.size(), 1u);
  EXPECT_NEAR(std::abs(psi.dot(branches[0].state.amps)), 1.0, 1e-12);
}

TEST(Compile, SingleQubitContentCompilesWithoutAncillae) {
  CliffordTableau t = CliffordTableau::identity(2);
  t.apply_h(0);
  t.apply_s(1);
  t.apply_sdg(0);
  const MatC u = embed_1q(2, 0, testutil::mat2_to(sdg_mat())) *
                 embed_1q(2, 1, testutil::mat2_to(s_mat())) *
                 embed_1q(2, 0, testutil::mat2_to(h_mat()));
  const Circuit c = teleport_compile(t);
  EXPECT_EQ(c.n_anc, 0u);
  EXPECT_LE(c.depth(), 1u);
  Circuit unitary_view = c;
  unitary_view.model = Model::kQac0f;
  EXPECT_LT(mod_phase_distance(circuit_unitary(unitary_view), u), 1e-12);
}

// The compiled CNOT on |+0> must yield the Bell state on the data wires in
// every measurement branch, each branch equally likely.
TEST(Compile, CnotAllBranchesYieldBellPairs) {
  CliffordTableau t = CliffordTableau::identity(2);
  t.apply_cnot(0, 1);
  const Circuit c = teleport_compile(t);
  ASSERT_LE(c.n_total(), 14u);
  ASSERT_GE(c.n_cbits, 4u);

  VecC plus_zero = VecC::Zero(4);
  plus_zero(0) = plus_zero(2) = 1.0 / std::sqrt(2.0);  // |+0>
  VecC bell = VecC::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  const MatC bell_dyad = bell * bell.adjoint();

  const auto branches = run_all_branches(c, StateVector{2, plus_zero});
  ASSERT_EQ(branches.size(), std::size_t(1) << c.n_cbits);
  const double uniform = 1.0 / static_cast<double>(branches.size());
  double total = 0.0;
  for (const BranchRun& b : branches) {
    total += b.probability;
    EXPECT_NEAR(b.probability, uniform, 1e-12);
    EXPECT_LT(trace_distance(reduced_front(b.state, 2), bell_dyad), 1e-10);
  }
  EXPECT_NEAR(total, 1.0, 1e-10);
}

// Full branch enumeration on every random tableau small enough to simulate
// end to end: each branch must return exactly T|psi>. Candidates that
// compile wider than the enumeration budget are skipped (the streamed test
// below covers them).
TEST(Compile, RandomSmallTableausExactOnAllBranches) {
  Rng rng(0x736d616c);
  int done = 0;
  for (int rep = 0; rep < 12; ++rep) {
    const unsigned n = 2 + static_cast<unsigned>(rng.u64_below(2));
    const TrackedClifford tc = random_tracked_clifford(n, 3, rng);
    const Circuit c = teleport_compile(tc.tab);
    if (c.n_total() > 14 || c.n_cbits > 12) continue;
    ++done;
    const VecC psi = haar_state(1u << n, rng);
    const MatC target = (tc.u * psi) * (tc.u * psi).adjoint();
    const auto branches = run_all_branches(c, StateVector{n, psi});
    EXPECT_EQ(branches.size(), std::size_t(1) << c.n_cbits);
    double total = 0.0;
    for (const BranchRun& b : branches) {
      total += b.probability;
      EXPECT_LT(trace_distance(reduced_front(b.state, n), target), 1e-9);
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
  EXPECT_GE(done, 4);
}

// Streamed branch-exhaustive verification: every Bell outcome of every
// boundary is checked exactly against the byproduct-adjusted piece action,
// and the zero-outcome thread must finish at T|psi>. Covers the full joint
// branch space because corrections are XOR-linear in the outcome bits.
TEST(Compile, StreamedExhaustiveBoundariesUpToFour) {
  Rng rng(0x73747265);
  for (unsigned n = 2; n <= 4; ++n) {
    const int reps = n <= 3 ? 3 : 2;
    for (int rep = 0; rep < reps; ++rep) {
      const TrackedClifford tc = random_tracked_clifford(n, 3 * n, rng);
      const VecC psi = haar_state(1u << n, rng);
      EXPECT_LT(teleport_branch_deviation(tc.tab, tc.u, psi), 1e-10)
          << "n=" << n;
    }
  }
}

// The determinism claim needs the quantum depth to be a constant independent
// of n; the compiled structure pins it at exactly 12 layers.
TEST(Compile, DepthIsConstantAcrossSizes) {
  std::set<unsigned> depths;
  for (unsigned n = 2; n <= 6; ++n) {
    const CliffordTableau t = random_clifford(n, 0xd0c0 + n);
    const TeleportPlan plan = teleport_plan(t);
    ASSERT_GE(plan.pieces.size(), 1u) << "degenerate sample at n=" << n;
    const Circuit c = teleport_compile(t);
    depths.insert(c.depth());
  }
  ASSERT_EQ(depths.size(), 1u);
  EXPECT_EQ(*depths.begin(), 12u);
}

TEST(Compile, QubitCapEnforced) {
  CliffordTableau t = CliffordTableau::identity(2);
  t.apply_cnot(0, 1);
  const unsigned width = teleport_compile(t).n_total();
  ASSERT_GE(width, 6u);
  EXPECT_THROW(teleport_compile(t, width - 1), std::invalid_argument);
  EXPECT_NO_THROW(teleport_compile(t, width));
}

TEST(Compile, LayoutSurvivesJsonRoundTrip) {
  CliffordTableau t = CliffordTableau::identity(2);
  t.apply_cnot(0, 1);
  t.apply_h(0);
  const Circuit c = teleport_compile(t);
  const nlohmann::json j = serialize(c);
  ASSERT_TRUE(j.contains("layout"));
  EXPECT_EQ(j.at("layout").at("grid").at(0).get<unsigned>(), 2u);
  EXPECT_EQ(j.at("layout").at("positions").size(), c.n_total());
  const Circuit back = deserialize(j);
  EXPECT_TRUE(back == c);
}

TEST(FanoutLower, SingleQubitLayersPassThrough) {
  Rng rng(0x70617373);
  Circuit c;
  c.model = Model::kQac0f;
  c.n_in = 3;
  c.layers.push_back({h_gate(0), s_gate(2)});
  c.layers.push_back({u1(1, testutil::mat2_from(haar_unitary(2, rng)))});
  const Circuit low = fanout_layer_lower(c);
  EXPECT_EQ(low.model, Model::kMeasFF);
  EXPECT_EQ(low.layers, c.layers);
  EXPECT_EQ(low.n_anc, 0u);
  EXPECT_EQ(low.n_cbits, 0u);
}

TEST(FanoutLower, ToffoliIsRejected) {
  Circuit c;
  c.model = Model::kQac0f;
  c.n_in = 3;
  c.layers.push_back({ToffoliGate{{0, 1}, 2}});
  EXPECT_THROW(fanout_layer_lower(c), std::invalid_argument);
}

TEST(FanoutLower, SingleTargetFanoutMatchesChannel) {
  Rng rng(0x666e6f31);
  Circuit c;
  c.model = Model::kQac0f;
  c.n_in = 2;
  c.layers.push_back({FanoutGate{0, {1}}});
  const Circuit low = fanout_layer_lower(c);
  EXPECT_NO_THROW(require_valid(low));
  ASSERT_LE(low.n_total(), 10u);
  const MatC u = dense_cnot(2, 0, 1);
  for (int rep = 0; rep < 3; ++rep) {
    const VecC psi = haar_state(4, rng);
    const MatC rho = psi * psi.adjoint();
    EXPECT_LT(
        (channel_apply(low, rho) - u * rho * u.adjoint()).cwiseAbs().maxCoeff(),
        1e-10);
  }
}

// FANOUT(0 -> {1, 2}): verified by the streamed checker on Haar inputs plus
// a full channel comparison when the compiled block fits the dense budget.
TEST(FanoutLower, DoubleTargetFanoutMatchesChannel) {
  Rng rng(0x666e6f32);
  CliffordTableau fan = CliffordTableau::identity(3);
  fan.apply_cnot(0, 1);
  fan.apply_cnot(0, 2);
  const MatC u = dense_cnot(3, 0, 2) * dense_cnot(3, 0, 1);
  for (int rep = 0; rep < 3; ++rep) {
    const VecC psi = haar_state(8, rng);
    EXPECT_LT(teleport_branch_deviation(fan, u, psi), 1e-10);
  }

  Circuit c;
  c.model = Model::kQac0f;
  c.n_in = 3;
  c.layers.push_back({FanoutGate{0, {1, 2}}});
  const Circuit low = fanout_layer_lower(c);
  EXPECT_NO_THROW(require_valid(low));
  if (low.n_total() <= 10 && low.n_cbits <= 8) {
    const VecC psi = haar_state(8, rng);
    const MatC rho = psi * psi.adjoint();
    EXPECT_LT(
        (channel_apply(low, rho) - u * rho * u.adjoint()).cwiseAbs().maxCoeff(),
        1e-10);
  }
}

// Lowered parity block: the FANOUT's teleport block is verified exhaustively
// on all basis inputs by the streamed checker, and the dense composition of
// the stages must act as |x, t> -> |x, t XOR parity(x)>.
TEST(FanoutLower, ParityBlockPreservesBasisAction) {
  const Circuit pb = parity_block({0, 1, 2}, 3);
  const Circuit low = fanout_layer_lower(pb);
  EXPECT_NO_THROW(require_valid(low));
  EXPECT_EQ(low.metadata.at("teleport_blocks"), 1.0);
  EXPECT_LE(low.depth(), 13 * pb.depth());

  CliffordTableau fan = CliffordTableau::identity(4);
  fan.apply_cnot(3, 0);
  fan.apply_cnot(3, 1);
  fan.apply_cnot(3, 2);
  MatC fan_u = MatC::Identity(16, 16);
  for (unsigned tq : {0u, 1u, 2u}) fan_u = dense_cnot(4, 3, tq) * fan_u;

  // Exhaustive basis-state verification of the teleport block itself.
  for (unsigned b = 0; b < 16; ++b) {
    VecC e = VecC::Zero(16);
    e(b) = 1.0;
    EXPECT_LT(teleport_branch_deviation(fan, fan_u, e), 1e-10) << "b=" << b;
  }

  // Dense stage composition equals the parity permutation on every basis
  // state (qubits 0..2 hold x, qubit 3 holds the target bit).
  MatC h4 = MatC::Identity(1, 1);
  for (int i = 0; i < 4; ++i) h4 = kron(h4, testutil::mat2_to(h_mat()));
  const MatC total = h4 * fan_u * h4;
  for (unsigned x = 0; x < 16; ++x) {
    const unsigned bits = x >> 1;
    const unsigned parity = ((bits >> 2) ^ (bits >> 1) ^ bits) & 1u;
    const unsigned expected = x ^ parity;
    VecC e = VecC::Zero(16);
    e(x) = 1.0;
    const VecC out = total * e;
    EXPECT_NEAR(std::abs(out(expected)), 1.0, 1e-10) << "x=" << x;
  }
}

TEST(FanoutLower, DepthBudgetAndBookkeeping) {
  Rng rng(0x6c6f7765);
  Circuit c;
  c.model = Model::kQac0f;
  c.n_in = 3;
  c.layers.push_back({h_gate(0), h_gate(1)});
  c.layers.push_back(
      {FanoutGate{0, {1}}, u1(2, testutil::mat2_from(haar_unitary(2, rng)))});
  c.layers.push_back({FanoutGate{2, {1}}});
  c.layers.push_back({h_gate(2)});
  const Circuit low = fanout_layer_lower(c);
  EXPECT_NO_THROW(require_valid(low));
  EXPECT_EQ(low.metadata.at("teleport_blocks"), 2.0);
  EXPECT_EQ(low.metadata.at("depth_factor_bound"), 13.0);
  EXPECT_LE(low.depth(), 13 * c.depth());
  EXPECT_GT(low.n_cbits, 0u);

  // Classical bits are block-private: every cbit is written by exactly one
  // measurement and the indices cover 0..n_cbits-1 with no gaps.
  std::vector<unsigned> writes(low.n_cbits, 0);
  for (const Layer& l : low.layers)
    for (const Gate& g : l)
      if (const auto* m = std::get_if<MeasureGate>(&g)) {
        ASSERT_LT(m->cbit, low.n_cbits);
        ++writes[m->cbit];
      }
  for (unsigned b = 0; b < low.n_cbits; ++b) EXPECT_EQ(writes[b], 1u) << b;
}

}  // namespace
}  // namespace qflat
