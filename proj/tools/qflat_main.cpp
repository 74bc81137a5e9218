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

// qflat command-line front end.
//
//   build        sample one circuit draw from an ensemble and write it as JSON
//   lower        rewrite a circuit file into another gate model
//   verify       run a verification suite against an ensemble or circuit file
//   distinguish  run the distinguisher library against two ensembles
//   info         summarize an ensemble spec or circuit file
//
// Human summaries go to standard output and machine reports to --out; when no
// --out is given the JSON itself goes to standard output and the summary is
// suppressed, so the two formats never interleave.  Reports carry no
// timestamps and every estimator is a pure function of its seed, so identical
// flags produce byte-identical report JSON.
//
// Exit codes: 0 all verdicts pass, 1 verification failure, 2 usage or input
// error, 3 resource cap exceeded.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qflat/circuit.hpp"
#include "qflat/clifford.hpp"
#include "qflat/ensembles.hpp"
#include "qflat/linalg.hpp"
#include "qflat/rng.hpp"
#include "qflat/simulator.hpp"
#include "qflat/teleport.hpp"
#include "qflat/verification.hpp"

namespace qflat {
namespace cli {

using nlohmann::json;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCap = 3;

// Root for all check seeds, so command-level streams never collide with the
// library's internal derivation paths.
constexpr std::uint64_t kCliTag = 0x71636c69;  // "qcli"

// Dense estimators (frame potentials, distinguishers, implementation error)
// materialize 2^n x 2^n matrices; past this width only structural commands
// (build, lower, info) make sense.
constexpr unsigned kDenseCap = 10;

// --- Targets ---------------------------------------------------------------------

// An ensemble identity as the CLI sees it: the spec plus the glue patch fill
// kind.  The spec-level samplers pin glued/pru patches to CPFC; a non-default
// patch kind routes through the glue planner directly.
struct Target {
  EnsembleSpec spec;
  std::string patch_kind = "cpfc";
};

inline bool uses_custom_patches(const Target& t) {
  return t.spec.kind == EnsembleKind::kGlued && t.patch_kind != "cpfc";
}

inline GluePlan custom_glue_plan(const Target& t, std::uint64_t seed) {
  EnsembleSpec patch_spec;
  patch_spec.kind = ensemble_kind_from_name(t.patch_kind);
  patch_spec.t = t.spec.t;
  patch_spec.source = t.spec.source;
  return glue_plan(patch_spec, t.spec.n, t.spec.patch, seed);
}

inline void check_target(const Target& t) {
  if (t.spec.n == 0) throw std::invalid_argument("--n must be at least 1");
  if (t.spec.kind == EnsembleKind::kCpfc && t.spec.n % 2 != 0)
    throw std::invalid_argument("n must be even for the cpfc ensemble");
  if (t.patch_kind != "cpfc" && t.spec.kind != EnsembleKind::kGlued)
    throw std::invalid_argument(
        "--patch-kind applies to the glued ensemble only");
}

inline Circuit target_circuit(const Target& t, std::uint64_t seed) {
  if (uses_custom_patches(t)) return glued_circuit(custom_glue_plan(t, seed));
  return ensemble_circuit_sample(t.spec, seed);
}

inline MatC target_dense(const Target& t, std::uint64_t seed) {
  if (uses_custom_patches(t)) return glued_dense(custom_glue_plan(t, seed));
  return ensemble_dense_sample(t.spec, seed);
}

inline json target_json(const Target& t) {
  return json{{"spec", t.spec}, {"patch_kind", t.patch_kind}};
}

inline std::string target_label(const Target& t) {
  std::string s = ensemble_kind_name(t.spec.kind);
  if (uses_custom_patches(t)) s += "[" + t.patch_kind + "]";
  return s;
}

// --- Clifford folding ------------------------------------------------------------

// Fold a synthesized Clifford circuit into a tableau.  Recognizes the gate
// alphabet the samplers emit: H/S/Sdg/X/Z (and the combined X*Z the Pauli
// sampler merges into one matrix), CNOTs, and fanout fans.  Throws on any
// other content, which is how non-Clifford draws are rejected.
inline CliffordTableau fold_clifford_circuit(const Circuit& c) {
  if (c.n_anc != 0)
    throw std::invalid_argument(
        "clifford folding expects an ancilla-free circuit");
  CliffordTableau t = CliffordTableau::identity(c.n_total());
  const Mat2 xz = mat2_mul(x_mat(), z_mat());
  for (const Layer& l : c.layers) {
    for (const Gate& g : l) {
      const auto* u = std::get_if<U1Gate>(&g);
      if (u != nullptr && detail::mat2_close(u->m, xz)) {
        t.apply_z(u->q);
        t.apply_x(u->q);
      } else if (const auto* f = std::get_if<FanoutGate>(&g)) {
        for (unsigned tq : f->targets) t.apply_cnot(f->source, tq);
      } else {
        detail::fold_nn_gate(t, g);
      }
    }
  }
  return t;
}

inline bool measff_supported(const Target& t) {
  switch (t.spec.kind) {
    case EnsembleKind::kClifford:
    case EnsembleKind::kPauli:
    case EnsembleKind::kSingleton:
      return true;
    case EnsembleKind::kGlued:
      return t.patch_kind == "clifford" || t.patch_kind == "pauli";
    default:
      return false;
  }
}

// --- Output plumbing -------------------------------------------------------------

// Writes the machine report; returns true when a human summary may also be
// printed (only when the JSON went to a file).
inline bool emit_json(const std::string& out, const json& j) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return false;
  }
  std::ofstream f(out);
  if (!f) throw std::invalid_argument("cannot open output file: " + out);
  f << j.dump(2) << "\n";
  return true;
}

inline json circuit_summary(const Circuit& c) {
  return json{{"model", model_name(c.model)}, {"depth", c.depth()},
              {"size", c.size()},             {"qubits", c.n_total()},
              {"ancillae", c.n_anc},          {"cbits", c.n_cbits}};
}

inline std::string summary_line(const Circuit& c) {
  std::ostringstream os;
  os << "model=" << model_name(c.model) << " depth=" << c.depth()
     << " size=" << c.size() << " qubits=" << c.n_total()
     << " ancillae=" << c.n_anc << " cbits=" << c.n_cbits;
  return os.str();
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open input file: " + path);
  json j;
  f >> j;
  return j;
}

inline bool file_exists(const std::string& path) {
  return std::ifstream(path).good();
}

// --- build -----------------------------------------------------------------------

struct BuildOptions {
  Target target;
  std::string lower = "none";
  unsigned cap = 0;  // 0 = structurally uncapped
  std::string out;
};

inline int cmd_build(const BuildOptions& o) {
  check_target(o.target);
  Circuit c;
  if (o.lower == "none" || o.lower == "qac0f") {
    c = target_circuit(o.target, o.target.spec.seed);
    if (o.lower == "qac0f" && c.model != Model::kQac0f)
      throw std::invalid_argument("sampled circuit is not in the qac0f model");
    if (o.cap > 0 && c.n_total() > o.cap)
      throw std::invalid_argument("qubit cap exceeded");
  } else {
    if (!measff_supported(o.target))
      throw std::invalid_argument(
          "measurement-feedforward lowering needs Clifford circuit content "
          "(clifford, pauli, singleton, or glued with clifford/pauli patches)");
    const CliffordTableau tab =
        fold_clifford_circuit(target_circuit(o.target, o.target.spec.seed));
    c = teleport_compile(tab, o.cap);
  }
  require_valid(c);

  json j = serialize(c);
  j["ensemble"] = target_json(o.target);
  j["ensemble"]["lower"] = o.lower;
  j["summary"] = circuit_summary(c);
  if (emit_json(o.out, j)) {
    std::cout << "built " << target_label(o.target) << " n=" << o.target.spec.n
              << " t=" << o.target.spec.t << " seed=" << o.target.spec.seed
              << " lower=" << o.lower << ": " << summary_line(c) << " -> "
              << o.out << "\n";
  }
  return kExitPass;
}

// --- lower -----------------------------------------------------------------------

struct LowerOptions {
  std::string in;
  std::string to;
  unsigned cap = 0;
  std::string out;
};

inline int cmd_lower(const LowerOptions& o) {
  const json in = read_json_file(o.in);
  const Circuit c = deserialize(in);
  require_valid(c);

  Circuit lowered;
  if (o.to == "qac0f") {
    if (c.model == Model::kMeasFF)
      throw std::invalid_argument(
          "no lowering from measurement feedforward back to qac0f");
    lowered = c;
    lowered.model = Model::kQac0f;
    if (o.cap > 0 && lowered.n_total() > o.cap)
      throw std::invalid_argument("qubit cap exceeded");
  } else if (c.model == Model::kMeasFF) {
    lowered = c;  // idempotent
  } else {
    // A circuit that folds entirely into a tableau compiles in constant
    // depth; otherwise only the fanout layers are teleported and the
    // (possibly non-Clifford) single-qubit gates pass through.
    std::optional<CliffordTableau> tab;
    try {
      tab = fold_clifford_circuit(c);
    } catch (const std::invalid_argument&) {
      tab.reset();
    }
    lowered =
        tab ? teleport_compile(*tab, o.cap) : fanout_layer_lower(c, o.cap);
  }
  require_valid(lowered);

  json j = serialize(lowered);
  if (in.contains("ensemble")) {
    j["ensemble"] = in.at("ensemble");
    j["ensemble"]["lower"] = o.to;
  }
  j["summary"] = circuit_summary(lowered);
  if (emit_json(o.out, j)) {
    std::cout << "lowered " << o.in << " to " << o.to << ": "
              << summary_line(lowered) << " -> " << o.out << "\n";
  }
  return kExitPass;
}

// --- verify ----------------------------------------------------------------------

struct VerifyOptions {
  std::string target_arg;
  Target flags;  // fills in a bare kind-name target
  std::string suite = "all";
  unsigned long samples = 2000;
  unsigned cap = 22;
  std::string out;
};

struct ResolvedTarget {
  std::optional<Target> ens;
  std::optional<Circuit> circuit;
  std::string file;  // empty for ensemble targets
};

// TARGET forms, tried in order: inline spec JSON, existing circuit file,
// ensemble kind name completed by the shared flags.
inline ResolvedTarget resolve_target(const std::string& arg,
                                     const Target& flags) {
  ResolvedTarget r;
  if (!arg.empty() && arg.front() == '{') {
    Target t;
    t.spec = json::parse(arg).get<EnsembleSpec>();
    r.ens = t;
    return r;
  }
  if (file_exists(arg)) {
    const json j = read_json_file(arg);
    r.circuit = deserialize(j);
    r.file = arg;
    if (j.contains("ensemble")) {
      Target t;
      t.spec = j.at("ensemble").at("spec").get<EnsembleSpec>();
      t.patch_kind = j.at("ensemble").value("patch_kind", "cpfc");
      r.ens = t;
    }
    return r;
  }
  Target t = flags;
  const std::string name = arg == "singleton-identity" ? "singleton" : arg;
  t.spec.kind = ensemble_kind_from_name(name);
  r.ens = t;
  return r;
}

// Collects per-check reports and the overall verdict.
struct SuiteRun {
  json reports = json::array();
  unsigned passed = 0, failed = 0, info = 0;

  void add(json r) {
    const std::string v = r.at("verdict").get<std::string>();
    if (v == "pass") {
      ++passed;
    } else if (v == "fail") {
      ++failed;
    } else {
      ++info;
    }
    reports.push_back(std::move(r));
  }
};

inline double rss(double a, double b) { return std::sqrt(a * a + b * b); }

inline std::uint64_t check_seed(std::uint64_t base, std::uint64_t suite,
                                std::uint64_t index) {
  return Rng(base).derive_path({kCliTag, suite, index}).u64();
}

// Moment suite: exact moment-operator gaps where the ensemble is enumerable,
// Monte Carlo gaps otherwise, plus a frame potential at the requested order.
inline void run_moments(const Target& tgt, unsigned long samples,
                        std::uint64_t seed, SuiteRun& run) {
  if (uses_custom_patches(tgt))
    throw std::invalid_argument(
        "moment estimators cover the built-in ensembles only");
  const EnsembleSpec& s = tgt.spec;
  const bool enumerable = s.kind == EnsembleKind::kSingleton ||
                          s.kind == EnsembleKind::kPauli ||
                          (s.kind == EnsembleKind::kClifford && s.n == 1);
  const unsigned t_max = std::min(s.t, 2u);
  for (unsigned t = 1; t <= t_max; ++t) {
    const json params{{"t", t}, {"n", s.n}};
    if (2ull * t * s.n > 10) {
      json r = report_json("moment-gap", params, 0.0, 0.0, 0.0, 0.0, "info", 0);
      r["params"]["note"] = "moment operator exceeds the dimension cap";
      run.add(std::move(r));
      continue;
    }
    if (enumerable) {
      const MomentGapReport g = moment_operator_gap(s, t, 0, 0);
      json r = report_json("moment-gap", params, g.gap, 0.0, 0.0, 0.0,
                           g.gap <= 1e-10 ? "pass" : "fail", 0);
      r["params"]["estimator"] = g.estimator;
      run.add(std::move(r));
    } else {
      run.add(with_retry(
          [&](std::uint64_t sd) {
            const MomentGapReport g = moment_operator_gap(s, t, samples, sd);
            json rep = report_json(
                "moment-gap", params, g.gap, g.noise_sigma, 0.0, 3.0,
                g.gap <= 3.0 * g.noise_sigma ? "pass" : "fail", sd);
            rep["params"]["estimator"] = g.estimator;
            rep["params"]["samples"] = g.samples;
            return rep;
          },
          check_seed(seed, 1, t)));
    }
  }
  run.add(with_retry(
      [&](std::uint64_t sd) {
        const MomentReport f = frame_potential(s, s.t, samples, sd);
        json rep = report_json(
            "frame-potential",
            json{{"t", s.t}, {"n", s.n}, {"samples", f.samples}}, f.value,
            f.se, f.reference, 3.0,
            verdict_3sigma(f.value, f.reference, rss(f.se, f.reference_se)),
            sd);
        rep["params"]["reference_stderr"] = f.reference_se;
        return rep;
      },
      check_seed(seed, 1, 100)));
}

// Distinguisher suite: the full forward-query test library against a Haar
// reference of the same width; a design should be indistinguishable on all.
inline void run_distinguishers(const Target& tgt, unsigned long samples,
                               std::uint64_t seed, SuiteRun& run) {
  if (uses_custom_patches(tgt))
    throw std::invalid_argument(
        "distinguisher estimators cover the built-in ensembles only");
  if (tgt.spec.n > kDenseCap)
    throw std::invalid_argument("distinguisher suite dense-sampling cap");
  EnsembleSpec haar;
  haar.kind = EnsembleKind::kHaar;
  haar.n = tgt.spec.n;
  unsigned index = 0;
  for (DistTest test : all_dist_tests()) {
    run.add(with_retry(
        [&](std::uint64_t sd) {
          const DistinguisherReport d =
              distinguish(tgt.spec, haar, test, false, samples, sd);
          return report_json(
              "distinguish-" + d.test,
              json{{"n", tgt.spec.n},
                   {"mode", d.mode},
                   {"value_a", d.value_a},
                   {"stderr_a", d.se_a},
                   {"value_b", d.value_b},
                   {"stderr_b", d.se_b},
                   {"samples", d.samples}},
              d.advantage, d.se, 0.0, 3.0,
              d.verdict == "indistinguishable" ? "pass" : "fail", sd);
        },
        check_seed(seed, 2, index)));
    ++index;
  }
}

// Implementation suite: a circuit draw must implement its dense reference.
// Unitary circuits are checked with the implementation-error functional;
// measurement-feedforward artifacts are checked branch by branch through the
// teleport plan, plus an exact match against the canonical compilation.
inline void run_implementation(const ResolvedTarget& target,
                               std::uint64_t seed, unsigned cap,
                               SuiteRun& run) {
  if (!target.ens.has_value()) {
    // No ensemble identity: structural validation is all that can be checked.
    require_valid(*target.circuit);
    run.add(report_json("validate", json{{"file", target.file}}, 0.0, 0.0, 0.0,
                        0.0, "pass", 0));
    run.add(report_json("implementation",
                        json{{"note", "no embedded ensemble"}}, 0.0, 0.0, 0.0,
                        0.0, "info", 0));
    return;
  }
  const Target& tgt = *target.ens;
  if (tgt.spec.kind == EnsembleKind::kHaar) {
    run.add(report_json("implementation",
                        json{{"note", "haar ensemble has no circuit form"}},
                        0.0, 0.0, 0.0, 0.0, "info", 0));
    return;
  }
  if (tgt.spec.n > kDenseCap)
    throw std::invalid_argument("implementation suite dense-reference cap");

  const bool measff =
      target.circuit.has_value() && target.circuit->model == Model::kMeasFF;
  if (!measff) {
    const Circuit c = target.circuit.has_value()
                          ? *target.circuit
                          : target_circuit(tgt, tgt.spec.seed);
    require_valid(c);
    SimOptions opts;
    opts.qubit_cap = cap;
    const double eps = impl_error(c, target_dense(tgt, tgt.spec.seed), opts);
    run.add(report_json(
        "implementation-error",
        json{{"n", tgt.spec.n}, {"model", model_name(c.model)}}, eps, 0.0, 0.0,
        0.0, eps <= 1e-10 ? "pass" : "fail", 0));
    return;
  }

  // Measurement-feedforward artifact: rebuild the tableau from the recorded
  // ensemble draw, check the file is its canonical compilation, and verify
  // the plan boundary by boundary on random inputs.
  require_valid(*target.circuit);
  run.add(report_json("validate", json{{"file", target.file}}, 0.0, 0.0, 0.0,
                      0.0, "pass", 0));
  const CliffordTableau tab =
      fold_clifford_circuit(target_circuit(tgt, tgt.spec.seed));
  const bool artifact_match = teleport_compile(tab) == *target.circuit;
  run.add(report_json("artifact-match", json{{"file", target.file}},
                      artifact_match ? 0.0 : 1.0, 0.0, 0.0, 0.0,
                      artifact_match ? "pass" : "fail", 0));
  const MatC ref = clifford_dense(tab);
  const std::uint64_t sd = check_seed(seed, 3, 0);
  Rng rng(sd);
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    const VecC psi = haar_state(1ull << tgt.spec.n, rng);
    worst = std::max(worst, teleport_branch_deviation(tab, ref, psi));
  }
  run.add(report_json("teleport-branches",
                      json{{"n", tgt.spec.n}, {"inputs", 3}}, worst, 0.0, 0.0,
                      0.0, worst <= 1e-10 ? "pass" : "fail", sd));
}

inline int cmd_verify(const VerifyOptions& o) {
  const ResolvedTarget target = resolve_target(o.target_arg, o.flags);
  if (target.ens.has_value()) check_target(*target.ens);
  const std::uint64_t seed = o.flags.spec.seed;
  const bool ens_suites = o.suite == "moments" || o.suite == "distinguishers";
  if (ens_suites && !target.ens.has_value())
    throw std::invalid_argument(
        "the " + o.suite +
        " suite needs an ensemble spec (a kind name, an inline spec, or a "
        "circuit file with an embedded ensemble)");

  SuiteRun run;
  if ((o.suite == "moments" || o.suite == "all") && target.ens.has_value())
    run_moments(*target.ens, o.samples, seed, run);
  if ((o.suite == "distinguishers" || o.suite == "all") &&
      target.ens.has_value())
    run_distinguishers(*target.ens, o.samples, seed, run);
  if (o.suite == "implementation" || o.suite == "all")
    run_implementation(target, seed, o.cap, run);

  const bool pass = run.failed == 0;
  json j{{"command", "verify"},
         {"suite", o.suite},
         {"config",
          json{{"samples", o.samples}, {"seed", seed}, {"cap", o.cap}}},
         {"reports", run.reports},
         {"passed", run.passed},
         {"failed", run.failed},
         {"informational", run.info},
         {"verdict", pass ? "pass" : "fail"}};
  if (target.ens.has_value()) j["target"] = target_json(*target.ens);
  if (!target.file.empty()) j["file"] = target.file;
  if (emit_json(o.out, j)) {
    for (const json& r : run.reports) {
      std::cout << "[" << r.at("verdict").get<std::string>() << "] "
                << r.at("test").get<std::string>()
                << " value=" << r.at("value").get<double>()
                << " stderr=" << r.at("stderr").get<double>() << "\n";
    }
    std::cout << "verify " << o.target_arg << " --suite " << o.suite << ": "
              << (pass ? "pass" : "fail") << " (" << run.passed << " passed, "
              << run.failed << " failed, " << run.info << " informational)\n";
  }
  return pass ? kExitPass : kExitFail;
}

// --- distinguish -----------------------------------------------------------------

struct DistinguishOptions {
  std::string spec_a;
  std::string spec_b;
  Target flags;
  std::vector<std::string> tests;  // empty = the full library
  unsigned long shots = 2000;
  std::string out;
};

inline Target parse_spec_arg(const std::string& arg, const Target& flags) {
  const ResolvedTarget r = resolve_target(arg, flags);
  if (!r.ens.has_value() || !r.file.empty())
    throw std::invalid_argument(
        "distinguish compares ensembles; pass kind names or inline specs");
  return *r.ens;
}

inline int cmd_distinguish(const DistinguishOptions& o) {
  const Target a = parse_spec_arg(o.spec_a, o.flags);
  const Target b = parse_spec_arg(o.spec_b, o.flags);
  check_target(a);
  check_target(b);
  if (uses_custom_patches(a) || uses_custom_patches(b))
    throw std::invalid_argument(
        "distinguisher estimators cover the built-in ensembles only");
  if (a.spec.n != b.spec.n)
    throw std::invalid_argument("register width mismatch");
  if (a.spec.n > kDenseCap)
    throw std::invalid_argument("distinguish dense-sampling cap");

  std::vector<DistTest> tests;
  for (const std::string& name : o.tests) {
    if (name == "all") {
      for (DistTest t : all_dist_tests()) tests.push_back(t);
    } else {
      tests.push_back(dist_test_from_name(name));
    }
  }
  if (tests.empty()) tests = all_dist_tests();

  const std::uint64_t seed = o.flags.spec.seed;
  json reports = json::array();
  unsigned distinguished = 0;
  unsigned index = 0;
  for (DistTest test : tests) {
    const std::uint64_t sd = check_seed(seed, 4, index++);
    const DistinguisherReport d =
        distinguish(a.spec, b.spec, test, false, o.shots, sd);
    if (d.verdict == "distinguished") ++distinguished;
    reports.push_back(report_json("distinguish-" + d.test,
                                  json{{"n", a.spec.n},
                                       {"mode", d.mode},
                                       {"test_verdict", d.verdict},
                                       {"value_a", d.value_a},
                                       {"stderr_a", d.se_a},
                                       {"value_b", d.value_b},
                                       {"stderr_b", d.se_b},
                                       {"threshold", d.threshold},
                                       {"samples", d.samples}},
                                  d.advantage, d.se, 0.0, 3.0, "info", sd));
  }

  const json j{{"command", "distinguish"},
               {"spec_a", target_json(a)},
               {"spec_b", target_json(b)},
               {"config", json{{"shots", o.shots}, {"seed", seed}}},
               {"reports", reports},
               {"distinguished", distinguished},
               {"tests", reports.size()}};
  if (emit_json(o.out, j)) {
    for (const json& r : reports) {
      std::cout << "["
                << r.at("params").at("test_verdict").get<std::string>()
                << "] " << r.at("test").get<std::string>() << " advantage="
                << r.at("value").get<double>() << " threshold="
                << r.at("params").at("threshold").get<double>() << "\n";
    }
    std::cout << "distinguish " << target_label(a) << " vs "
              << target_label(b) << ": " << distinguished << " of "
              << reports.size() << " tests distinguished\n";
  }
  return kExitPass;
}

// --- info ------------------------------------------------------------------------

struct InfoOptions {
  std::string target_arg;
  Target flags;
  std::string out;
};

inline int cmd_info(const InfoOptions& o) {
  const ResolvedTarget target = resolve_target(o.target_arg, o.flags);
  json j{{"command", "info"}};
  bool valid = true;
  if (target.circuit.has_value()) {
    const std::vector<std::string> errors = validate(*target.circuit);
    valid = errors.empty();
    j["file"] = target.file;
    j["summary"] = circuit_summary(*target.circuit);
    j["valid"] = valid;
    j["errors"] = errors;
    if (target.circuit->layout) {
      j["layout"] = json{{"rows", target.circuit->layout->rows},
                         {"cols", target.circuit->layout->cols}};
    }
  }
  if (target.ens.has_value()) {
    check_target(*target.ens);
    j["target"] = target_json(*target.ens);
    j["dense_dim"] = 1ull << target.ens->spec.n;
    j["circuit_form"] = target.ens->spec.kind != EnsembleKind::kHaar;
  }
  if (emit_json(o.out, j)) {
    if (target.circuit.has_value()) {
      std::cout << o.target_arg << ": " << summary_line(*target.circuit)
                << (valid ? " valid" : " INVALID") << "\n";
    } else {
      std::cout << target_label(*target.ens) << " n=" << target.ens->spec.n
                << " t=" << target.ens->spec.t
                << " seed=" << target.ens->spec.seed << "\n";
    }
  }
  return valid ? kExitPass : kExitFail;
}

// --- flag wiring -----------------------------------------------------------------

// Flags shared by every command that names an ensemble.  `source` is parsed
// as a string and converted after the parse.
struct SpecFlagState {
  std::string ensemble;
  std::string source = "twise";
};

inline void add_spec_flags(CLI::App* cmd, Target& t, SpecFlagState& s,
                           bool with_ensemble_flag) {
  if (with_ensemble_flag) {
    cmd->add_option("--ensemble", s.ensemble,
                    "Ensemble kind: haar, clifford, pauli, cpfc, glued, pru, "
                    "singleton")
        ->check(CLI::IsMember({"haar", "clifford", "pauli", "cpfc", "glued",
                               "pru", "singleton", "singleton-identity"}))
        ->required();
  }
  cmd->add_option("--n", t.spec.n, "Register width in qubits")
      ->capture_default_str();
  cmd->add_option("--t", t.spec.t,
                  "Moment order: the design target for cpfc/glued/pru "
                  "construction and the order probed by moment estimators")
      ->capture_default_str();
  cmd->add_option("--patch-size", t.spec.patch,
                  "Glue patch width (glued/pru only)")
      ->capture_default_str();
  cmd->add_option("--patch-kind", t.patch_kind,
                  "Glue patch fill for the glued ensemble: cpfc, clifford, "
                  "or pauli")
      ->check(CLI::IsMember({"cpfc", "clifford", "pauli"}))
      ->capture_default_str();
  cmd->add_option("--source", s.source,
                  "Randomness source for oracle components: twise, prf, or "
                  "table")
      ->check(CLI::IsMember({"twise", "prf", "table"}))
      ->capture_default_str();
  cmd->add_option("--seed", t.spec.seed,
                  "Seed: the ensemble draw for build, the estimator streams "
                  "for verify/distinguish")
      ->capture_default_str();
}

inline void finish_target(Target& t, const SpecFlagState& s) {
  t.spec.source = source_kind_from_name(s.source);
  if (!s.ensemble.empty()) {
    const std::string name =
        s.ensemble == "singleton-identity" ? "singleton" : s.ensemble;
    t.spec.kind = ensemble_kind_from_name(name);
  }
}

}  // namespace cli
}  // namespace qflat

int main(int argc, char** argv) {
  using namespace qflat;
  using namespace qflat::cli;

  CLI::App app{
      "qflat: constant-depth random-unitary ensembles — build circuit draws, "
      "lower them across gate models, and verify design closeness"};
  app.require_subcommand(1);

  BuildOptions build;
  SpecFlagState build_flags;
  auto* build_cmd = app.add_subcommand(
      "build", "Sample one circuit draw from an ensemble and write it as JSON");
  add_spec_flags(build_cmd, build.target, build_flags, true);
  build_cmd->get_option("--n")->required();
  build_cmd->add_option("--lower", build.lower,
                        "Gate model of the written circuit: none (as "
                        "sampled), qac0f, or measff")
      ->check(CLI::IsMember({"none", "qac0f", "measff"}))
      ->capture_default_str();
  build_cmd->add_option("--cap", build.cap,
                        "Qubit cap for the built circuit (0 = uncapped)")
      ->capture_default_str();
  build_cmd->add_option("--out", build.out,
                        "Write circuit JSON here (default: standard output)");

  LowerOptions lower;
  auto* lower_cmd = app.add_subcommand(
      "lower", "Rewrite a circuit file into another gate model");
  lower_cmd->add_option("file", lower.in, "Circuit JSON file")->required();
  lower_cmd->add_option("--to", lower.to, "Target gate model: qac0f or measff")
      ->check(CLI::IsMember({"qac0f", "measff"}))
      ->required();
  lower_cmd->add_option("--cap", lower.cap,
                        "Qubit cap for the lowered circuit (0 = uncapped)")
      ->capture_default_str();
  lower_cmd->add_option("--out", lower.out,
                        "Write circuit JSON here (default: standard output)");

  VerifyOptions verify;
  verify.flags.spec.t = 2;
  SpecFlagState verify_flags;
  auto* verify_cmd = app.add_subcommand(
      "verify",
      "Run a verification suite against an ensemble or circuit file; exits 0 "
      "only when every verdict passes");
  verify_cmd->add_option("target", verify.target_arg,
                         "Ensemble kind name, inline spec JSON, or circuit "
                         "JSON file")
      ->required();
  add_spec_flags(verify_cmd, verify.flags, verify_flags, false);
  verify_cmd->add_option("--suite", verify.suite,
                         "Checks to run: moments, distinguishers, "
                         "implementation, or all")
      ->check(CLI::IsMember({"moments", "distinguishers", "implementation",
                             "all"}))
      ->capture_default_str();
  verify_cmd->add_option("--samples", verify.samples,
                         "Monte Carlo samples per statistical estimator")
      ->capture_default_str();
  verify_cmd->add_option("--cap", verify.cap,
                         "Simulation qubit cap for implementation checks")
      ->capture_default_str();
  verify_cmd->add_option("--out", verify.out,
                         "Write report JSON here (default: standard output)");

  DistinguishOptions dist;
  dist.flags.spec.t = 2;
  SpecFlagState dist_flags;
  auto* dist_cmd = app.add_subcommand(
      "distinguish",
      "Estimate distinguisher advantages between two ensembles of equal "
      "width");
  dist_cmd->add_option("spec_a", dist.spec_a,
                       "First ensemble (kind name or inline spec JSON)")
      ->required();
  dist_cmd->add_option("spec_b", dist.spec_b,
                       "Second ensemble (kind name or inline spec JSON)")
      ->required();
  add_spec_flags(dist_cmd, dist.flags, dist_flags, false);
  dist_cmd->add_option("--tests", dist.tests,
                       "Distinguisher tests to run: collision, swap, purity, "
                       "bell-mass, moment, or all")
      ->delimiter(',');
  dist_cmd->add_option("--shots", dist.shots,
                       "Sample draws per ensemble per test")
      ->capture_default_str();
  dist_cmd->add_option("--out", dist.out,
                       "Write report JSON here (default: standard output)");

  InfoOptions info;
  SpecFlagState info_flags;
  auto* info_cmd = app.add_subcommand(
      "info", "Summarize an ensemble spec or circuit file");
  info_cmd->add_option("target", info.target_arg,
                       "Ensemble kind name, inline spec JSON, or circuit "
                       "JSON file")
      ->required();
  add_spec_flags(info_cmd, info.flags, info_flags, false);
  info_cmd->add_option("--out", info.out,
                       "Write summary JSON here (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (*build_cmd) {
      finish_target(build.target, build_flags);
      return cmd_build(build);
    }
    if (*lower_cmd) return cmd_lower(lower);
    if (*verify_cmd) {
      finish_target(verify.flags, verify_flags);
      return cmd_verify(verify);
    }
    if (*dist_cmd) {
      finish_target(dist.flags, dist_flags);
      return cmd_distinguish(dist);
    }
    finish_target(info.flags, info_flags);
    return cmd_info(info);
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    std::cerr << "error: " << msg << "\n";
    return msg.find("cap") != std::string::npos ? kExitCap : kExitUsage;
  }
}
