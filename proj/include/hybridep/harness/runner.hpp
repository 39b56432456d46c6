#pragma once

// Algorithm dispatch, trace/summary emission and the cross-method comparison.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hybridep/baselines.hpp"
#include "hybridep/error.hpp"
#include "hybridep/harness/oracle.hpp"
#include "hybridep/harness/problem_io.hpp"
#include "hybridep/hybrid.hpp"
#include "hybridep/outcome.hpp"

namespace hybridep::harness {

enum class Algorithm { Parallel, MaxSel, Single, Sequential, Extragradient, Armijo };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Parallel: return "parallel";
    case Algorithm::MaxSel: return "maxsel";
    case Algorithm::Single: return "single";
    case Algorithm::Sequential: return "sequential";
    case Algorithm::Extragradient: return "extragradient";
    case Algorithm::Armijo: return "armijo";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::Parallel, Algorithm::MaxSel, Algorithm::Single,
                      Algorithm::Sequential, Algorithm::Extragradient, Algorithm::Armijo}) {
    if (name == to_string(a)) return a;
  }
  throw Error(ErrorCode::ParameterViolation, "unknown algorithm '" + name + "'");
}

inline ParamRule parse_rule(const std::string& name) {
  if (name == "strict") return ParamRule::Strict;
  if (name == "relaxed") return ParamRule::Relaxed;
  throw Error(ErrorCode::ParameterViolation, "unknown rule '" + name + "'");
}

struct RunSpec {
  std::string problem_path;
  Algorithm algorithm = Algorithm::Single;
  double lambda = 0.0;
  double k = 0.0;
  double eta = 0.5;
  double tol = 1e-8;
  int max_outer = 100000;
  int max_linesearch = 100;
  ParamRule rule = ParamRule::Strict;
  std::uint64_t seed = 0;
  int workers = 1;
  int certify_probes = 0;
  bool record_timing = true;
  std::string trace_path;
  std::string summary_path;
};

inline bool requires_single(Algorithm a) {
  return a == Algorithm::Single || a == Algorithm::Extragradient || a == Algorithm::Armijo;
}

/// Runs one algorithm on an already-loaded instance. Parameter problems throw;
/// failures during iteration are reported through the outcome.
inline SolverOutcome run(const CsepInstance& inst, const RunSpec& spec,
                         const std::optional<Point>& reference) {
  if (requires_single(spec.algorithm) && inst.size() != 1) {
    throw Error(ErrorCode::ParameterViolation,
                std::string(to_string(spec.algorithm)) + " requires exactly one bifunction, got " +
                    std::to_string(inst.size()));
  }
  SolverOptions opt;
  opt.reference = reference;
  opt.workers = spec.workers;
  opt.seed = spec.seed;
  opt.certify_probes = spec.certify_probes;
  opt.record_timing = spec.record_timing;

  switch (spec.algorithm) {
    case Algorithm::Parallel:
    case Algorithm::MaxSel:
    case Algorithm::Single:
    case Algorithm::Sequential: {
      HybridParams p{spec.lambda, spec.k, spec.tol, spec.max_outer, spec.rule};
      if (spec.algorithm == Algorithm::Parallel) return run_parallel_hybrid(inst, p, opt);
      if (spec.algorithm == Algorithm::MaxSel) return run_maxsel_hybrid(inst, p, opt);
      if (spec.algorithm == Algorithm::Single) return run_single(inst, p, opt);
      return run_sequential(inst, p, opt);
    }
    case Algorithm::Extragradient:
      return run_hybrid_extragradient(inst, {spec.lambda, spec.tol, spec.max_outer}, opt);
    case Algorithm::Armijo:
      return run_armijo_hybrid(
          inst, {spec.eta, spec.lambda, spec.max_linesearch, spec.tol, spec.max_outer}, opt);
  }
  throw Error(ErrorCode::ParameterViolation, "unknown algorithm");
}

/// Oracle value when one can be computed, otherwise empty.
inline std::optional<Point> try_reference(const CsepInstance& inst) {
  try {
    return reference_solution(inst);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::OracleUnavailable) return std::nullopt;
    throw;
  }
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline constexpr const char* kTraceHeader = "n,step_norm,residual,eps_min,eps_max,dist_to_known,wall_ms";

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trace_csv(const SolverOutcome& out) {
  std::ostringstream s;
  s << kTraceHeader << '\n';
  for (const auto& r : out.trace) {
    double lo = 0.0, hi = 0.0;
    if (!r.eps.empty()) {
      lo = *std::min_element(r.eps.begin(), r.eps.end());
      hi = *std::max_element(r.eps.begin(), r.eps.end());
    }
    s << r.n << ',' << format_number(r.step_norm) << ',' << format_number(r.residual) << ','
      << format_number(lo) << ',' << format_number(hi) << ','
      << (r.dist_to_known ? format_number(*r.dist_to_known) : std::string()) << ','
      << format_number(r.wall_ms) << '\n';
  }
  return s.str();
}

inline Json point_json(const Point& p) {
  Json a = Json::array();
  for (Index i = 0; i < p.size(); ++i) a.push_back(p[i]);
  return a;
}

inline Json summary_json(const SolverOutcome& out, const std::optional<Point>& reference) {
  Json j;
  j["algorithm"] = out.algorithm;
  j["final_x"] = point_json(out.final_x);
  j["stop_reason"] = to_string(out.stop_reason);
  j["iterations"] = out.iterations;
  j["message"] = out.message;
  j["sum_sq_steps"] = out.sum_sq_steps;
  if (!out.trace.empty()) {
    j["final_step_norm"] = out.trace.back().step_norm;
    j["final_residual"] = out.trace.back().residual;
  }
  if (reference) {
    j["reference"] = point_json(*reference);
    if (out.final_x.size() == reference->size())
      j["dist_to_reference"] = (out.final_x - *reference).norm();
  }
  const auto& v = out.violations;
  j["invariant_violations"] = {{"fejer", v.fejer},
                               {"containment", v.containment},
                               {"monotone_distance", v.monotone_distance},
                               {"q_projection", v.q_projection},
                               {"prox_certificate", v.prox_certificate},
                               {"prox_nonconverged", v.prox_nonconverged},
                               {"total", v.total()}};
  // Unmonitored slacks stay infinite and are written as null.
  const auto& w = out.worst;
  j["worst_slack"] = {{"fejer", w.fejer},
                      {"containment", w.containment},
                      {"monotone_distance", w.monotone_distance},
                      {"q_projection_error", w.q_projection_error},
                      {"prox_certificate", w.prox_certificate}};
  j["work"] = {{"prox_solves", out.work.prox_solves},
               {"projections_onto_c", out.work.projections_onto_c},
               {"outer_projections", out.work.outer_projections},
               {"linesearch_trials", out.work.linesearch_trials}};
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::ParameterViolation, "cannot write '" + path + "'");
  f << text;
}

/// Process exit code: 0 Tolerance, 1 MaxOuter, 3 runtime error.
inline int exit_code(const SolverOutcome& out) {
  switch (out.stop_reason) {
    case StopReason::Tolerance: return 0;
    case StopReason::MaxOuter: return 1;
    case StopReason::Error: return 3;
  }
  return 3;
}

/// 2 for validation failures, 3 otherwise.
inline int exit_code(const Error& e) { return is_validation_error(e.code()) ? 2 : 3; }

/// Loads the problem, runs, writes the requested outputs.
inline SolverOutcome run(const RunSpec& spec) {
  const CsepInstance inst = load_problem(spec.problem_path);
  const auto reference = try_reference(inst);
  SolverOutcome out = run(inst, spec, reference);
  if (!spec.trace_path.empty()) write_text(spec.trace_path, trace_csv(out));
  if (!spec.summary_path.empty()) write_text(spec.summary_path, summary_json(out, reference).dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct ComparisonRow {
  std::string algorithm;
  StopReason stop_reason = StopReason::MaxOuter;
  int iterations = 0;
  long prox_solves = 0;
  double prox_per_iteration = 0.0;
  long projections_onto_c = 0;
  long outer_projections = 0;
  double wall_ms = 0.0;
  std::optional<double> dist_to_reference;
  Point final_x;
  std::string message;
};

struct ComparisonReport {
  std::string problem;
  std::optional<Point> reference;
  std::vector<ComparisonRow> rows;
  /// Largest pairwise distance between final points.
  double limit_spread = 0.0;

  Json to_json() const {
    Json j;
    j["problem"] = problem;
    if (reference) j["reference"] = point_json(*reference);
    j["limit_spread"] = limit_spread;
    j["rows"] = Json::array();
    for (const auto& r : rows) {
      Json row = {{"algorithm", r.algorithm},
                  {"stop_reason", to_string(r.stop_reason)},
                  {"iterations", r.iterations},
                  {"prox_solves", r.prox_solves},
                  {"prox_per_iteration", r.prox_per_iteration},
                  {"projections_onto_c", r.projections_onto_c},
                  {"outer_projections", r.outer_projections},
                  {"wall_ms", r.wall_ms},
                  {"final_x", point_json(r.final_x)},
                  {"message", r.message}};
      if (r.dist_to_reference) row["dist_to_reference"] = *r.dist_to_reference;
      j["rows"].push_back(std::move(row));
    }
    return j;
  }

  std::string table() const {
    std::ostringstream s;
    char line[256];
    std::snprintf(line, sizeof line, "%-14s %-10s %8s %8s %9s %10s %12s %12s\n", "algorithm", "stop",
                  "iters", "prox", "prox/it", "proj_C", "wall_ms", "dist_ref");
    s << line;
    for (const auto& r : rows) {
      std::snprintf(line, sizeof line, "%-14s %-10s %8d %8ld %9.3f %10ld %12.3f %12.3e\n",
                    r.algorithm.c_str(), to_string(r.stop_reason), r.iterations, r.prox_solves,
                    r.prox_per_iteration, r.projections_onto_c, r.wall_ms,
                    r.dist_to_reference ? *r.dist_to_reference : std::nan(""));
      s << line;
    }
    return s.str();
  }
};

/// Runs every spec on the same instance, sequentially.
inline ComparisonReport compare(const CsepInstance& inst, const std::vector<RunSpec>& specs,
                                const std::optional<Point>& reference) {
  ComparisonReport report;
  report.problem = inst.name;
  report.reference = reference;
  for (const auto& spec : specs) {
    const auto started = std::chrono::steady_clock::now();
    SolverOutcome out = run(inst, spec, reference);
    ComparisonRow row;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
                      .count();
    row.algorithm = out.algorithm;
    row.stop_reason = out.stop_reason;
    row.iterations = out.iterations;
    row.prox_solves = out.work.prox_solves;
    row.prox_per_iteration =
        out.iterations > 0 ? static_cast<double>(out.work.prox_solves) / out.iterations : 0.0;
    row.projections_onto_c = out.work.projections_onto_c;
    row.outer_projections = out.work.outer_projections;
    row.final_x = out.final_x;
    row.message = out.message;
    if (reference && out.final_x.size() == reference->size())
      row.dist_to_reference = (out.final_x - *reference).norm();
    report.rows.push_back(std::move(row));
  }
  for (std::size_t a = 0; a < report.rows.size(); ++a) {
    for (std::size_t b = a + 1; b < report.rows.size(); ++b) {
      const auto& xa = report.rows[a].final_x;
      const auto& xb = report.rows[b].final_x;
      if (xa.size() == xb.size())
        report.limit_spread = std::max(report.limit_spread, (xa - xb).norm());
    }
  }
  return report;
}

}  // namespace hybridep::harness
