#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hybridep/geometry.hpp"
#include "hybridep/prox.hpp"

namespace hybridep {

enum class StopReason { Tolerance, MaxOuter, Error };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Tolerance: return "Tolerance";
    case StopReason::MaxOuter: return "MaxOuter";
    case StopReason::Error: return "Error";
  }
  return "?";
}

struct IterationRecord {
  int n = 0;
  double step_norm = 0.0;
  double residual = 0.0;
  std::vector<double> eps;
  std::optional<double> dist_to_known;
  int degenerate_cuts = 0;
  double wall_ms = 0.0;
};

/// Per-iteration inequalities that must hold when a reference solution is known.
struct InvariantCounters {
  int fejer = 0;               // |y_{n+1} - x*|^2 <= |x_n - x*|^2 + eps_n
  int containment = 0;         // x* satisfies every constructed cut
  int monotone_distance = 0;   // |x_{n+1} - x0| >= |x_n - x0|
  int q_projection = 0;        // x_n = P_{Q_n}(x0)
  int prox_certificate = 0;    // certificate gap below tolerance
  int prox_nonconverged = 0;   // inner solver hit its cap

  int total() const {
    return fejer + containment + monotone_distance + q_projection + prox_certificate +
           prox_nonconverged;
  }
};

/// Worst observed value of each monitored quantity (slack >= 0 is good).
struct InvariantSlack {
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  double fejer = kInf;
  double containment = kInf;
  double monotone_distance = kInf;
  double q_projection_error = 0.0;
  double prox_certificate = kInf;
};

struct WorkCounters {
  long prox_solves = 0;
  long projections_onto_c = 0;
  long outer_projections = 0;
  long linesearch_trials = 0;
};

struct SolverOptions {
  /// A point of the solution set; enables invariant monitoring and dist_to_known.
  std::optional<Point> reference;
  int workers = 1;
  /// Probes per prox certificate; 0 disables certification.
  int certify_probes = 0;
  double certificate_tolerance = 1e-6;
  std::uint64_t seed = 0;
  bool record_iterates = false;
  bool record_timing = true;
  ProxOptions prox;
  double inner_tol = kDefaultInnerTol;
  int inner_max_cycles = kDefaultInnerCycles;
  double fejer_tolerance = 1e-8;
  double containment_tolerance = 1e-8;
  double monotone_tolerance = 1e-12;
  double q_projection_tolerance = 1e-10;
};

struct SolverOutcome {
  std::string algorithm;
  Point final_x;
  StopReason stop_reason = StopReason::MaxOuter;
  int iterations = 0;
  std::vector<IterationRecord> trace;
  InvariantCounters violations;
  InvariantSlack worst;
  WorkCounters work;
  /// Running sum of |x_{n+1} - x_n|^2.
  double sum_sq_steps = 0.0;
  std::string message;
  /// x_1, x_2, ... when SolverOptions::record_iterates is set.
  std::vector<Point> iterates;
};

}  // namespace hybridep
