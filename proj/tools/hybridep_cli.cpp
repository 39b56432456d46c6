// hybridep command-line driver: solve, oracle, compare, validate.
//
// Exit codes: 0 tolerance reached, 1 iteration cap, 2 invalid input or
// parameters, 3 runtime failure.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hybridep/harness/oracle.hpp"
#include "hybridep/harness/problem_io.hpp"
#include "hybridep/harness/runner.hpp"

namespace {

using namespace hybridep;
using namespace hybridep::harness;

struct CommonArgs {
  std::string problem;
  double lambda = 0.0;
  double k = 0.0;
  double eta = 0.5;
  double tol = 1e-8;
  int max_outer = 100000;
  int max_linesearch = 100;
  std::string rule = "strict";
  int workers = 1;
  std::uint64_t seed = 0;
  int certify_probes = 0;
  bool no_timing = false;
};

void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("problem", a.problem, "Problem file (JSON)")->required();
  app->add_option("--lambda", a.lambda, "Prox step size");
  app->add_option("--k", a.k, "Cut coefficient k");
  app->add_option("--eta", a.eta, "Armijo contraction factor");
  app->add_option("--tol", a.tol, "Stopping tolerance");
  app->add_option("--max-outer", a.max_outer, "Outer iteration cap");
  app->add_option("--max-linesearch", a.max_linesearch, "Armijo trial cap");
  app->add_option("--rule", a.rule, "Parameter rule: strict or relaxed");
  app->add_option("--workers", a.workers, "Threads for the per-bifunction prox solves");
  app->add_option("--seed", a.seed, "Seed for certificate probes");
  app->add_option("--certify-probes", a.certify_probes, "Probes per prox certificate (0 = off)");
  app->add_flag("--no-timing", a.no_timing, "Write wall_ms = 0 so traces are reproducible");
}

RunSpec make_spec(const CommonArgs& a, const std::string& algorithm) {
  RunSpec s;
  s.problem_path = a.problem;
  s.algorithm = parse_algorithm(algorithm);
  s.lambda = a.lambda;
  s.k = a.k;
  s.eta = a.eta;
  s.tol = a.tol;
  s.max_outer = a.max_outer;
  s.max_linesearch = a.max_linesearch;
  s.rule = parse_rule(a.rule);
  s.workers = a.workers;
  s.seed = a.seed;
  s.certify_probes = a.certify_probes;
  s.record_timing = !a.no_timing;
  return s;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid cutting-halfspace solvers for systems of equilibrium problems"};
  app.require_subcommand(1);

  CommonArgs solve_args;
  std::string algorithm = "single", trace_path, summary_path;
  auto* solve = app.add_subcommand("solve", "Run one algorithm");
  add_common(solve, solve_args);
  solve->add_option("--algorithm", algorithm,
                    "parallel | maxsel | single | sequential | extragradient | armijo");
  solve->add_option("--trace", trace_path, "Trace CSV output path");
  solve->add_option("--summary", summary_path, "Summary JSON output path");

  std::string oracle_problem;
  auto* oracle = app.add_subcommand("oracle", "Print the reference projection of x0 onto F");
  oracle->add_option("problem", oracle_problem, "Problem file (JSON)")->required();

  CommonArgs compare_args;
  std::string algorithms = "single,extragradient,armijo", compare_output;
  auto* cmp = app.add_subcommand("compare", "Run several algorithms on one problem");
  add_common(cmp, compare_args);
  cmp->add_option("--algorithms", algorithms, "Comma-separated algorithm names");
  cmp->add_option("--output", compare_output, "Comparison report JSON path");

  std::string validate_problem;
  int samples = 1000;
  std::uint64_t validate_seed = 0;
  auto* val = app.add_subcommand("validate", "Sample the bifunction conditions");
  val->add_option("problem", validate_problem, "Problem file (JSON)")->required();
  val->add_option("--samples", samples, "Number of sampled triples");
  val->add_option("--seed", validate_seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) {
      RunSpec spec = make_spec(solve_args, algorithm);
      spec.trace_path = trace_path;
      spec.summary_path = summary_path;
      const CsepInstance inst = load_problem(spec.problem_path);
      const auto reference = try_reference(inst);
      SolverOutcome out = run(inst, spec, reference);
      if (!spec.trace_path.empty()) write_text(spec.trace_path, trace_csv(out));
      const Json summary = summary_json(out, reference);
      if (!spec.summary_path.empty()) write_text(spec.summary_path, summary.dump(2) + "\n");
      std::cout << summary.dump(2) << "\n";
      return exit_code(out);
    }
    if (oracle->parsed()) {
      const CsepInstance inst = load_problem(oracle_problem);
      const OracleResult r = reference_solution_detail(inst);
      Json j = {{"problem", inst.name},
                {"point", point_json(r.point)},
                {"method", r.method},
                {"cells_visited", r.cells_visited},
                {"residual", r.residual}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (cmp->parsed()) {
      const CsepInstance inst = load_problem(compare_args.problem);
      std::vector<RunSpec> specs;
      for (const auto& name : split(algorithms)) specs.push_back(make_spec(compare_args, name));
      if (specs.empty()) throw Error(ErrorCode::ParameterViolation, "no algorithms given");
      const auto reference = try_reference(inst);
      const ComparisonReport report = compare(inst, specs, reference);
      std::cout << report.table();
      if (!compare_output.empty()) write_text(compare_output, report.to_json().dump(2) + "\n");
      int worst = 0;
      for (const auto& r : report.rows) {
        worst = std::max(worst, r.stop_reason == StopReason::Error      ? 3
                                : r.stop_reason == StopReason::MaxOuter ? 1
                                                                        : 0);
      }
      return worst;
    }
    if (val->parsed()) {
      const CsepInstance inst = load_problem(validate_problem);
      const ValidationReport rep = validate(inst, samples, validate_seed);
      Json j;
      j["problem"] = inst.name;
      j["samples"] = rep.samples;
      j["seed"] = rep.seed;
      j["clean"] = rep.clean();
      j["notes"] = rep.notes;
      j["bifunctions"] = Json::array();
      for (const auto& b : rep.bifunctions) {
        Json e = {{"label", b.label},
                  {"max_abs_diagonal", b.max_abs_diagonal},
                  {"convexity_violations", b.convexity_violations},
                  {"pseudomonotonicity_violations", b.pseudomonotonicity_violations},
                  {"lipschitz_violations", b.lipschitz_violations},
                  {"worst_lipschitz_slack", b.worst_lipschitz_slack},
                  {"warnings", b.warnings}};
        if (b.subgradient_discrepancy) e["subgradient_discrepancy"] = *b.subgradient_discrepancy;
        j["bifunctions"].push_back(std::move(e));
      }
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
