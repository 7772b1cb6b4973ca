#include "outreg/cli.hpp"

#include <filesystem>
#include <iostream>
#include <memory>
#include <utility>

#include <CLI11.hpp>

#include "outreg/analysis.hpp"
#include "outreg/error.hpp"
#include "outreg/io.hpp"

namespace outreg {

namespace {

struct Options {
  std::string problem;
  std::string out;
  std::string mode = "classical";
  std::optional<double> eps;
  std::optional<double> rho;
  std::string csv;
  std::string study = "rho";
  std::vector<double> grid;
  std::string kind = "energy";
  int trials = 100;
  std::uint64_t seed = 0;
};

// Pi, Gamma used by the control law, plus the solver's report section.
struct Selected {
  Classification classification = Classification::kUnique;
  Eigen::MatrixXd Pi, Gamma;
  Json report;
};

Selected solve_mode(const ProblemSpec& spec, const Options& o) {
  Selected s;
  if (o.mode == "classical") {
    const ClassicalSolution r = solve_classical(spec);
    s = {r.classification, r.Pi, r.Gamma, to_json(r)};
  } else if (o.mode == "energy") {
    const EnergyOptimalSolution r = solve_energy_optimal(spec);
    s = {r.classification, r.Pi_u, r.Gamma_u, to_json(r)};
  } else if (o.mode == "error") {
    const ErrorOptimalSolution r = solve_error_optimal(spec);
    s = {r.classification, r.Pi_y, r.Gamma_y, to_json(r)};
  } else {
    const LqtSolution r = solve_lqt(spec, o.eps.value_or(spec.weights.epsilon),
                                    o.rho.value_or(spec.weights.rho));
    s = {r.classification, r.Pi, r.Gamma, to_json(r)};
  }
  s.report["mode"] = o.mode;
  return s;
}

int finish(const Json& report, const std::string& path, bool inconsistent) {
  write_json(path, report);
  return inconsistent ? kExitInconsistent : kExitOk;
}

int cmd_check(const ProblemFile& pf, const Options& o) {
  const ConditionReport c = check_conditions(pf.spec);
  Json report = report_header("check");
  report["conditions"] = to_json(c);
  report["assumptions"] = {{"stabilizable", c.stabilizable.holds},
                           {"exosystem_spectrum", c.exo_spectrum.holds},
                           {"nonresonance_over", c.nonres_over.holds},
                           {"nonresonance_under", c.nonres_under.holds},
                           {"energy_uniqueness", c.obsv_condition.holds},
                           {"detectable", c.detectable.holds}};
  return finish(report, o.out, false);
}

int cmd_solve(const ProblemFile& pf, const Options& o) {
  const Selected s = solve_mode(pf.spec, o);
  Json report = report_header("solve");
  report["solution"] = s.report;
  report["classification"] = to_string(s.classification);
  return finish(report, o.out, s.classification == Classification::kInconsistent);
}

int cmd_simulate(const ProblemFile& pf, const Options& o) {
  const ProblemSpec& spec = pf.spec;
  const Selected s = solve_mode(spec, o);
  Json report = report_header("simulate");
  report["solution"] = s.report;
  report["classification"] = to_string(s.classification);
  if (s.classification == Classification::kInconsistent) return finish(report, o.out, true);

  const FeedbackGain gain = stabilizing_gain(spec.plant);
  const ClosedLoop cl = closed_loop(spec.plant, spec.exo, spec.coupling, gain, s.Pi, s.Gamma);
  const Trajectory traj = simulate(cl, *spec.x0, *spec.exo.xbar0, pf.sim);

  std::string csv = o.csv;
  if (csv.empty()) csv = std::filesystem::path(o.out).replace_extension(".csv").string();
  write_trajectory_csv(csv, traj);

  report["gain"] = to_json(gain);
  report["sim"] = {{"t_final", pf.sim.t_final},
                   {"dt", traj.dt},
                   {"record_stride", pf.sim.record_stride},
                   {"samples", traj.samples()},
                   {"step_warning", traj.step_warning}};
  report["costs_stationary"] = to_json(finite_horizon_costs(traj, spec.weights, CostBasis::kStationary));
  report["costs_actual"] = to_json(finite_horizon_costs(traj, spec.weights, CostBasis::kActual));
  report["tracking"] = to_json(tracking_error_metrics(traj, 1e-6));
  report["trajectory_csv"] = csv;
  return finish(report, o.out, false);
}

int cmd_sweep(const ProblemFile& pf, const Options& o) {
  const ConvergenceMode mode =
      o.study == "rho" ? ConvergenceMode::kRhoToInfinity : ConvergenceMode::kEpsToZero;
  const ConvergenceReport r = convergence_study(pf.spec, mode, o.grid);
  Json report = report_header("sweep");
  report["study"] = to_json(r);
  return finish(report, o.out, false);
}

int cmd_oracle(const ProblemFile& pf, const Options& o) {
  const OptimalityKind kind = o.kind == "energy" ? OptimalityKind::kEnergy : OptimalityKind::kError;
  const OracleComparison c = compare_with_oracle(pf.spec, kind);
  Json report = report_header("oracle");
  report["kind"] = o.kind;
  report["classification"] = to_string(c.classification);
  if (c.classification == Classification::kInconsistent) return finish(report, o.out, true);

  report["oracle"] = {{"Pi", matrix_to_json(c.oracle.Pi)},
                      {"Gamma", matrix_to_json(c.oracle.Gamma)},
                      {"max_imaginary", c.oracle.max_imaginary}};
  report["solver"] = {{"Pi", matrix_to_json(c.Pi)}, {"Gamma", matrix_to_json(c.Gamma)}};
  report["comparison"] = {{"pi_difference", c.pi_difference},
                          {"gamma_difference", c.gamma_difference},
                          {"invariant_difference", c.invariant_difference},
                          {"agrees", c.agrees}};
  try {
    report["probe"] = to_json(optimality_probe(pf.spec, kind, c.Pi, c.Gamma, o.trials, o.seed));
  } catch (const ProbeFailed& e) {
    report["probe"] = {{"failed", true}, {"message", e.what()}, {"delta", e.delta()}};
    write_json(o.out, report);
    throw;
  }
  return finish(report, o.out, false);
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--problem", o.problem, "problem file")->required();
  sub->add_option("--out", o.out, "report file")->required();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Output regulation toolkit", "outreg"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  const std::vector<std::string> modes = {"classical", "energy", "error", "lqt"};
  CLI::App* check = app.add_subcommand("check", "check solvability assumptions");
  add_common(check, o);

  CLI::App* solve = app.add_subcommand("solve", "solve regulator equations");
  add_common(solve, o);
  solve->add_option("--mode", o.mode)->check(CLI::IsMember(modes));
  solve->add_option("--eps", o.eps, "input weight for lqt")->check(CLI::PositiveNumber);
  solve->add_option("--rho", o.rho, "error weight for lqt")->check(CLI::PositiveNumber);

  CLI::App* sim = app.add_subcommand("simulate", "simulate the closed loop");
  add_common(sim, o);
  sim->add_option("--mode", o.mode)->check(CLI::IsMember(modes));
  sim->add_option("--eps", o.eps)->check(CLI::PositiveNumber);
  sim->add_option("--rho", o.rho)->check(CLI::PositiveNumber);
  sim->add_option("--csv", o.csv, "trajectory table (default: report path with .csv)");

  CLI::App* sweep = app.add_subcommand("sweep", "convergence of the tracking solution");
  add_common(sweep, o);
  sweep->add_option("--study", o.study)->check(CLI::IsMember({"rho", "eps"}));
  sweep->add_option("--grid", o.grid, "comma separated values")->delimiter(',')->required();

  CLI::App* oracle = app.add_subcommand("oracle", "cross-check against the per-eigenvalue oracle");
  add_common(oracle, o);
  oracle->add_option("--kind", o.kind)->check(CLI::IsMember({"energy", "error"}));
  oracle->add_option("--trials", o.trials)->check(CLI::NonNegativeNumber);
  oracle->add_option("--seed", o.seed);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "outreg: " << e.what() << '\n' << "run 'outreg --help' for usage\n";
    return kExitUsage;
  }

  try {
    const ProblemFile pf = load_problem(o.problem);
    if (check->parsed()) return cmd_check(pf, o);
    if (solve->parsed()) return cmd_solve(pf, o);
    if (sim->parsed()) return cmd_simulate(pf, o);
    if (sweep->parsed()) return cmd_sweep(pf, o);
    return cmd_oracle(pf, o);
  } catch (const Error& e) {
    err << "outreg: " << e.what() << '\n';
    return e.code() == ErrorCode::kInconsistent ? kExitInconsistent : kExitFailure;
  } catch (const std::exception& e) {
    err << "outreg: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace outreg
