#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gsearch/io.hpp"
#include "gsearch/montecarlo.hpp"
#include "gsearch/numeric.hpp"
#include "gsearch/optimizer.hpp"
#include "gsearch/prior.hpp"
#include "gsearch/report.hpp"
#include "gsearch/schedule.hpp"
#include "gsearch/statevector.hpp"

namespace {

using namespace gsearch;

Prior load_prior(const std::string& dist, std::int64_t size, std::uint64_t permuteSeed,
                 bool hasPermuteSeed) {
  DistributionSpec spec = parse_distribution(dist, size);
  if (hasPermuteSeed) spec.permutationSeed = permuteSeed;
  return discretize(spec);
}

double max_of(const std::vector<double>& xs) {
  double worst = 0.0;
  for (double x : xs) worst = std::max(worst, x);
  return worst;
}

std::string run_report(const OptimizerState& state, const Prior& prior) {
  const std::int64_t N = state.schedule.size();
  const double sigma = sorted_index_stddev(prior);
  std::string out;
  out += std::string("converged=") + (state.converged ? "true" : "false") + "\n";
  out += "outer_iterations=" + std::to_string(state.outerIterations) + "\n";
  out += "polish_iterations=" + std::to_string(state.polishIterations) + "\n";
  out += "E=" + format_double(state.E) + "\n";
  out += "E_over_sqrtN=" + format_double(state.E / std::sqrt(static_cast<double>(N))) + "\n";
  out += "E_over_sqrt_sigma=" + format_double(state.E / std::sqrt(sigma)) + "\n";
  out += "improvement_percent=" + format_double(improvement(state.E, N)) + "\n";
  for (int j = 0; j < state.schedule.steps() - 1; ++j) {
    out += "step=" + std::to_string(j + 1) + " m=" + format_double(state.schedule.m()[j]) +
           " lambda=" + format_double(state.lambda[j]) + "\n";
  }
  out += "max_residual_eq19=" + format_double(max_of(state.eq19Residual)) + "\n";
  out += "max_residual_eq20=" + format_double(max_of(state.eq20Residual)) + "\n";
  out += "max_residual_eq21=" + format_double(max_of(state.eq21Residual)) + "\n";
  if (state.smallAngleWarning) {
    out += "warning=prior mass is concentrated (max p > 0.1); the small-angle "
           "constraint behind the optimality system is unreliable here\n";
  }
  return out;
}

std::vector<DistributionSpec> table1_specs(std::int64_t N) {
  std::vector<DistributionSpec> specs;
  specs.push_back(parse_distribution("uniform", N));
  for (int n = 1; n <= 5; ++n) {
    specs.push_back(parse_distribution("power:" + std::to_string(n), N));
  }
  specs.push_back(parse_distribution("exp:30", N));
  specs.push_back(parse_distribution("hnorm:18", N));
  return specs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-optimal multi-step quantum search schedules for priors"};
  app.require_subcommand(1);

  std::string dist = "uniform";
  std::int64_t size = 1000000;
  int steps = 10;
  double tol = 1e-6;
  std::string outPath, planPath, tablePath;
  std::uint64_t permuteSeed = 0;
  double lambdaInit = 0.0;

  auto* cmdOptimize = app.add_subcommand("optimize", "solve for the optimal schedule");
  cmdOptimize->add_option("--dist", dist, "uniform | power:<n> | exp:<c> | hnorm:<c> | custom:<path>");
  cmdOptimize->add_option("--size", size, "search-set size N");
  cmdOptimize->add_option("--steps", steps, "total steps n including the final one");
  cmdOptimize->add_option("--tol", tol, "halt tolerance on E");
  cmdOptimize->add_option("--out", outPath, "schedule output path")->required();
  auto* optSeed = cmdOptimize->add_option("--permute-seed", permuteSeed, "permute the prior");
  cmdOptimize->add_option("--lambda-init", lambdaInit, "initial multiplier value");

  auto* cmdEvaluate = app.add_subcommand("evaluate", "evaluate a schedule against a prior");
  cmdEvaluate->add_option("--plan", planPath)->required();
  cmdEvaluate->add_option("--dist", dist);
  cmdEvaluate->add_option("--size", size);
  auto* evalSeed = cmdEvaluate->add_option("--permute-seed", permuteSeed);

  std::int64_t trials = 100000;
  std::uint64_t seed = 1;
  std::string mode = "relaxed";
  auto* cmdSimulate = app.add_subcommand("simulate", "Monte-Carlo check of a schedule");
  cmdSimulate->add_option("--plan", planPath)->required();
  cmdSimulate->add_option("--dist", dist);
  cmdSimulate->add_option("--size", size);
  cmdSimulate->add_option("--trials", trials);
  cmdSimulate->add_option("--seed", seed);
  cmdSimulate->add_option("--mode", mode)->check(CLI::IsMember({"relaxed", "integer"}));
  auto* simSeed = cmdSimulate->add_option("--permute-seed", permuteSeed);

  std::int64_t svSize = 256;
  double bias = 0.0;
  int iters = 1;
  std::int64_t solution = 0;
  auto* cmdCheck = app.add_subcommand("check-statevector",
                                      "exact small-N rotation-picture check");
  cmdCheck->add_option("--size", svSize);
  cmdCheck->add_option("--bias", bias, "amplitude at the solution index (0: uniform)");
  cmdCheck->add_option("--iters", iters);
  cmdCheck->add_option("--solution", solution);

  bool withPermuted = false;
  auto* cmdTable = app.add_subcommand("table1", "reproduce the benchmark table");
  cmdTable->add_option("--size", size);
  cmdTable->add_option("--steps", steps);
  cmdTable->add_option("--tol", tol);
  cmdTable->add_option("--out", outPath)->required();
  cmdTable->add_flag("--with-permuted", withPermuted, "add permuted-prior rows");
  cmdTable->add_option("--seed", seed, "permutation seed for --with-permuted");

  auto* cmdFit = app.add_subcommand("fit", "origin-constrained fit of E against sqrt(sigma)");
  cmdFit->add_option("--table", tablePath)->required();
  cmdFit->add_option("--out", outPath)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmdOptimize->parsed()) {
      const Prior prior = load_prior(dist, size, permuteSeed, optSeed->count() > 0);
      OptimizerConfig cfg;
      cfg.steps = steps;
      cfg.tolE = tol;
      cfg.lambdaInit = lambdaInit;
      const OptimizerState state = optimize(prior, cfg);
      write_text_file(outPath, serialize_schedule(state.schedule, state.lambda));
      std::cout << run_report(state, prior);
      return state.converged ? 0 : 1;
    }
    if (cmdEvaluate->parsed()) {
      const Prior prior = load_prior(dist, size, permuteSeed, evalSeed->count() > 0);
      const LoadedSchedule loaded = deserialize_schedule(read_text_file(planPath));
      const CostBreakdown cost = expected_cost(loaded.schedule, prior);
      const std::int64_t N = loaded.schedule.size();
      std::cout << "E=" << format_double(cost.E) << "\n"
                << "E_over_sqrtN="
                << format_double(cost.E / std::sqrt(static_cast<double>(N))) << "\n"
                << "E_over_sqrt_sigma="
                << format_double(cost.E / std::sqrt(sorted_index_stddev(prior))) << "\n"
                << "improvement_percent=" << format_double(improvement(cost.E, N)) << "\n";
      return 0;
    }
    if (cmdSimulate->parsed()) {
      const Prior prior = load_prior(dist, size, permuteSeed, simSeed->count() > 0);
      const LoadedSchedule loaded = deserialize_schedule(read_text_file(planPath));
      const SimulationMode simMode =
          mode == "relaxed" ? SimulationMode::Relaxed : SimulationMode::Integer;
      const SimulationReport report = simulate(loaded.schedule, prior, trials, seed, simMode);
      std::cout << format_report(report);
      return 0;
    }
    if (cmdCheck->parsed()) {
      std::vector<double> raw(static_cast<std::size_t>(svSize), 1.0);
      if (bias > 0.0) {
        const double rest = std::sqrt((1.0 - bias * bias) / static_cast<double>(svSize - 1));
        std::fill(raw.begin(), raw.end(), rest);
        raw[solution] = bias;
      }
      const AmplitudeVector psi = normalized(std::move(raw));
      const double evolved = grover_success_probability(psi, solution, iters);
      const double closed = sqr(std::sin((2.0 * iters + 1.0) * std::asin(psi.a[solution])));
      const double diff = std::abs(evolved - closed);
      std::cout << "evolved=" << format_double(evolved) << "\n"
                << "closed_form=" << format_double(closed) << "\n"
                << "abs_difference=" << format_double(diff) << "\n"
                << (diff < 1e-10 ? "PASS" : "FAIL") << "\n";
      return diff < 1e-10 ? 0 : 1;
    }
    if (cmdTable->parsed()) {
      std::vector<DistributionSpec> specs = table1_specs(size);
      if (withPermuted) {
        const std::size_t ordered = specs.size();
        for (std::size_t k = 0; k < ordered; ++k) {
          DistributionSpec permuted = specs[k];
          permuted.permutationSeed = seed;
          specs.push_back(permuted);
        }
      }
      const auto rows = build_table(specs, size, steps, tol);
      write_text_file(outPath, table_to_tsv(rows));
      bool allConverged = true;
      for (const auto& row : rows) {
        std::cout << row.label << "\tE/sqrtN=" << format_double(row.EOverSqrtN)
                  << "\tE/sqrt(sigma)=" << format_double(row.EOverSqrtSigma)
                  << "\timprovement=" << format_double(row.improvementPercent) << "%"
                  << (row.converged ? "" : "\tNOT-CONVERGED") << "\n";
        allConverged = allConverged && row.converged;
      }
      return allConverged ? 0 : 1;
    }
    if (cmdFit->parsed()) {
      const auto rows = table_from_tsv(read_text_file(tablePath));
      const FitResult fit = fit_linear(rows);
      write_text_file(outPath, fit_to_tsv(fit, rows));
      std::cout << "coefficient=" << format_double(fit.coefficient) << " points="
                << fit.pointCount << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
