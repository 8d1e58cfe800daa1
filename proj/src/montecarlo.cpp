#include "gsearch/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gsearch/io.hpp"
#include "gsearch/numeric.hpp"
#include "gsearch/rng.hpp"

namespace gsearch {

namespace {

struct TrialTables {
  std::vector<double> cdf;        // length N+1
  std::vector<double> successP;   // (n-1) x N: per-step success probability
  std::vector<double> stepCost;   // n-1
  double finalCost = 0.0;
};

TrialTables build_tables(const Schedule& schedule, const Prior& prior, SimulationMode mode) {
  const std::int64_t N = schedule.size();
  if (prior.size() != N) throw std::invalid_argument("prior size does not match schedule");
  const int opt = schedule.steps() - 1;
  TrialTables t;
  t.cdf.resize(static_cast<std::size_t>(N) + 1);
  t.cdf[0] = 0.0;
  CompensatedSum run;
  for (std::int64_t i = 0; i < N; ++i) {
    run.add(prior.p()[i]);
    t.cdf[i + 1] = run.value();
  }
  t.cdf[N] = std::max(t.cdf[N], 1.0);

  t.successP.resize(static_cast<std::size_t>(opt) * N);
  t.stepCost.resize(opt);
  for (int j = 0; j < opt; ++j) {
    const double mj = schedule.m()[j];
    t.stepCost[j] = mode == SimulationMode::Relaxed ? mj : std::round(mj);
    for (std::int64_t i = 0; i < N; ++i) {
      double theta = schedule.theta_at(j + 1, i);
      if (mode == SimulationMode::Integer) {
        const double c = std::sin(theta / (2.0 * mj + 1.0));
        theta = (2.0 * std::round(mj) + 1.0) * std::asin(c);
      }
      t.successP[static_cast<std::size_t>(j) * N + i] = sqr(std::sin(theta));
    }
  }
  t.finalCost = mode == SimulationMode::Relaxed ? schedule.m_final()
                                                : std::ceil(schedule.m_final());
  return t;
}

std::int64_t sample_index(const TrialTables& t, double u) {
  const auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), u);
  std::int64_t idx = static_cast<std::int64_t>(it - t.cdf.begin()) - 1;
  const std::int64_t N = static_cast<std::int64_t>(t.cdf.size()) - 1;
  return std::clamp<std::int64_t>(idx, 0, N - 1);
}

}  // namespace

SimulationReport simulate(const Schedule& schedule, const Prior& prior,
                          std::int64_t trials, std::uint64_t seed, SimulationMode mode) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const TrialTables t = build_tables(schedule, prior, mode);
  const int opt = schedule.steps() - 1;
  const std::int64_t N = schedule.size();

  double mean = 0.0;
  double m2 = 0.0;  // Welford
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    Xoshiro256 rng(substream_seed(seed, static_cast<std::uint64_t>(trial)));
    const std::int64_t s = sample_index(t, rng.next_double());
    double cost = 0.0;
    bool found = false;
    for (int j = 0; j < opt && !found; ++j) {
      cost += t.stepCost[j];
      found = rng.next_double() < t.successP[static_cast<std::size_t>(j) * N + s];
    }
    if (!found) cost += t.finalCost;
    const double delta = cost - mean;
    mean += delta / static_cast<double>(trial + 1);
    m2 += delta * (cost - mean);
  }
  const double sampleVar = trials > 1 ? m2 / static_cast<double>(trials - 1) : 0.0;

  SimulationReport report;
  report.trials = trials;
  report.meanIterations = mean;
  report.stderrOfMean = std::sqrt(std::max(sampleVar, 0.0) / static_cast<double>(trials));
  report.analyticE = expected_cost(schedule, prior).E;
  report.mode = mode;
  report.seed = seed;
  return report;
}

std::vector<std::int64_t> success_step_histogram(const Schedule& schedule,
                                                 const Prior& prior, std::int64_t trials,
                                                 std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const TrialTables t = build_tables(schedule, prior, SimulationMode::Relaxed);
  const int opt = schedule.steps() - 1;
  const std::int64_t N = schedule.size();
  std::vector<std::int64_t> counts(static_cast<std::size_t>(schedule.steps()), 0);
  for (std::int64_t trial = 0; trial < trials; ++trial) {
    Xoshiro256 rng(substream_seed(seed, static_cast<std::uint64_t>(trial)));
    const std::int64_t s = sample_index(t, rng.next_double());
    int stepFound = opt;  // final step finds it when all optimized steps fail
    for (int j = 0; j < opt; ++j) {
      if (rng.next_double() < t.successP[static_cast<std::size_t>(j) * N + s]) {
        stepFound = j;
        break;
      }
    }
    ++counts[stepFound];
  }
  return counts;
}

std::string format_report(const SimulationReport& report) {
  std::string out;
  out += "trials=" + std::to_string(report.trials);
  out += " mean=" + format_double(report.meanIterations);
  out += " stderr=" + format_double(report.stderrOfMean);
  out += " analyticE=" + format_double(report.analyticE);
  out += std::string(" mode=") +
         (report.mode == SimulationMode::Relaxed ? "relaxed" : "integer");
  out += " seed=" + std::to_string(report.seed);
  out += "\n";
  return out;
}

}  // namespace gsearch
