#pragma once
#include <cstdint>
#include <vector>

#include "gsearch/prior.hpp"
#include "gsearch/schedule.hpp"

namespace gsearch {

enum class SimulationMode { Relaxed, Integer };

struct SimulationReport {
  std::int64_t trials = 0;
  double meanIterations = 0.0;
  double stderrOfMean = 0.0;
  double analyticE = 0.0;
  SimulationMode mode = SimulationMode::Relaxed;
  std::uint64_t seed = 0;
};

// Samples a solution from the prior per trial and replays the schedule until
// a step succeeds. Relaxed mode accrues the continuous m and succeeds with
// sin^2 theta; integer mode rounds the iteration counts and rebuilds the
// success angle as (2 round(m) + 1) arcsin(c). Per-trial RNG substreams make
// the report independent of execution order.
SimulationReport simulate(const Schedule& schedule, const Prior& prior,
                          std::int64_t trials, std::uint64_t seed, SimulationMode mode);

// Count of trials succeeding at each step (length n, final step last).
std::vector<std::int64_t> success_step_histogram(const Schedule& schedule,
                                                 const Prior& prior, std::int64_t trials,
                                                 std::uint64_t seed);

std::string format_report(const SimulationReport& report);

}  // namespace gsearch
