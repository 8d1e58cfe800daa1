#pragma once
#include <cstdint>
#include <vector>

#include "gsearch/prior.hpp"
#include "gsearch/schedule.hpp"

namespace gsearch {

struct OptimizerConfig {
  int steps = 10;                // n, including the fixed final step
  double tolE = 1e-6;            // absolute halt tolerance on E per sweep
  int maxOuterIterations = 10000;
  double newtonTol = 1e-12;      // root tolerance on theta
  int newtonMaxSteps = 60;
  double lambdaInit = 0.0;       // <= 0 selects the default 1/(8 sqrt(N))
};

struct OptimizerState {
  std::vector<double> lambda;     // multipliers, one per optimized step
  Schedule schedule;
  double E = 0.0;
  double deltaE = 0.0;            // |E change| over the last iteration
  std::vector<double> eq19Residual;  // per-step relative residuals
  std::vector<double> eq20Residual;
  std::vector<double> eq21Residual;  // max over indices with theta > 0
  bool converged = false;
  bool smallAngleWarning = false;    // max p_i > 0.1: the constraint derivation is unreliable
  int outerIterations = 0;
  int polishIterations = 0;
  std::vector<double> EHistory;       // E after each outer sweep
  std::vector<double> polishEHistory; // E after each polish pass
};

// Root of (pS/2) sin(2 theta) = lambda * theta in (0, pi/2); returns 0 when
// pS <= lambda (1 + 1e-15). The root is unique because (pS/2) sin(2 theta)
// is strictly concave with slope pS at zero. Newton from the bisection
// midpoint with bisection fallback whenever an iterate leaves the bracket.
// Throws on non-convergence (cannot happen for a bracketed concave g; any
// occurrence is an internal error).
double solve_theta(double pS, double lambda, double newtonTol = 1e-12,
                   int newtonMaxSteps = 60);

// S_i^(l) = sum_{j>l} m_j prod_{k<j, k != l} cos^2 theta_i^(k), the
// fixed-final-step term included. `step` is 1-based in [1, n-1].
double downstream_weight(const Schedule& schedule, const Prior& prior, int step,
                         std::int64_t index);

// One coordinate-descent sub-step for `step` (1-based): re-solves the step's
// angles against the current multiplier, then enforces the constraint
// (m = sqrt(sum theta^2)/2) and the multiplier condition exactly.
OptimizerState sweep_step(const OptimizerState& state, const Prior& prior, int step,
                          const OptimizerConfig& config = {});

// Full solve: sweeps steps 1..n-1 until |dE| < tolE (the converged flag), then
// polishes the fixed point to parameter stationarity so the reported
// optimality residuals are limited by rounding, not by the halt rule.
OptimizerState optimize(const Prior& prior, const OptimizerConfig& config = {});

}  // namespace gsearch
