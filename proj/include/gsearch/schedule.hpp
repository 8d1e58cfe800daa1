#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "gsearch/prior.hpp"

namespace gsearch {

// Multi-step search plan: steps 1..n-1 run m[j] Grover iterations from a
// biased initial state, step n runs the standard (pi/4)sqrt(N) iterations
// which finds the solution for certain. theta(j, i) is the hypothetical
// final angle of step j if index i were the solution; the iteration counts
// are continuous throughout the analytic pipeline (rounding is confined to
// the Monte-Carlo integer mode).
class Schedule {
 public:
  // n >= 1 total steps; m has n-1 entries (> 0), theta is (n-1) x N row-major
  // with entries in [0, pi/2]. Entries within 1e-9 past a boundary are
  // clamped; anything further out is an error.
  Schedule(int n, std::int64_t N, std::vector<double> m, std::vector<double> theta);

  int steps() const { return n_; }
  std::int64_t size() const { return N_; }
  double m_final() const { return mFinal_; }
  const std::vector<double>& m() const { return m_; }
  const std::vector<double>& theta() const { return theta_; }

  // step is 1-based in [1, n-1].
  double theta_at(int step, std::int64_t index) const {
    return theta_[static_cast<std::size_t>(step - 1) * N_ + index];
  }
  std::vector<double>& mutable_m() { return m_; }
  std::vector<double>& mutable_theta() { return theta_; }

  static double final_step_iterations(std::int64_t N);

 private:
  int n_;
  std::int64_t N_;
  double mFinal_;
  std::vector<double> m_;
  std::vector<double> theta_;
};

struct CostBreakdown {
  double E = 0.0;                 // expected total Grover iterations
  std::vector<double> perIndex;   // E_i, length N
  std::vector<double> survival;   // n x N; row j = probability steps 1..j all fail
};

struct Coefficients {
  std::vector<double> values;  // c_i = sin(theta_i / (2m+1))
  double sumSquares = 0.0;     // diagnostic: ~1 under the small-angle constraint
};

// Initial-state coefficients of step `step` (1-based) recovered from the angles.
Coefficients coefficients_from_angles(const Schedule& schedule, int step);

// sin^2(theta): probability that the step identifies the solution.
double success_probability(double theta);

// E_i = sum_j m_j * prod_{k<j} cos^2 theta_i^(k), E = sum_i p_i E_i.
CostBreakdown expected_cost(const Schedule& schedule, const Prior& prior);

// Gamma_j = sum_i theta_i^2 - 4 m_j^2 for 1-based `step`.
double constraint_residual(const Schedule& schedule, int step);

// Text form: header `n=.. N=.. mFinal=..`, one `step= m= lambda=` line per
// optimized step, then the theta matrix one row per step. Lambda values are
// carried for the run report; pass empty to write zeros.
std::string serialize_schedule(const Schedule& schedule, const std::vector<double>& lambda);
struct LoadedSchedule {
  Schedule schedule;
  std::vector<double> lambda;
};
LoadedSchedule deserialize_schedule(const std::string& text);

}  // namespace gsearch
