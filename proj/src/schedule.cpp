#include "gsearch/schedule.hpp"

#include <cmath>
#include <stdexcept>

#include "gsearch/io.hpp"
#include "gsearch/numeric.hpp"

namespace gsearch {

double Schedule::final_step_iterations(std::int64_t N) {
  return 0.25 * kPi * std::sqrt(static_cast<double>(N));
}

Schedule::Schedule(int n, std::int64_t N, std::vector<double> m, std::vector<double> theta)
    : n_(n), N_(N), mFinal_(final_step_iterations(N)), m_(std::move(m)), theta_(std::move(theta)) {
  if (n_ < 1) throw std::invalid_argument("schedule needs n >= 1");
  if (N_ < 2) throw std::invalid_argument("schedule needs N >= 2");
  const std::size_t opt = static_cast<std::size_t>(n_ - 1);
  if (m_.size() != opt) throw std::invalid_argument("m must have n-1 entries");
  if (theta_.size() != opt * static_cast<std::size_t>(N_)) {
    throw std::invalid_argument("theta must be (n-1) x N");
  }
  for (double mj : m_) {
    if (!(mj > 0.0) || !std::isfinite(mj)) throw std::invalid_argument("m entries must be positive");
  }
  constexpr double slack = 1e-9;
  for (double& t : theta_) {
    if (!std::isfinite(t) || t < -slack || t > kHalfPi + slack) {
      throw std::invalid_argument("theta entries must lie in [0, pi/2]");
    }
    if (t < 0.0) t = 0.0;
    if (t > kHalfPi) t = kHalfPi;
  }
}

Coefficients coefficients_from_angles(const Schedule& schedule, int step) {
  if (step < 1 || step > schedule.steps() - 1) throw std::invalid_argument("step out of range");
  const std::int64_t N = schedule.size();
  const double denom = 2.0 * schedule.m()[step - 1] + 1.0;
  Coefficients out;
  out.values.resize(static_cast<std::size_t>(N));
  CompensatedSum norm;
  for (std::int64_t i = 0; i < N; ++i) {
    const double c = std::sin(schedule.theta_at(step, i) / denom);
    out.values[i] = c;
    norm.add(c * c);
  }
  out.sumSquares = norm.value();
  return out;
}

double success_probability(double theta) { return sqr(std::sin(theta)); }

CostBreakdown expected_cost(const Schedule& schedule, const Prior& prior) {
  const std::int64_t N = schedule.size();
  if (prior.size() != N) throw std::invalid_argument("prior size does not match schedule");
  const int n = schedule.steps();
  const auto& p = prior.p();
  const auto& theta = schedule.theta();

  CostBreakdown out;
  out.perIndex.assign(static_cast<std::size_t>(N), 0.0);
  out.survival.assign(static_cast<std::size_t>(n) * N, 1.0);

  CompensatedSum total;
  for (std::int64_t i = 0; i < N; ++i) {
    double w = 1.0;  // survival through steps processed so far
    double cost = 0.0;
    for (int j = 0; j < n - 1; ++j) {
      cost += schedule.m()[j] * w;
      const double c = std::cos(theta[static_cast<std::size_t>(j) * N + i]);
      w *= c * c;
      out.survival[static_cast<std::size_t>(j + 1) * N + i] = w;
    }
    cost += schedule.m_final() * w;
    out.perIndex[i] = cost;
    total.add(p[i] * cost);
  }
  out.E = total.value();
  return out;
}

double constraint_residual(const Schedule& schedule, int step) {
  if (step < 1 || step > schedule.steps() - 1) throw std::invalid_argument("step out of range");
  const std::int64_t N = schedule.size();
  CompensatedSum acc;
  for (std::int64_t i = 0; i < N; ++i) acc.add(sqr(schedule.theta_at(step, i)));
  return acc.value() - 4.0 * sqr(schedule.m()[step - 1]);
}

std::string serialize_schedule(const Schedule& schedule, const std::vector<double>& lambda) {
  const int n = schedule.steps();
  std::string out = "n=" + std::to_string(n) + " N=" + std::to_string(schedule.size()) +
                    " mFinal=" + format_double(schedule.m_final()) + "\n";
  for (int j = 0; j < n - 1; ++j) {
    const double lam = j < static_cast<int>(lambda.size()) ? lambda[j] : 0.0;
    out += "step=" + std::to_string(j + 1) + " m=" + format_double(schedule.m()[j]) +
           " lambda=" + format_double(lam) + "\n";
  }
  out += "theta\n";
  const std::int64_t N = schedule.size();
  for (int j = 0; j < n - 1; ++j) {
    for (std::int64_t i = 0; i < N; ++i) {
      if (i) out += ' ';
      out += format_double(schedule.theta()[static_cast<std::size_t>(j) * N + i]);
    }
    out += '\n';
  }
  return out;
}

LoadedSchedule deserialize_schedule(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw std::invalid_argument("empty schedule file");
  int n = 0;
  std::int64_t N = 0;
  double mFinal = -1.0;
  for (auto field : split_fields(lines[0], ' ')) {
    if (field.rfind("n=", 0) == 0) n = static_cast<int>(parse_int(field.substr(2)));
    else if (field.rfind("N=", 0) == 0) N = parse_int(field.substr(2));
    else if (field.rfind("mFinal=", 0) == 0) mFinal = parse_double(field.substr(7));
  }
  if (n < 1 || N < 2) throw std::invalid_argument("bad schedule header");
  if (mFinal != Schedule::final_step_iterations(N)) {
    throw std::invalid_argument("schedule mFinal does not match (pi/4)sqrt(N)");
  }
  std::vector<double> m(static_cast<std::size_t>(n - 1), 0.0);
  std::vector<double> lambda(static_cast<std::size_t>(n - 1), 0.0);
  std::size_t row = 1;
  for (int j = 0; j < n - 1; ++j, ++row) {
    if (row >= lines.size()) throw std::invalid_argument("truncated schedule file");
    for (auto field : split_fields(lines[row], ' ')) {
      if (field.rfind("m=", 0) == 0) m[j] = parse_double(field.substr(2));
      else if (field.rfind("lambda=", 0) == 0) lambda[j] = parse_double(field.substr(7));
    }
  }
  if (row >= lines.size() || lines[row] != "theta") {
    throw std::invalid_argument("schedule file missing theta block");
  }
  ++row;
  std::vector<double> theta;
  theta.reserve(static_cast<std::size_t>(n - 1) * N);
  for (int j = 0; j < n - 1; ++j, ++row) {
    if (row >= lines.size()) throw std::invalid_argument("truncated theta block");
    const auto fields = split_fields(lines[row], ' ');
    if (static_cast<std::int64_t>(fields.size()) != N) {
      throw std::invalid_argument("theta row has wrong length");
    }
    for (auto f : fields) theta.push_back(parse_double(f));
  }
  return LoadedSchedule{Schedule(n, N, std::move(m), std::move(theta)), std::move(lambda)};
}

}  // namespace gsearch
