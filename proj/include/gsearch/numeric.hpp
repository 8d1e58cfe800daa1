#pragma once
#include <cmath>
#include <cstddef>
#include <span>

namespace gsearch {

inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kHalfPi = kPi / 2.0;

// Compensated accumulator (double-double). Keeps ~32 significant digits, so
// index-order reductions over 1e6 terms round to the same double no matter
// how the terms are permuted. All reductions in the library go through this.
class CompensatedSum {
 public:
  void add(double x) {
    // two_sum(hi_, x)
    double s = hi_ + x;
    double bb = s - hi_;
    double err = (hi_ - (s - bb)) + (x - bb);
    hi_ = s;
    lo_ += err;
  }
  double value() const { return hi_ + lo_; }
  void reset() { hi_ = 0.0; lo_ = 0.0; }

 private:
  double hi_ = 0.0;
  double lo_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

template <typename F>
double compensated_sum_n(std::size_t n, F&& term) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(term(i));
  return acc.value();
}

inline double sqr(double x) { return x * x; }

}  // namespace gsearch
