#include "gsearch/statevector.hpp"

#include <cmath>
#include <stdexcept>

#include "gsearch/numeric.hpp"

namespace gsearch {

AmplitudeVector::AmplitudeVector(std::vector<double> amplitudes) : a(std::move(amplitudes)) {
  if (a.size() < 2) throw std::invalid_argument("amplitude vector needs N >= 2");
  CompensatedSum norm;
  for (double v : a) norm.add(v * v);
  if (std::abs(norm.value() - 1.0) > 1e-12) {
    throw std::invalid_argument("amplitude vector is not normalized");
  }
}

AmplitudeVector normalized(std::vector<double> raw) {
  CompensatedSum norm;
  for (double v : raw) norm.add(v * v);
  const double scale = 1.0 / std::sqrt(norm.value());
  for (double& v : raw) v *= scale;
  return AmplitudeVector(std::move(raw));
}

AmplitudeVector apply_oracle(const AmplitudeVector& v, std::int64_t s) {
  if (s < 0 || s >= v.size()) throw std::invalid_argument("solution index out of range");
  AmplitudeVector out = v;
  out.a[s] = -out.a[s];
  return out;
}

AmplitudeVector apply_reflection(const AmplitudeVector& v, const AmplitudeVector& psi) {
  if (v.size() != psi.size()) throw std::invalid_argument("dimension mismatch");
  CompensatedSum inner;
  for (std::int64_t i = 0; i < v.size(); ++i) inner.add(psi.a[i] * v.a[i]);
  const double twoDot = 2.0 * inner.value();
  AmplitudeVector out = v;
  for (std::int64_t i = 0; i < v.size(); ++i) out.a[i] -= twoDot * psi.a[i];
  return out;
}

double grover_success_probability(const AmplitudeVector& psi, std::int64_t s, int m) {
  if (s < 0 || s >= psi.size()) throw std::invalid_argument("solution index out of range");
  if (m < 0) throw std::invalid_argument("iteration count must be >= 0");
  AmplitudeVector state = psi;
  for (int k = 0; k < m; ++k) {
    state = apply_reflection(apply_oracle(state, s), psi);
  }
  return sqr(state.a[s]);
}

double non_solution_overlap(const AmplitudeVector& psi, std::int64_t s, int m) {
  if (s < 0 || s >= psi.size()) throw std::invalid_argument("solution index out of range");
  AmplitudeVector state = psi;
  for (int k = 0; k < m; ++k) {
    state = apply_reflection(apply_oracle(state, s), psi);
  }
  // |ns> = (psi - c_s |s>) / sqrt(1 - c_s^2)
  const double cs = psi.a[s];
  CompensatedSum inner;
  for (std::int64_t i = 0; i < psi.size(); ++i) {
    if (i != s) inner.add(psi.a[i] * state.a[i]);
  }
  return inner.value() / std::sqrt(1.0 - cs * cs);
}

}  // namespace gsearch
