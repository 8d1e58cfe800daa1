#pragma once
#include <cstdint>
#include <vector>

namespace gsearch {

// Real amplitude vector; the search analysis restricts to real positive
// coefficients and both reflections preserve realness.
struct AmplitudeVector {
  std::vector<double> a;

  explicit AmplitudeVector(std::vector<double> amplitudes);
  std::int64_t size() const { return static_cast<std::int64_t>(a.size()); }
};

// Normalizes a raw vector into an AmplitudeVector.
AmplitudeVector normalized(std::vector<double> raw);

// O = 1 - 2|s><s|: flips the sign of amplitude s.
AmplitudeVector apply_oracle(const AmplitudeVector& v, std::int64_t s);

// R = 1 - 2|psi><psi| via one inner product and a rank-1 update.
AmplitudeVector apply_reflection(const AmplitudeVector& v, const AmplitudeVector& psi);

// Applies G = R O m times to psi and returns the squared amplitude at s.
// Must agree with sin^2((2m+1) arcsin psi_s).
double grover_success_probability(const AmplitudeVector& psi, std::int64_t s, int m);

// Overlap of the evolved state with the non-solution unit vector; equals
// cos((2m+1) arcsin psi_s).
double non_solution_overlap(const AmplitudeVector& psi, std::int64_t s, int m);

}  // namespace gsearch
