#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gsearch {

// Discrete prior over the search set: p[i] is the probability that index i
// is the solution. The constructor renormalizes (closed-form bin integrals
// accumulate rounding at large N) and rejects negative or non-finite entries.
class Prior {
 public:
  Prior(std::vector<double> probabilities, std::string label);

  std::int64_t size() const { return static_cast<std::int64_t>(p_.size()); }
  const std::vector<double>& p() const { return p_; }
  const std::string& label() const { return label_; }
  double max_probability() const { return maxP_; }

 private:
  std::vector<double> p_;
  std::string label_;
  double maxP_ = 0.0;
};

enum class Family { Uniform, Power, Exponential, HalfNormal, Custom };

// Family plus parameters of a continuous density on [0,1] to be binned into
// N equal intervals, optionally followed by a seeded random permutation.
struct DistributionSpec {
  Family family = Family::Uniform;
  int powerExponent = 0;    // power: f(x) = (n+1) x^n, n >= 0
  double rate = 0.0;        // exponential: f ~ exp(-c x); half-normal: f ~ exp(-c x^2); c > 0
  std::int64_t size = 0;    // N >= 2
  std::optional<std::uint64_t> permutationSeed;
  std::vector<double> customValues;  // Family::Custom only

  std::string label() const;
};

// Bins the family density: p_i = integral of f over [i/N, (i+1)/N], using the
// closed-form antiderivative of each family (power, exponential, erf-based
// half-normal), with the density truncated to [0,1] and renormalized there.
Prior discretize(const DistributionSpec& spec);

// Uniformly random permutation of p (Fisher-Yates over a seeded xoshiro256**);
// deterministic for a given seed.
Prior permute(const Prior& prior, std::uint64_t seed);

// Standard deviation of the index random variable under p.
double index_stddev(const Prior& prior);

// Same quantity after sorting p in descending order; this is the sigma that
// enters E/sqrt(sigma) and the linear fit, so permuted runs report the sigma
// of the ordered version.
double sorted_index_stddev(const Prior& prior);

// `uniform | power:<n> | exp:<c> | hnorm:<c> | custom:<path>` (size set separately).
DistributionSpec parse_distribution(const std::string& text, std::int64_t size);

// Line-oriented text: header `N=<int> label=<string>`, one probability per
// line in round-trip precision.
std::string serialize_prior(const Prior& prior);
Prior deserialize_prior(const std::string& text);

}  // namespace gsearch
