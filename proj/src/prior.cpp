#include "gsearch/prior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gsearch/io.hpp"
#include "gsearch/numeric.hpp"
#include "gsearch/rng.hpp"

namespace gsearch {

Prior::Prior(std::vector<double> probabilities, std::string label)
    : p_(std::move(probabilities)), label_(std::move(label)) {
  if (p_.size() < 2) throw std::invalid_argument("prior needs N >= 2");
  CompensatedSum total;
  for (double v : p_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("prior entries must be finite and non-negative");
    }
    total.add(v);
  }
  const double sum = total.value();
  if (!(sum > 0.0)) throw std::invalid_argument("prior must have positive mass");
  for (double& v : p_) {
    v /= sum;
    maxP_ = std::max(maxP_, v);
  }
}

std::string DistributionSpec::label() const {
  std::string base;
  switch (family) {
    case Family::Uniform: base = "uniform"; break;
    case Family::Power: base = "power:" + std::to_string(powerExponent); break;
    case Family::Exponential: base = "exp:" + format_double(rate); break;
    case Family::HalfNormal: base = "hnorm:" + format_double(rate); break;
    case Family::Custom: base = "custom"; break;
  }
  if (permutationSeed) base += "|perm=" + std::to_string(*permutationSeed);
  return base;
}

namespace {

// (i+1)^k - i^k without cancellation: sum of the binomial expansion terms,
// all non-negative.
double power_bin_mass(double i, int k) {
  double coeff = 1.0;  // C(k, r)
  double ipow = 1.0;   // i^r
  CompensatedSum acc;
  for (int r = 0; r < k; ++r) {
    acc.add(coeff * ipow);
    coeff = coeff * static_cast<double>(k - r) / static_cast<double>(r + 1);
    ipow *= i;
  }
  return acc.value();
}

std::vector<double> discretize_values(const DistributionSpec& spec) {
  const std::int64_t N = spec.size;
  std::vector<double> p(static_cast<std::size_t>(N));
  switch (spec.family) {
    case Family::Uniform: {
      std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(N));
      break;
    }
    case Family::Power: {
      if (spec.powerExponent < 0) throw std::invalid_argument("power exponent must be >= 0");
      const int k = spec.powerExponent + 1;  // antiderivative x^k
      const double scale = std::pow(static_cast<double>(N), -k);
      for (std::int64_t i = 0; i < N; ++i) {
        p[i] = power_bin_mass(static_cast<double>(i), k) * scale;
      }
      break;
    }
    case Family::Exponential: {
      const double c = spec.rate;
      if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("exponential rate must be positive");
      // p_i = e^{-c i/N} (1 - e^{-c/N}) / (1 - e^{-c})
      const double binFactor = -std::expm1(-c / static_cast<double>(N));
      const double norm = -std::expm1(-c);
      for (std::int64_t i = 0; i < N; ++i) {
        p[i] = std::exp(-c * static_cast<double>(i) / static_cast<double>(N)) * binFactor / norm;
      }
      break;
    }
    case Family::HalfNormal: {
      const double c = spec.rate;
      if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("half-normal rate must be positive");
      const double r = std::sqrt(c);
      const double norm = std::erf(r);
      double prev = 0.0;  // erf(r * i/N)
      for (std::int64_t i = 0; i < N; ++i) {
        const double next = std::erf(r * static_cast<double>(i + 1) / static_cast<double>(N));
        p[i] = (next - prev) / norm;
        prev = next;
      }
      break;
    }
    case Family::Custom: {
      if (static_cast<std::int64_t>(spec.customValues.size()) != N) {
        throw std::invalid_argument("custom values length must equal size");
      }
      p = spec.customValues;
      break;
    }
  }
  return p;
}

}  // namespace

Prior discretize(const DistributionSpec& spec) {
  if (spec.size < 2) throw std::invalid_argument("size must be >= 2");
  Prior prior(discretize_values(spec), spec.label());
  if (spec.permutationSeed) return permute(prior, *spec.permutationSeed);
  return prior;
}

Prior permute(const Prior& prior, std::uint64_t seed) {
  std::vector<double> p = prior.p();
  Xoshiro256 rng(seed);
  for (std::size_t i = p.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
    std::swap(p[i], p[j]);
  }
  std::string label = prior.label();
  if (label.find("|perm=") == std::string::npos) {
    label += "|perm=" + std::to_string(seed);
  }
  return Prior(std::move(p), std::move(label));
}

double index_stddev(const Prior& prior) {
  const auto& p = prior.p();
  CompensatedSum mean, meanSq;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = static_cast<double>(i);
    mean.add(p[i] * x);
    meanSq.add(p[i] * x * x);
  }
  const double var = meanSq.value() - sqr(mean.value());
  return var > 0.0 ? std::sqrt(var) : 0.0;
}

double sorted_index_stddev(const Prior& prior) {
  std::vector<double> sorted = prior.p();
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  return index_stddev(Prior(std::move(sorted), prior.label()));
}

DistributionSpec parse_distribution(const std::string& text, std::int64_t size) {
  DistributionSpec spec;
  spec.size = size;
  if (text == "uniform") {
    spec.family = Family::Uniform;
  } else if (text.rfind("power:", 0) == 0) {
    spec.family = Family::Power;
    spec.powerExponent = static_cast<int>(parse_int(text.substr(6)));
  } else if (text.rfind("exp:", 0) == 0) {
    spec.family = Family::Exponential;
    spec.rate = parse_double(text.substr(4));
  } else if (text.rfind("hnorm:", 0) == 0) {
    spec.family = Family::HalfNormal;
    spec.rate = parse_double(text.substr(6));
  } else if (text.rfind("custom:", 0) == 0) {
    spec.family = Family::Custom;
    const std::string body = read_text_file(text.substr(7));
    for (auto line : split_lines(body)) {
      if (line.empty() || line.rfind("N=", 0) == 0) continue;  // tolerate a prior-file header
      spec.customValues.push_back(parse_double(line));
    }
    if (size == 0) spec.size = static_cast<std::int64_t>(spec.customValues.size());
  } else {
    throw std::invalid_argument("unknown distribution: '" + text + "'");
  }
  return spec;
}

std::string serialize_prior(const Prior& prior) {
  std::string out = "N=" + std::to_string(prior.size()) + " label=" + prior.label() + "\n";
  for (double v : prior.p()) {
    out += format_double(v);
    out += '\n';
  }
  return out;
}

Prior deserialize_prior(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0].rfind("N=", 0) != 0) {
    throw std::invalid_argument("prior file missing 'N=' header");
  }
  const auto header = lines[0];
  const auto labelPos = header.find(" label=");
  if (labelPos == std::string_view::npos) {
    throw std::invalid_argument("prior file missing 'label=' in header");
  }
  const std::int64_t n = parse_int(header.substr(2, labelPos - 2));
  std::string label(header.substr(labelPos + 7));
  std::vector<double> p;
  p.reserve(static_cast<std::size_t>(n));
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    p.push_back(parse_double(lines[k]));
  }
  if (static_cast<std::int64_t>(p.size()) != n) {
    throw std::invalid_argument("prior file entry count does not match header N");
  }
  return Prior(std::move(p), std::move(label));
}

}  // namespace gsearch
