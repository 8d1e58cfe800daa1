#include "gsearch/report.hpp"

#include <cmath>
#include <stdexcept>

#include "gsearch/io.hpp"
#include "gsearch/numeric.hpp"

namespace gsearch {

double improvement(double E, std::int64_t N) {
  if (!(E > 0.0)) throw std::invalid_argument("E must be positive");
  return 100.0 * (1.0 - E / Schedule::final_step_iterations(N));
}

std::vector<TableRow> build_table(const std::vector<DistributionSpec>& configs,
                                  std::int64_t N, int steps, double tolE) {
  if (configs.empty()) throw std::invalid_argument("no distributions given");
  std::vector<TableRow> rows;
  rows.reserve(configs.size());
  for (DistributionSpec spec : configs) {
    spec.size = N;
    const Prior prior = discretize(spec);
    OptimizerConfig cfg;
    cfg.steps = steps;
    cfg.tolE = tolE;
    const OptimizerState state = optimize(prior, cfg);
    TableRow row;
    row.label = prior.label();
    row.E = state.E;
    row.sigma = sorted_index_stddev(prior);
    row.EOverSqrtN = state.E / std::sqrt(static_cast<double>(N));
    row.EOverSqrtSigma = state.E / std::sqrt(row.sigma);
    row.improvementPercent = improvement(state.E, N);
    row.converged = state.converged;
    rows.push_back(std::move(row));
  }
  return rows;
}

FitResult fit_linear(const std::vector<TableRow>& rows) {
  if (rows.size() < 2) throw std::invalid_argument("fit needs at least 2 rows");
  CompensatedSum num, den;
  for (const auto& row : rows) {
    num.add(row.E * std::sqrt(row.sigma));
    den.add(row.sigma);
  }
  FitResult fit;
  fit.coefficient = num.value() / den.value();
  fit.pointCount = static_cast<int>(rows.size());
  fit.residuals.reserve(rows.size());
  for (const auto& row : rows) {
    fit.residuals.push_back(row.E - fit.coefficient * std::sqrt(row.sigma));
  }
  return fit;
}

namespace {
constexpr const char* kTableHeader =
    "label\tE\tE_over_sqrtN\tE_over_sqrt_sigma\timprovement_percent\tsigma\tconverged";
}

std::string table_to_tsv(const std::vector<TableRow>& rows) {
  std::string out = kTableHeader;
  out += '\n';
  for (const auto& row : rows) {
    out += row.label;
    out += '\t';
    out += format_double(row.E);
    out += '\t';
    out += format_double(row.EOverSqrtN);
    out += '\t';
    out += format_double(row.EOverSqrtSigma);
    out += '\t';
    out += format_double(row.improvementPercent);
    out += '\t';
    out += format_double(row.sigma);
    out += '\t';
    out += row.converged ? "true" : "false";
    out += '\n';
  }
  return out;
}

std::vector<TableRow> table_from_tsv(const std::string& text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0] != kTableHeader) {
    throw std::invalid_argument("table file has an unexpected header");
  }
  std::vector<TableRow> rows;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    const auto f = split_fields(lines[k], '\t');
    if (f.size() != 7) throw std::invalid_argument("table row has wrong field count");
    TableRow row;
    row.label = std::string(f[0]);
    row.E = parse_double(f[1]);
    row.EOverSqrtN = parse_double(f[2]);
    row.EOverSqrtSigma = parse_double(f[3]);
    row.improvementPercent = parse_double(f[4]);
    row.sigma = parse_double(f[5]);
    row.converged = f[6] == "true";
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string fit_to_tsv(const FitResult& fit, const std::vector<TableRow>& rows) {
  std::string out = "coefficient\t" + format_double(fit.coefficient) + "\n";
  out += "points\t" + std::to_string(fit.pointCount) + "\n";
  out += "label\tsqrt_sigma\tE\tE_over_sqrt_sigma\tresidual\n";
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& row = rows[k];
    out += row.label;
    out += '\t';
    out += format_double(std::sqrt(row.sigma));
    out += '\t';
    out += format_double(row.E);
    out += '\t';
    out += format_double(row.EOverSqrtSigma);
    out += '\t';
    out += format_double(fit.residuals[k]);
    out += '\n';
  }
  return out;
}

}  // namespace gsearch
