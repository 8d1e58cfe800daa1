#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "gsearch/optimizer.hpp"
#include "gsearch/prior.hpp"

namespace gsearch {

struct TableRow {
  std::string label;
  double E = 0.0;
  double EOverSqrtN = 0.0;
  double EOverSqrtSigma = 0.0;
  double improvementPercent = 0.0;
  double sigma = 0.0;  // index stddev of the descending-sorted prior
  bool converged = false;
};

struct FitResult {
  double coefficient = 0.0;          // slope of E on sqrt(sigma) through the origin
  std::vector<double> residuals;     // E - coefficient * sqrt(sigma) per row
  int pointCount = 0;
};

// 100 (1 - E / ((pi/4) sqrt(N))).
double improvement(double E, std::int64_t N);

// Optimizes each spec at the given size and collects the derived columns.
// Non-convergence flags the row without dropping it.
std::vector<TableRow> build_table(const std::vector<DistributionSpec>& configs,
                                  std::int64_t N, int steps, double tolE);

// Origin-constrained least squares of E against sqrt(sigma):
// coefficient = sum(E sqrt(sigma)) / sum(sigma). Needs >= 2 rows.
FitResult fit_linear(const std::vector<TableRow>& rows);

std::string table_to_tsv(const std::vector<TableRow>& rows);
std::vector<TableRow> table_from_tsv(const std::string& text);
std::string fit_to_tsv(const FitResult& fit, const std::vector<TableRow>& rows);

}  // namespace gsearch
