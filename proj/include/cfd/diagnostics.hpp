#pragma once

#include <vector>

namespace cfd {

// One parameter traced by several chains of equal length.
using Draws = std::vector<std::vector<double>>;

// Rank-normalised split R-hat: max of bulk and folded versions.
double split_rhat(const Draws& chains);
// Bulk ESS from rank-normalised split chains.
double ess_bulk(const Draws& chains);
// min of the ESS of the 5% and 95% quantile indicators.
double ess_tail(const Draws& chains);
// ESS of the raw split chains (Geyer initial monotone sequence).
double ess_basic(const Draws& chains);

struct ParamDiagnostics {
  double rhat = 0.0;
  double ess_bulk = 0.0;
  double ess_tail = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};

ParamDiagnostics diagnose(const Draws& chains);

// 1-Wasserstein distance between two empirical distributions.
double wasserstein1(std::vector<double> a, std::vector<double> b);

}  // namespace cfd
