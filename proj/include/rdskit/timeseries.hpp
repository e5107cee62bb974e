#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rdskit/estimators.hpp"

namespace rdskit {

/// Yearly counts with the shelter-count covariate. Rows after the last
/// observed count may carry the covariate alone (future years to forecast).
struct PitSeries {
  std::vector<int> years;
  std::vector<double> unsheltered;
  std::vector<double> sheltered;  // > 0; log taken internally
  std::vector<int> future_years;
  std::vector<double> future_sheltered;

  /// Throws InputError on length mismatch, negative counts or non-positive
  /// covariate values, or years that do not increase.
  void validate() const;
  /// Years missing between the first and last observation.
  std::vector<int> gaps() const;
};

/// CSV `year,unsheltered,sheltered`. A trailing row with an empty
/// unsheltered field is a future covariate value.
PitSeries read_pit_csv(std::istream& in);

enum class VarianceDivisor { residual_dof, ml };

struct ArimaFit {
  double drift = 0.0;
  double beta_log_shelter = 0.0;
  double se_drift = 0.0;
  double se_beta = 0.0;
  double sigma2 = 0.0;     // RSS / (n - 2) or RSS / n, per divisor
  double sigma2_ml = 0.0;  // RSS / n
  double rss = 0.0;
  double log_likelihood = 0.0;  // Gaussian, at sigma2_ml
  double aic = 0.0;             // 2k - 2 log_likelihood, k = 3
  std::size_t n_obs = 0;        // differenced observations
  VarianceDivisor divisor = VarianceDivisor::residual_dof;
  double last_y = 0.0;
  double last_log_x = 0.0;
};

/// Least squares on dy_t = drift + beta * dlog(x_t) + e_t. Needs >= 4 rows.
/// Throws InputError "covariate collinear with drift" when dlog x is
/// constant.
ArimaFit fit_arima010_with_covariate(const PitSeries& series,
                                     VarianceDivisor divisor = VarianceDivisor::residual_dof);

/// h-step forecasts for h = 1..future_log_x.size():
/// y + h drift + beta (log x_{t+h} - log x_t), variance h sigma2.
std::vector<EstimateWithCi> forecast(const ArimaFit& fit, double last_y, double last_log_x,
                                     std::span<const double> future_log_x, double level = 0.95);
/// Uses the fit's last observation.
std::vector<EstimateWithCi> forecast(const ArimaFit& fit, std::span<const double> future_log_x,
                                     double level = 0.95);

// ---------------------------------------------------------------------------
// Order search.

struct ArimaCandidate {
  int p = 0;
  int d = 0;
  int q = 0;
  bool drift = false;  // intercept of the differenced series
  bool covariate = false;
  bool feasible = false;
  std::string reason;  // why infeasible
  double phi = 0.0;
  double theta = 0.0;
  std::vector<double> coefficients;  // drift then beta, as present
  double sigma2_ml = 0.0;
  double log_likelihood = 0.0;
  double aic = 0.0;
  std::size_t n_eff = 0;

  std::string label() const;
};

struct OrderSearch {
  std::vector<ArimaCandidate> candidates;  // all 32, grid order
  std::size_t best = 0;                    // index of the lowest AIC
};

/// Fits every (p, d, q) in {0,1}^3 with drift and covariate on/off by
/// conditional sum of squares, regression coefficients profiled out and
/// (phi, theta) found by grid search with local refinement.
OrderSearch select_arima_order(const PitSeries& series);

}  // namespace rdskit
