#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdskit/rds.hpp"

namespace rdskit {

enum class CiMethod { bootstrap, delta, analytic, none };
std::string_view to_string(CiMethod method);

struct EstimateWithCi {
  double point = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  CiMethod method = CiMethod::none;
  std::size_t n = 0;      // respondents behind the estimate
  bool flagged = false;   // e.g. level absent from a group
};

struct GroupSummary {
  double mean_degree_a = 0.0;
  double mean_degree_b = 0.0;
  double c_ab = 0.0;
  double c_ba = 0.0;
  double mu_a = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  CrossRecruitMatrix recruitments{};
};

/// Two-sided standard normal quantile for a confidence level, e.g. 1.959964
/// at 0.95. Throws InputError unless 0 < level < 1.
double normal_quantile(double level);

/// (sum z/d) / (sum 1/d). Throws InputError on empty input, length mismatch
/// or any degree <= 0.
double hajek_mean(std::span<const double> z, std::span<const double> d);

/// Two-group proportion estimate from group mean degrees (harmonic form) and
/// cross-group recruitment rates. Group A is level 0 of `group`. Throws
/// EstimatorUndefined when a group is missing or either cross direction has
/// no recruitments.
GroupSummary sh_proportion(const RdsSample& sample);

/// n_b * mu_a / (1 - mu_a). Throws EstimatorUndefined unless 0 < mu_a < 1,
/// InputError unless n_b >= 1.
double total_from_known(double mu_a, double n_b);

/// Linearized standard error of mu_a, treating group mean degrees and both
/// cross-recruitment rates as independent. Method tag `analytic`.
EstimateWithCi analytic_mu(const RdsSample& sample, double level = 0.95);

/// point = total_from_known(mu.point, n_b), se = n_b * mu.se / (1 - mu)^2,
/// normal interval at mu.level.
EstimateWithCi delta_ci_total(const EstimateWithCi& mu, double n_b);

struct BreakdownCell {
  std::string group;
  std::string level;
  EstimateWithCi estimate;
};

/// Within-group Hajek proportion of each level of `attr`, groups outer,
/// levels inner in schema order. Point estimates only (se 0, CI at the
/// point); a level absent from a group is flagged. A group with no
/// respondents yields no cells.
std::vector<BreakdownCell> demographic_breakdown(const RdsSample& sample, std::string_view attr);

/// Seeds removed, wave-1 recruits promoted to seeds.
RdsSample exclude_seeds(const RdsSample& sample);

}  // namespace rdskit
