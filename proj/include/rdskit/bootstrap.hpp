#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "rdskit/estimators.hpp"
#include "rdskit/random.hpp"
#include "rdskit/rds.hpp"

namespace rdskit {

enum class BootstrapScheme { tree, respondent_iid };

struct BootstrapPlan {
  std::size_t replicates = 1000;
  double level = 0.95;
  std::uint64_t seed = 1;
  BootstrapScheme scheme = BootstrapScheme::tree;
  std::size_t workers = 1;
};

/// Seeds drawn with replacement from the seed set, then each included
/// respondent's recruits drawn with replacement from its original recruits.
/// Output is breadth-first, ids are positions, waves follow the tree.
RdsSample resample_tree(const RdsSample& sample, Rng& rng);

/// n respondents drawn with replacement, each as an unconnected wave-0
/// record. Statistics that need recruitment edges are undefined on it.
RdsSample resample_iid(const RdsSample& sample, Rng& rng);

using Statistic = std::function<double(const RdsSample&)>;

struct BootstrapResult {
  EstimateWithCi estimate;
  std::vector<double> replicates;  // successful replicates, in replicate order
  std::size_t attempts = 0;
  std::size_t failed_attempts = 0;
};

/// point = statistic(sample); se = SD of replicates; percentile interval
/// (type-7 quantiles). Replicate r uses stream derive_seed(plan.seed, r, k)
/// on its k-th attempt; an attempt whose statistic throws std::domain_error
/// is redrawn, at most 10 attempts per replicate. Throws EstimatorUndefined
/// "statistic undefined on resamples" when more than 90% of attempts fail.
/// Results do not depend on plan.workers.
BootstrapResult bootstrap(const RdsSample& sample, const BootstrapPlan& plan,
                          const Statistic& statistic);
EstimateWithCi bootstrap_ci(const RdsSample& sample, const BootstrapPlan& plan,
                            const Statistic& statistic);

/// Linear-interpolation quantile of sorted data (R type 7).
double quantile_sorted(std::span<const double> sorted, double p);

/// CSV `replicate,value`.
void write_replicates_csv(const BootstrapResult& result, std::ostream& out);

/// demographic_breakdown with bootstrap intervals per cell. Absent levels
/// keep their degenerate interval at 0.
std::vector<BreakdownCell> breakdown_with_ci(const RdsSample& sample, std::string_view attr,
                                             const BootstrapPlan& plan);

}  // namespace rdskit
