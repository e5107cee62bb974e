#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rdskit/bootstrap.hpp"
#include "rdskit/graph.hpp"
#include "rdskit/rds.hpp"

namespace rdskit {

/// Population quantities the sweep is scored against. known_b is the size
/// of group B handed to the estimator; total_a is the group-A total it
/// should recover. Their ratio must equal the network's N_A / N_B.
struct PowerTruth {
  double total_a = 0.0;
  double known_b = 0.0;

  /// Truth read straight off the network.
  static PowerTruth from_network(const AttributedNetwork& net);
  /// known_b given (e.g. an administrative count), total_a scaled to match.
  static PowerTruth scaled(const AttributedNetwork& net, double known_b);
};

struct PowerSweepConfig {
  std::vector<double> fractions{0.02, 0.05, 0.10, 0.20, 0.30, 0.50};
  std::size_t replicates = 100;
  RdsDesign design;  // target_n and seed are set per replicate
  BootstrapPlan plan;
  PowerTruth truth;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

struct PowerCurvePoint {
  double fraction = 0.0;
  std::size_t target_n = 0;
  double mean_estimate = 0.0;
  double mean_bias = 0.0;
  double ci_low_mean = 0.0;
  double ci_high_mean = 0.0;
  double coverage = 0.0;
  double mean_max_wave = 0.0;
  std::size_t failures = 0;
  std::size_t replicates = 0;
  bool flagged = false;  // more than half the replicates failed

  double mean_ci_width() const { return ci_high_mean - ci_low_mean; }
};

/// One replicate of the pipeline: simulate_rds, sh_proportion,
/// total_from_known and a bootstrap CI for the total.
struct PipelineRun {
  std::optional<EstimateWithCi> total;  // empty when the estimator failed
  int max_wave = 0;
  std::size_t sample_size = 0;
};
PipelineRun run_pipeline(const AttributedNetwork& net, const RdsDesign& design,
                         const BootstrapPlan& plan, double known_b);

/// For each fraction f (target_n = round(f N)) runs `replicates`
/// independent pipelines. Replicate r of fraction k uses design seed
/// derive_seed(seed, k, r) and bootstrap seed derive_seed(seed, k, r + 2^32),
/// so output does not depend on the worker count. Aggregates are over
/// successful replicates.
std::vector<PowerCurvePoint> run_power_sweep(const AttributedNetwork& net,
                                             const PowerSweepConfig& cfg);

/// CSV header: fraction,mean_estimate,mean_bias,ci_low_mean,ci_high_mean,
/// coverage,mean_max_wave,failures
void write_power_csv(const std::vector<PowerCurvePoint>& rows, std::ostream& out);

struct SensitivityProtocol {
  bool drop_seeds = true;
  std::vector<int> drop_waves{2};
  std::vector<SeedRule> seed_rules;  // network form only
  BootstrapPlan plan;
  double known_b = 0.0;
};

struct SensitivityRow {
  std::string label;  // baseline, drop_seeds, drop_waves=w, seed_rule=...
  std::optional<EstimateWithCi> estimate;  // empty = NA
  double shift = 0.0;                      // estimate - baseline
  bool flagged = false;                    // |shift| > baseline bootstrap SE
  std::string note;
};

/// Total estimate with bootstrap CI under each perturbation of a sample.
std::vector<SensitivityRow> seed_sensitivity(const RdsSample& sample,
                                             const SensitivityProtocol& protocol);
/// As above on a sample simulated from net/design; each entry of
/// protocol.seed_rules adds a row re-simulated under that seed rule with the
/// same design seed.
std::vector<SensitivityRow> seed_sensitivity(const AttributedNetwork& net, const RdsDesign& design,
                                             const SensitivityProtocol& protocol);

std::string to_string(SeedRule rule);
SeedRule seed_rule_from_string(const std::string& name);

}  // namespace rdskit
