#include "rdskit/power.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rdskit/error.hpp"
#include "rdskit/parallel.hpp"

namespace rdskit {

PowerTruth PowerTruth::from_network(const AttributedNetwork& net) {
  const std::size_t g = net.schema().group_index();
  double n_b = 0.0;
  for (Level l : net.attributes().column(g)) n_b += l == 1 ? 1.0 : 0.0;
  return {static_cast<double>(net.node_count()) - n_b, n_b};
}

PowerTruth PowerTruth::scaled(const AttributedNetwork& net, double known_b) {
  const auto t = from_network(net);
  if (t.known_b == 0.0) throw InputError("network has no group-B nodes");
  return {known_b * t.total_a / t.known_b, known_b};
}

namespace {

void check_truth(const AttributedNetwork& net, const PowerTruth& truth) {
  if (!(truth.known_b >= 1.0) || !(truth.total_a > 0.0))
    throw InputError("truth totals must be positive");
  const auto t = PowerTruth::from_network(net);
  if (t.total_a == 0.0 || t.known_b == 0.0) throw InputError("network must contain both groups");
  const double want = t.total_a / t.known_b;
  const double got = truth.total_a / truth.known_b;
  if (std::abs(got - want) > 1e-9 * want)
    throw InputError("truth totals are inconsistent with the network's group sizes");
}

}  // namespace

PipelineRun run_pipeline(const AttributedNetwork& net, const RdsDesign& design,
                         const BootstrapPlan& plan, double known_b) {
  PipelineRun run;
  const RdsSample sample = simulate_rds(net, design);
  run.max_wave = sample.max_wave();
  run.sample_size = sample.size();
  try {
    run.total = bootstrap_ci(sample, plan, [known_b](const RdsSample& s) {
      return total_from_known(sh_proportion(s).mu_a, known_b);
    });
  } catch (const EstimatorUndefined&) {
    run.total.reset();
  }
  return run;
}

std::vector<PowerCurvePoint> run_power_sweep(const AttributedNetwork& net,
                                             const PowerSweepConfig& cfg) {
  if (cfg.fractions.empty()) throw InputError("power sweep needs at least one fraction");
  for (std::size_t k = 0; k < cfg.fractions.size(); ++k) {
    const double f = cfg.fractions[k];
    if (!(f > 0.0 && f <= 1.0)) throw InputError("fractions must lie in (0,1]");
    if (k > 0 && !(f > cfg.fractions[k - 1])) throw InputError("fractions must be strictly increasing");
  }
  if (cfg.replicates < 30) throw InputError("power sweep needs at least 30 replicates");
  check_truth(net, cfg.truth);

  const std::size_t n_frac = cfg.fractions.size();
  const std::size_t total = n_frac * cfg.replicates;
  std::vector<PipelineRun> runs(total);
  std::vector<std::size_t> targets(n_frac);
  for (std::size_t k = 0; k < n_frac; ++k) {
    targets[k] = static_cast<std::size_t>(
        std::llround(cfg.fractions[k] * static_cast<double>(net.node_count())));
    if (targets[k] < cfg.design.n_seeds)
      throw InputError("fraction " + std::to_string(cfg.fractions[k]) + " gives fewer respondents than seeds");
  }

  parallel_for(total, std::max<std::size_t>(cfg.workers, 1), [&](std::size_t task) {
    const std::size_t k = task / cfg.replicates;
    const std::size_t r = task % cfg.replicates;
    RdsDesign design = cfg.design;
    design.target_n = targets[k];
    design.seed = derive_seed(cfg.seed, k, r);
    BootstrapPlan plan = cfg.plan;
    plan.seed = derive_seed(cfg.seed, k, r + (std::uint64_t{1} << 32));
    plan.workers = 1;
    runs[task] = run_pipeline(net, design, plan, cfg.truth.known_b);
  });

  std::vector<PowerCurvePoint> rows;
  for (std::size_t k = 0; k < n_frac; ++k) {
    PowerCurvePoint p;
    p.fraction = cfg.fractions[k];
    p.target_n = targets[k];
    p.replicates = cfg.replicates;
    double waves = 0.0;
    std::size_t ok = 0;
    std::size_t covered = 0;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
      const auto& run = runs[k * cfg.replicates + r];
      waves += run.max_wave;
      if (!run.total) {
        ++p.failures;
        continue;
      }
      ++ok;
      p.mean_estimate += run.total->point;
      p.ci_low_mean += run.total->ci_low;
      p.ci_high_mean += run.total->ci_high;
      if (run.total->ci_low <= cfg.truth.total_a && cfg.truth.total_a <= run.total->ci_high) ++covered;
    }
    p.mean_max_wave = waves / static_cast<double>(cfg.replicates);
    if (ok > 0) {
      const double m = static_cast<double>(ok);
      p.mean_estimate /= m;
      p.ci_low_mean /= m;
      p.ci_high_mean /= m;
      p.mean_bias = p.mean_estimate - cfg.truth.total_a;
      p.coverage = static_cast<double>(covered) / m;
    } else {
      p.mean_estimate = p.mean_bias = p.ci_low_mean = p.ci_high_mean = std::nan("");
    }
    p.flagged = 2 * p.failures > cfg.replicates;
    rows.push_back(p);
  }
  return rows;
}

void write_power_csv(const std::vector<PowerCurvePoint>& rows, std::ostream& out) {
  out << "fraction,mean_estimate,mean_bias,ci_low_mean,ci_high_mean,coverage,mean_max_wave,failures\n";
  const auto old = out.precision(10);
  for (const auto& p : rows)
    out << p.fraction << ',' << p.mean_estimate << ',' << p.mean_bias << ',' << p.ci_low_mean << ','
        << p.ci_high_mean << ',' << p.coverage << ',' << p.mean_max_wave << ',' << p.failures << '\n';
  out.precision(old);
}

// ---------------------------------------------------------------------------

std::string to_string(SeedRule rule) {
  switch (rule) {
    case SeedRule::degree_proportional: return "degree_proportional";
    case SeedRule::uniform: return "uniform";
    case SeedRule::fixed_list: return "fixed_list";
  }
  return "?";
}

SeedRule seed_rule_from_string(const std::string& name) {
  if (name == "degree_proportional") return SeedRule::degree_proportional;
  if (name == "uniform") return SeedRule::uniform;
  if (name == "fixed_list") return SeedRule::fixed_list;
  throw InputError("unknown seed rule '" + name + "'");
}

namespace {

SensitivityRow estimate_row(std::string label, const RdsSample& sample, const SensitivityProtocol& p) {
  SensitivityRow row;
  row.label = std::move(label);
  try {
    row.estimate = bootstrap_ci(sample, p.plan, [&p](const RdsSample& s) {
      return total_from_known(sh_proportion(s).mu_a, p.known_b);
    });
  } catch (const EstimatorUndefined& e) {
    row.note = e.what();
  }
  return row;
}

std::vector<SensitivityRow> perturb(const RdsSample& sample, const SensitivityProtocol& p) {
  std::vector<SensitivityRow> rows;
  rows.push_back(estimate_row("baseline", sample, p));
  auto guarded = [&](std::string label, auto&& make) {
    try {
      rows.push_back(estimate_row(label, make(), p));
    } catch (const InputError& e) {
      SensitivityRow na;
      na.label = std::move(label);
      na.note = e.what();
      rows.push_back(std::move(na));
    }
  };
  if (p.drop_seeds) guarded("drop_seeds", [&] { return exclude_seeds(sample); });
  for (int w : p.drop_waves)
    guarded("drop_waves=" + std::to_string(w), [&] { return drop_early_waves(sample, w); });
  return rows;
}

void score(std::vector<SensitivityRow>& rows) {
  const auto& base = rows.front().estimate;
  if (!base) return;
  for (auto& row : rows) {
    if (!row.estimate) continue;
    row.shift = row.estimate->point - base->point;
    row.flagged = std::abs(row.shift) > base->se;
  }
}

}  // namespace

std::vector<SensitivityRow> seed_sensitivity(const RdsSample& sample,
                                             const SensitivityProtocol& protocol) {
  if (!(protocol.known_b >= 1.0)) throw InputError("sensitivity needs a known group-B size >= 1");
  auto rows = perturb(sample, protocol);
  score(rows);
  return rows;
}

std::vector<SensitivityRow> seed_sensitivity(const AttributedNetwork& net, const RdsDesign& design,
                                             const SensitivityProtocol& protocol) {
  if (!(protocol.known_b >= 1.0)) throw InputError("sensitivity needs a known group-B size >= 1");
  auto rows = perturb(simulate_rds(net, design), protocol);
  for (SeedRule rule : protocol.seed_rules) {
    RdsDesign alt = design;
    alt.seed_rule = rule;
    rows.push_back(estimate_row("seed_rule=" + to_string(rule), simulate_rds(net, alt), protocol));
  }
  score(rows);
  return rows;
}

}  // namespace rdskit
