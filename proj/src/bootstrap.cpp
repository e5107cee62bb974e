#include "rdskit/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>

#include "rdskit/error.hpp"
#include "rdskit/parallel.hpp"

namespace rdskit {

namespace {

constexpr std::size_t kAttemptsPerReplicate = 10;

void append_row(const RdsSample& sample, std::size_t r, std::vector<Level>& levels) {
  const std::size_t n_attr = sample.schema().size();
  const auto row = sample.levels().subspan(r * n_attr, n_attr);
  levels.insert(levels.end(), row.begin(), row.end());
}

}  // namespace

RdsSample resample_tree(const RdsSample& sample, Rng& rng) {
  if (sample.empty()) throw InputError("cannot resample an empty sample");
  std::vector<std::size_t> seeds;
  for (std::size_t r = 0; r < sample.size(); ++r)
    if (sample.recruiter_index()[r] == RdsSample::npos) seeds.push_back(r);
  const auto children = sample.recruits();

  std::vector<RdsRespondent> out;
  std::vector<std::size_t> origin;
  std::vector<Level> levels;
  out.reserve(sample.size());
  origin.reserve(sample.size());
  levels.reserve(sample.levels().size());

  auto add = [&](std::size_t source, std::optional<RespondentId> parent, int wave) {
    RdsRespondent resp = sample[source];
    resp.id = static_cast<RespondentId>(out.size());
    resp.recruiter = parent;
    resp.wave = wave;
    out.push_back(resp);
    origin.push_back(source);
    append_row(sample, source, levels);
  };

  std::uniform_int_distribution<std::size_t> pick_seed(0, seeds.size() - 1);
  for (std::size_t s = 0; s < seeds.size(); ++s) add(seeds[pick_seed(rng)], std::nullopt, 0);
  for (std::size_t pos = 0; pos < out.size(); ++pos) {
    const auto& kids = children[origin[pos]];
    if (kids.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, kids.size() - 1);
    const int wave = out[pos].wave + 1;
    for (std::size_t c = 0; c < kids.size(); ++c)
      add(kids[pick(rng)], static_cast<RespondentId>(pos), wave);
  }
  return RdsSample(sample.schema_ptr(), std::move(out), std::move(levels), sample.coupon_limit());
}

RdsSample resample_iid(const RdsSample& sample, Rng& rng) {
  if (sample.empty()) throw InputError("cannot resample an empty sample");
  std::uniform_int_distribution<std::size_t> pick(0, sample.size() - 1);
  std::vector<RdsRespondent> out;
  std::vector<Level> levels;
  out.reserve(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const std::size_t source = pick(rng);
    RdsRespondent resp = sample[source];
    resp.id = static_cast<RespondentId>(i);
    resp.recruiter.reset();
    resp.wave = 0;
    out.push_back(resp);
    append_row(sample, source, levels);
  }
  return RdsSample(sample.schema_ptr(), std::move(out), std::move(levels), sample.coupon_limit());
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InputError("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

struct MultiResult {
  std::vector<std::vector<double>> values;  // [statistic][replicate]
  std::size_t attempts = 0;
  std::size_t failed = 0;
};

// Runs the replicate loop for a vector-valued statistic so breakdowns share
// one set of resamples.
MultiResult run_replicates(const RdsSample& sample, const BootstrapPlan& plan, std::size_t width,
                           const std::function<std::vector<double>(const RdsSample&)>& stat) {
  if (plan.replicates < 2) throw InputError("bootstrap needs at least 2 replicates");
  if (!(plan.level > 0.0 && plan.level < 1.0)) throw InputError("bootstrap level must be in (0,1)");

  std::vector<std::optional<std::vector<double>>> slot(plan.replicates);
  std::vector<std::size_t> tries(plan.replicates, 0);
  parallel_for(plan.replicates, std::max<std::size_t>(plan.workers, 1), [&](std::size_t r) {
    for (std::size_t k = 0; k < kAttemptsPerReplicate; ++k) {
      ++tries[r];
      Rng rng(derive_seed(plan.seed, r, k));
      const RdsSample resample =
          plan.scheme == BootstrapScheme::tree ? resample_tree(sample, rng) : resample_iid(sample, rng);
      try {
        slot[r] = stat(resample);
        return;
      } catch (const std::domain_error&) {
      }
    }
  });

  MultiResult out;
  out.values.assign(width, {});
  for (std::size_t r = 0; r < plan.replicates; ++r) {
    out.attempts += tries[r];
    if (!slot[r]) {
      out.failed += tries[r];
      continue;
    }
    out.failed += tries[r] - 1;
    for (std::size_t w = 0; w < width; ++w) out.values[w].push_back((*slot[r])[w]);
  }
  const bool too_many = static_cast<double>(out.failed) > 0.9 * static_cast<double>(out.attempts);
  if (too_many || out.values.front().size() < 2)
    throw EstimatorUndefined("statistic undefined on resamples");
  return out;
}

EstimateWithCi summarize(double point, std::vector<double> values, double level) {
  EstimateWithCi e;
  e.point = point;
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  std::sort(values.begin(), values.end());
  e.se = values.front() == values.back() ? 0.0 : std::sqrt(ss / (n - 1.0));
  const double tail = (1.0 - level) / 2.0;
  e.ci_low = quantile_sorted(values, tail);
  e.ci_high = quantile_sorted(values, 1.0 - tail);
  e.level = level;
  e.method = CiMethod::bootstrap;
  return e;
}

}  // namespace

BootstrapResult bootstrap(const RdsSample& sample, const BootstrapPlan& plan,
                          const Statistic& statistic) {
  const double point = statistic(sample);
  auto multi = run_replicates(sample, plan, 1, [&](const RdsSample& s) {
    return std::vector<double>{statistic(s)};
  });
  BootstrapResult out;
  out.replicates = std::move(multi.values.front());
  out.estimate = summarize(point, out.replicates, plan.level);
  out.estimate.n = sample.size();
  out.attempts = multi.attempts;
  out.failed_attempts = multi.failed;
  return out;
}

EstimateWithCi bootstrap_ci(const RdsSample& sample, const BootstrapPlan& plan,
                            const Statistic& statistic) {
  return bootstrap(sample, plan, statistic).estimate;
}

void write_replicates_csv(const BootstrapResult& result, std::ostream& out) {
  out << "replicate,value\n";
  const auto old = out.precision(17);
  for (std::size_t r = 0; r < result.replicates.size(); ++r)
    out << r << ',' << result.replicates[r] << '\n';
  out.precision(old);
}

std::vector<BreakdownCell> breakdown_with_ci(const RdsSample& sample, std::string_view attr,
                                             const BootstrapPlan& plan) {
  auto cells = demographic_breakdown(sample, attr);
  if (cells.empty()) return cells;
  const auto& schema = sample.schema();
  const std::size_t g = schema.group_index();
  const std::size_t a = schema.index_of(attr);
  const std::size_t n_levels = schema.at(a).levels.size();
  const std::size_t n_groups = schema.at(g).levels.size();

  // Cells are grouped by present groups in schema order.
  std::vector<std::size_t> present;
  for (std::size_t c = 0; c < cells.size(); c += n_levels)
    present.push_back(*schema.find_level(g, cells[c].group));

  auto stat = [&](const RdsSample& s) {
    std::vector<double> num(n_groups * n_levels, 0.0);
    std::vector<double> den(n_groups, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double w = 1.0 / static_cast<double>(s[i].reported_degree);
      num[s.level(i, g) * n_levels + s.level(i, a)] += w;
      den[s.level(i, g)] += w;
    }
    std::vector<double> out;
    for (std::size_t gi : present) {
      if (den[gi] == 0.0) throw EstimatorUndefined("group absent from resample");
      for (std::size_t l = 0; l < n_levels; ++l) out.push_back(num[gi * n_levels + l] / den[gi]);
    }
    return out;
  };
  auto multi = run_replicates(sample, plan, cells.size(), stat);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].estimate.flagged) {
      cells[c].estimate.method = CiMethod::bootstrap;
      cells[c].estimate.level = plan.level;
      continue;
    }
    const std::size_t n = cells[c].estimate.n;
    cells[c].estimate = summarize(cells[c].estimate.point, std::move(multi.values[c]), plan.level);
    cells[c].estimate.n = n;
  }
  return cells;
}

}  // namespace rdskit
