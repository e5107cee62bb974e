#include "rdskit/estimators.hpp"

#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "rdskit/error.hpp"

namespace rdskit {

std::string_view to_string(CiMethod method) {
  switch (method) {
    case CiMethod::bootstrap: return "bootstrap";
    case CiMethod::delta: return "delta";
    case CiMethod::analytic: return "analytic";
    case CiMethod::none: return "none";
  }
  return "none";
}

double normal_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must be in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + level / 2.0);
}

double hajek_mean(std::span<const double> z, std::span<const double> d) {
  if (z.empty()) throw InputError("hajek_mean: empty sample");
  if (z.size() != d.size()) throw InputError("hajek_mean: z and d differ in length");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(d[i] > 0.0)) throw InputError("hajek_mean: degree must be > 0");
    num += z[i] / d[i];
    den += 1.0 / d[i];
  }
  return num / den;
}

GroupSummary sh_proportion(const RdsSample& sample) {
  const std::size_t g = sample.schema().group_index();
  GroupSummary s;
  s.recruitments = cross_recruit_counts(sample);
  const auto& r = s.recruitments;
  if (r[0][1] == 0 || r[1][0] == 0)
    throw EstimatorUndefined("estimator undefined: no cross-ties observed");

  double inv_a = 0.0;
  double inv_b = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double inv = 1.0 / static_cast<double>(sample[i].reported_degree);
    if (sample.level(i, g) == 0) {
      ++s.n_a;
      inv_a += inv;
    } else {
      ++s.n_b;
      inv_b += inv;
    }
  }
  s.mean_degree_a = static_cast<double>(s.n_a) / inv_a;
  s.mean_degree_b = static_cast<double>(s.n_b) / inv_b;
  s.c_ab = static_cast<double>(r[0][1]) / static_cast<double>(r[0][0] + r[0][1]);
  s.c_ba = static_cast<double>(r[1][0]) / static_cast<double>(r[1][0] + r[1][1]);
  const double up = s.mean_degree_b * s.c_ba;
  s.mu_a = up / (s.mean_degree_a * s.c_ab + up);
  return s;
}

double total_from_known(double mu_a, double n_b) {
  if (!(n_b >= 1.0)) throw InputError("known subgroup size must be >= 1");
  if (!(mu_a > 0.0 && mu_a < 1.0)) throw EstimatorUndefined("total undefined at boundary");
  return n_b * mu_a / (1.0 - mu_a);
}

EstimateWithCi analytic_mu(const RdsSample& sample, double level) {
  const auto s = sh_proportion(sample);
  const std::size_t g = sample.schema().group_index();

  // Var of a harmonic mean n/sum(1/d): delta method on the mean of 1/d.
  auto harmonic_var = [&](Level group, double dbar, std::size_t n) {
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      if (sample.level(i, g) != group) continue;
      const double inv = 1.0 / static_cast<double>(sample[i].reported_degree);
      sum += inv;
      sum2 += inv * inv;
    }
    if (n < 2) return 0.0;
    const double nn = static_cast<double>(n);
    const double var_inv = (sum2 - sum * sum / nn) / (nn - 1.0);
    return std::pow(dbar, 4) * var_inv / nn;
  };
  const auto& r = s.recruitments;
  const double m_a = static_cast<double>(r[0][0] + r[0][1]);
  const double m_b = static_cast<double>(r[1][0] + r[1][1]);
  const double var_da = harmonic_var(0, s.mean_degree_a, s.n_a);
  const double var_db = harmonic_var(1, s.mean_degree_b, s.n_b);
  const double var_cab = s.c_ab * (1.0 - s.c_ab) / m_a;
  const double var_cba = s.c_ba * (1.0 - s.c_ba) / m_b;

  const double da = s.mean_degree_a, db = s.mean_degree_b, cab = s.c_ab, cba = s.c_ba;
  const double den = da * cab + db * cba;
  const double den2 = den * den;
  const double g_da = -db * cba * cab / den2;
  const double g_cab = -db * cba * da / den2;
  const double g_db = cba * da * cab / den2;
  const double g_cba = db * da * cab / den2;
  const double var = g_da * g_da * var_da + g_cab * g_cab * var_cab + g_db * g_db * var_db +
                     g_cba * g_cba * var_cba;

  EstimateWithCi e;
  e.point = s.mu_a;
  e.se = std::sqrt(var);
  e.level = level;
  const double z = normal_quantile(level);
  e.ci_low = e.point - z * e.se;
  e.ci_high = e.point + z * e.se;
  e.method = CiMethod::analytic;
  e.n = sample.size();
  return e;
}

EstimateWithCi delta_ci_total(const EstimateWithCi& mu, double n_b) {
  if (!std::isfinite(mu.se) || mu.se < 0.0) throw InputError("delta method needs a finite se >= 0");
  EstimateWithCi e;
  e.point = total_from_known(mu.point, n_b);
  e.se = n_b * mu.se / ((1.0 - mu.point) * (1.0 - mu.point));
  e.level = mu.level;
  const double z = normal_quantile(mu.level);
  e.ci_low = e.point - z * e.se;
  e.ci_high = e.point + z * e.se;
  e.method = CiMethod::delta;
  e.n = mu.n;
  return e;
}

std::vector<BreakdownCell> demographic_breakdown(const RdsSample& sample, std::string_view attr) {
  const auto& schema = sample.schema();
  const std::size_t g = schema.group_index();
  const std::size_t a = schema.index_of(attr);
  const auto& groups = schema.at(g).levels;
  const auto& levels = schema.at(a).levels;

  std::vector<BreakdownCell> out;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    std::vector<double> num(levels.size(), 0.0);
    double den = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      if (sample.level(i, g) != gi) continue;
      const double w = 1.0 / static_cast<double>(sample[i].reported_degree);
      num[sample.level(i, a)] += w;
      den += w;
      ++n;
    }
    if (n == 0) continue;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      EstimateWithCi e;
      e.point = num[l] / den;
      e.ci_low = e.ci_high = e.point;
      e.n = n;
      e.flagged = num[l] == 0.0;
      out.push_back({groups[gi], levels[l], e});
    }
  }
  return out;
}

RdsSample exclude_seeds(const RdsSample& sample) { return drop_early_waves(sample, 1); }

}  // namespace rdskit
