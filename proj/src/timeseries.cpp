#include "rdskit/timeseries.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>

#include "rdskit/csv.hpp"
#include "rdskit/error.hpp"

namespace rdskit {

void PitSeries::validate() const {
  if (years.size() != unsheltered.size() || years.size() != sheltered.size())
    throw InputError("series columns differ in length");
  if (future_years.size() != future_sheltered.size())
    throw InputError("future covariate columns differ in length");
  for (std::size_t t = 0; t < years.size(); ++t) {
    if (!(unsheltered[t] >= 0.0)) throw InputError("unsheltered counts must be >= 0");
    if (!(sheltered[t] > 0.0)) throw InputError("shelter counts must be > 0");
    if (t > 0 && years[t] <= years[t - 1]) throw InputError("years must increase");
  }
  for (std::size_t t = 0; t < future_years.size(); ++t) {
    if (!(future_sheltered[t] > 0.0)) throw InputError("shelter counts must be > 0");
    const int prev = t > 0 ? future_years[t - 1] : (years.empty() ? future_years[t] - 1 : years.back());
    if (future_years[t] <= prev) throw InputError("years must increase");
  }
}

std::vector<int> PitSeries::gaps() const {
  std::vector<int> out;
  for (std::size_t t = 1; t < years.size(); ++t)
    for (int y = years[t - 1] + 1; y < years[t]; ++y) out.push_back(y);
  return out;
}

PitSeries read_pit_csv(std::istream& in) {
  const auto table = csv::read(in, "series");
  if (table.header != std::vector<std::string>{"year", "unsheltered", "sheltered"})
    throw InputError("series: header must be 'year,unsheltered,sheltered'");
  PitSeries s;
  auto number = [](const std::string& field, std::size_t line, const char* what) {
    try {
      std::size_t used = 0;
      const double v = std::stod(field, &used);
      if (used == field.size()) return v;
    } catch (const std::exception&) {
    }
    throw InputError("series:" + std::to_string(line) + ": bad " + what + " '" + field + "'");
  };
  for (const auto& row : table.rows) {
    const int year = static_cast<int>(number(row.fields[0], row.line, "year"));
    const double shelter = number(row.fields[2], row.line, "sheltered");
    if (row.fields[1].empty()) {
      s.future_years.push_back(year);
      s.future_sheltered.push_back(shelter);
      continue;
    }
    if (!s.future_years.empty())
      throw InputError("series:" + std::to_string(row.line) + ": observed count after a future row");
    s.years.push_back(year);
    s.unsheltered.push_back(number(row.fields[1], row.line, "unsheltered"));
    s.sheltered.push_back(shelter);
  }
  s.validate();
  return s;
}

namespace {

double gaussian_loglik(double rss, std::size_t n) {
  const double nn = static_cast<double>(n);
  const double s2 = rss / nn;
  if (s2 <= 0.0) return std::numeric_limits<double>::infinity();
  return -0.5 * nn * (std::log(2.0 * std::numbers::pi * s2) + 1.0);
}

}  // namespace

ArimaFit fit_arima010_with_covariate(const PitSeries& series, VarianceDivisor divisor) {
  series.validate();
  const std::size_t n = series.years.size();
  if (n < 4) throw InputError("ARIMA fit needs at least 4 observations");
  const std::size_t m = n - 1;
  Eigen::MatrixXd x(m, 2);
  Eigen::VectorXd dy(m);
  for (std::size_t t = 0; t < m; ++t) {
    dy(t) = series.unsheltered[t + 1] - series.unsheltered[t];
    x(t, 0) = 1.0;
    x(t, 1) = std::log(series.sheltered[t + 1]) - std::log(series.sheltered[t]);
  }
  const double spread = x.col(1).maxCoeff() - x.col(1).minCoeff();
  if (!(spread > 1e-12 * std::max(1.0, x.col(1).cwiseAbs().maxCoeff())))
    throw InputError("covariate collinear with drift");

  const Eigen::VectorXd b = x.colPivHouseholderQr().solve(dy);
  const double rss = (dy - x * b).squaredNorm();

  ArimaFit fit;
  fit.drift = b(0);
  fit.beta_log_shelter = b(1);
  fit.rss = rss;
  fit.n_obs = m;
  fit.divisor = divisor;
  fit.sigma2_ml = rss / static_cast<double>(m);
  fit.sigma2 = divisor == VarianceDivisor::ml ? fit.sigma2_ml : rss / static_cast<double>(m - 2);
  const Eigen::MatrixXd cov = fit.sigma2 * (x.transpose() * x).inverse();
  fit.se_drift = std::sqrt(cov(0, 0));
  fit.se_beta = std::sqrt(cov(1, 1));
  fit.log_likelihood = gaussian_loglik(rss, m);
  fit.aic = 2.0 * 3.0 - 2.0 * fit.log_likelihood;
  fit.last_y = series.unsheltered.back();
  fit.last_log_x = std::log(series.sheltered.back());
  return fit;
}

std::vector<EstimateWithCi> forecast(const ArimaFit& fit, double last_y, double last_log_x,
                                     std::span<const double> future_log_x, double level) {
  if (future_log_x.empty()) throw InputError("forecast needs at least one future covariate value");
  const double z = normal_quantile(level);
  std::vector<EstimateWithCi> out;
  for (std::size_t k = 0; k < future_log_x.size(); ++k) {
    const double h = static_cast<double>(k + 1);
    EstimateWithCi e;
    e.point = last_y + h * fit.drift + fit.beta_log_shelter * (future_log_x[k] - last_log_x);
    e.se = std::sqrt(h * fit.sigma2);
    e.ci_low = e.point - z * e.se;
    e.ci_high = e.point + z * e.se;
    e.level = level;
    e.method = CiMethod::analytic;
    e.n = fit.n_obs;
    out.push_back(e);
  }
  return out;
}

std::vector<EstimateWithCi> forecast(const ArimaFit& fit, std::span<const double> future_log_x,
                                     double level) {
  return forecast(fit, fit.last_y, fit.last_log_x, future_log_x, level);
}

// ---------------------------------------------------------------------------

std::string ArimaCandidate::label() const {
  std::string s = "ARIMA(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
  if (drift) s += d == 0 ? "+mean" : "+drift";
  if (covariate) s += "+xreg";
  return s;
}

namespace {

struct Profiled {
  double rss = 0.0;
  Eigen::VectorXd coef;
  bool ok = false;
};

// Conditional residuals e_t = w_t - phi w_{t-1} - theta e_{t-1}, from t = p,
// applied to the response and each regressor, then least squares.
Profiled profile(const Eigen::VectorXd& w, const Eigen::MatrixXd& x, int p, int q, double phi,
                 double theta) {
  const auto n = w.size();
  const auto n_eff = n - p;
  const auto k = x.cols();
  Eigen::MatrixXd fx(n_eff, k);
  Eigen::VectorXd fw(n_eff);
  auto filter = [&](const Eigen::VectorXd& in, auto&& out) {
    double prev_e = 0.0;
    for (Eigen::Index t = p; t < n; ++t) {
      double e = in(t);
      if (p == 1) e -= phi * in(t - 1);
      if (q == 1) e -= theta * prev_e;
      out(t - p) = e;
      prev_e = e;
    }
  };
  filter(w, fw);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd col = x.col(c);
    Eigen::VectorXd out(n_eff);
    filter(col, out);
    fx.col(c) = out;
  }
  Profiled r;
  if (k == 0) {
    r.rss = fw.squaredNorm();
    r.ok = true;
    return r;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(fx);
  if (qr.rank() < k) return r;
  r.coef = qr.solve(fw);
  r.rss = (fw - fx * r.coef).squaredNorm();
  r.ok = true;
  return r;
}

ArimaCandidate fit_candidate(const PitSeries& s, int p, int d, int q, bool drift, bool covariate) {
  ArimaCandidate c;
  c.p = p;
  c.d = d;
  c.q = q;
  c.drift = drift;
  c.covariate = covariate;
  const std::size_t n = s.years.size();
  std::vector<double> y = s.unsheltered;
  std::vector<double> lx(n);
  for (std::size_t t = 0; t < n; ++t) lx[t] = std::log(s.sheltered[t]);
  if (d == 1) {
    for (std::size_t t = n - 1; t > 0; --t) {
      y[t] -= y[t - 1];
      lx[t] -= lx[t - 1];
    }
    y.erase(y.begin());
    lx.erase(lx.begin());
  }
  const auto m = static_cast<Eigen::Index>(y.size());
  const int k_reg = (drift ? 1 : 0) + (covariate ? 1 : 0);
  const auto n_eff = static_cast<std::size_t>(m - p);
  const std::size_t k_all = static_cast<std::size_t>(k_reg + p + q + 1);
  if (n_eff < k_all + 1) {
    c.reason = "too few observations";
    return c;
  }
  Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(y.data(), m);
  Eigen::MatrixXd x(m, k_reg);
  Eigen::Index col = 0;
  if (drift) x.col(col++).setOnes();
  if (covariate) x.col(col++) = Eigen::Map<const Eigen::VectorXd>(lx.data(), m);

  double best_phi = 0.0;
  double best_theta = 0.0;
  Profiled best = profile(w, x, p, q, 0.0, 0.0);
  if (!best.ok) {
    c.reason = "regressors collinear";
    return c;
  }
  auto search = [&](double phi_lo, double phi_hi, double th_lo, double th_hi, double step) {
    const double phi_c = best_phi;
    const double th_c = best_theta;
    for (double phi = p ? std::max(phi_lo, -0.99) : phi_c; phi <= (p ? std::min(phi_hi, 0.99) : phi_c) + 1e-12;
         phi += step) {
      for (double th = q ? std::max(th_lo, -0.99) : th_c; th <= (q ? std::min(th_hi, 0.99) : th_c) + 1e-12;
           th += step) {
        auto r = profile(w, x, p, q, phi, th);
        if (r.ok && r.rss < best.rss) {
          best = std::move(r);
          best_phi = phi;
          best_theta = th;
        }
        if (!q) break;
      }
      if (!p) break;
    }
  };
  if (p || q) {
    search(-0.98, 0.98, -0.98, 0.98, 0.02);
    search(best_phi - 0.02, best_phi + 0.02, best_theta - 0.02, best_theta + 0.02, 0.001);
  }

  c.feasible = true;
  c.phi = best_phi;
  c.theta = best_theta;
  c.coefficients.assign(best.coef.data(), best.coef.data() + best.coef.size());
  c.n_eff = n_eff;
  c.sigma2_ml = best.rss / static_cast<double>(n_eff);
  c.log_likelihood = gaussian_loglik(best.rss, n_eff);
  c.aic = 2.0 * static_cast<double>(k_all) - 2.0 * c.log_likelihood;
  return c;
}

}  // namespace

OrderSearch select_arima_order(const PitSeries& series) {
  series.validate();
  if (series.years.size() < 4) throw InputError("order search needs at least 4 observations");
  OrderSearch out;
  for (int p = 0; p <= 1; ++p)
    for (int d = 0; d <= 1; ++d)
      for (int q = 0; q <= 1; ++q)
        for (int drift = 0; drift <= 1; ++drift)
          for (int cov = 0; cov <= 1; ++cov)
            out.candidates.push_back(fit_candidate(series, p, d, q, drift == 1, cov == 1));
  bool found = false;
  for (std::size_t i = 0; i < out.candidates.size(); ++i) {
    const auto& c = out.candidates[i];
    if (!c.feasible) continue;
    if (!found || c.aic < out.candidates[out.best].aic) {
      out.best = i;
      found = true;
    }
  }
  if (!found) throw InputError("no ARIMA candidate could be fit");
  return out;
}

}  // namespace rdskit
