#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "rdskit/error.hpp"
#include "rdskit/timeseries.hpp"

using namespace rdskit;

namespace {

PitSeries make_series(const std::vector<double>& y, const std::vector<double>& x, int first_year = 2007) {
  PitSeries s;
  for (std::size_t t = 0; t < y.size(); ++t) s.years.push_back(first_year + static_cast<int>(t));
  s.unsheltered = y;
  s.sheltered = x;
  return s;
}

PitSeries random_series(std::uint64_t seed, std::size_t n = 14) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> e(0.0, 500.0), lx(0.0, 0.08);
  std::vector<double> y{20000}, x{5000};
  for (std::size_t t = 1; t < n; ++t) {
    const double nx = x.back() * std::exp(lx(rng));
    y.push_back(y.back() + 300 - 7000 * std::log(nx / x.back()) + e(rng));
    x.push_back(nx);
  }
  return make_series(y, x);
}

// Normal equations for [1, u] solved by Cramer's rule.
std::pair<double, double> normal_equations(const PitSeries& s) {
  double n = 0, su = 0, suu = 0, sv = 0, suv = 0;
  for (std::size_t t = 1; t < s.years.size(); ++t) {
    const double u = std::log(s.sheltered[t]) - std::log(s.sheltered[t - 1]);
    const double v = s.unsheltered[t] - s.unsheltered[t - 1];
    n += 1;
    su += u;
    suu += u * u;
    sv += v;
    suv += u * v;
  }
  const double det = n * suu - su * su;
  return {(sv * suu - su * suv) / det, (n * suv - su * sv) / det};
}

double rss_at(const PitSeries& s, double a, double b) {
  double r = 0;
  for (std::size_t t = 1; t < s.years.size(); ++t) {
    const double u = std::log(s.sheltered[t]) - std::log(s.sheltered[t - 1]);
    const double e = s.unsheltered[t] - s.unsheltered[t - 1] - a - b * u;
    r += e * e;
  }
  return r;
}

}  // namespace

TEST_CASE("noiseless series recovers drift and beta exactly") {
  std::vector<double> y{1000}, x{800, 900, 850, 1000, 1200, 1100};
  for (std::size_t t = 1; t < x.size(); ++t) y.push_back(y.back() + 300 + 50 * std::log(x[t] / x[t - 1]));
  const auto fit = fit_arima010_with_covariate(make_series(y, x));
  CHECK(fit.drift == doctest::Approx(300).epsilon(1e-10));
  CHECK(fit.beta_log_shelter == doctest::Approx(50).epsilon(1e-8));
  CHECK(fit.rss < 1e-12);
  CHECK(fit.n_obs == 5);
}

TEST_CASE("least squares agrees with the normal-equations oracle") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto s = random_series(seed);
    const auto fit = fit_arima010_with_covariate(s);
    const auto [a, b] = normal_equations(s);
    CHECK(std::abs(fit.drift - a) <= 1e-8 * std::max(1.0, std::abs(a)));
    CHECK(std::abs(fit.beta_log_shelter - b) <= 1e-8 * std::max(1.0, std::abs(b)));
    CHECK(fit.rss == doctest::Approx(rss_at(s, a, b)).epsilon(1e-10));
    // Optimality: nudging either coefficient raises the RSS.
    for (double da : {-1.0, 1.0}) CHECK(rss_at(s, a + da, b) > fit.rss);
    for (double db : {-10.0, 10.0}) CHECK(rss_at(s, a, b + db) > fit.rss);
  }
}

TEST_CASE("shifting the level leaves the fit unchanged") {
  auto s = random_series(3);
  const auto base = fit_arima010_with_covariate(s);
  for (auto& v : s.unsheltered) v += 10000;
  for (auto& v : s.sheltered) v *= 3;
  const auto shifted = fit_arima010_with_covariate(s);
  CHECK(shifted.drift == doctest::Approx(base.drift));
  CHECK(shifted.beta_log_shelter == doctest::Approx(base.beta_log_shelter));
}

TEST_CASE("variance, likelihood and AIC bookkeeping") {
  const auto s = random_series(9);
  const auto dof = fit_arima010_with_covariate(s);
  const auto ml = fit_arima010_with_covariate(s, VarianceDivisor::ml);
  const double m = 13;
  CHECK(dof.sigma2 == doctest::Approx(dof.rss / (m - 2)));
  CHECK(ml.sigma2 == doctest::Approx(ml.rss / m));
  CHECK(dof.sigma2_ml == doctest::Approx(ml.sigma2));
  const double ll = -0.5 * m * (std::log(2 * M_PI * dof.rss / m) + 1);
  CHECK(dof.log_likelihood == doctest::Approx(ll));
  CHECK(dof.aic == doctest::Approx(6 - 2 * ll));
  CHECK(ml.se_drift < dof.se_drift);
}

TEST_CASE("fit errors") {
  CHECK_THROWS_AS(fit_arima010_with_covariate(make_series({1, 2, 3}, {1, 2, 3})), InputError);
  try {
    fit_arima010_with_covariate(make_series({1, 5, 2, 8, 3}, {100, 200, 400, 800, 1600}));
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()) == "covariate collinear with drift");
  }
  CHECK_THROWS_AS(fit_arima010_with_covariate(make_series({1, 5, 2, 8}, {100, 0, 400, 800})), InputError);
  auto s = make_series({1, 5, 2, 8}, {100, 150, 400, 800});
  s.years[2] = s.years[1];
  CHECK_THROWS_AS(fit_arima010_with_covariate(s), InputError);
}

TEST_CASE("forecast arithmetic") {
  ArimaFit fit;
  fit.drift = 306.69;
  fit.beta_log_shelter = -7580.84;
  fit.sigma2 = 309249.9;
  const std::vector<double> fut{std::log(4000.0), std::log(4100.0)};
  const auto f = forecast(fit, 5578, std::log(3900.0), fut);
  REQUIRE(f.size() == 2);
  CHECK(f[0].point == doctest::Approx(5578 + 306.69 - 7580.84 * std::log(4000.0 / 3900.0)));
  CHECK(f[1].point == doctest::Approx(5578 + 2 * 306.69 - 7580.84 * std::log(4100.0 / 3900.0)));
  CHECK(f[0].ci_high - f[0].point == doctest::Approx(1.959964 * std::sqrt(309249.9)).epsilon(1e-6));
  // Two-step half width.
  CHECK(f[1].ci_high - f[1].point == doctest::Approx(1541.4).epsilon(1e-4));
  CHECK(f[1].method == CiMethod::analytic);
  CHECK_THROWS_AS(forecast(fit, 0, 0, std::vector<double>{}), InputError);
}

TEST_CASE("series CSV") {
  std::stringstream in("year,unsheltered,sheltered\n2007,100,50\n2009,120,55\n2010,130,60\n2011,,62\n");
  const auto s = read_pit_csv(in);
  CHECK(s.years.size() == 3);
  CHECK(s.future_years == std::vector<int>{2011});
  CHECK(s.gaps() == std::vector<int>{2008});

  std::stringstream bad("year,unsheltered,sheltered\n2007,100,50\n2008,x,55\n");
  try {
    read_pit_csv(bad);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("series:3") != std::string::npos);
  }
  std::stringstream after("year,unsheltered,sheltered\n2007,100,50\n2008,,55\n2009,1,2\n");
  CHECK_THROWS_AS(read_pit_csv(after), InputError);
  std::stringstream header("yr,u,s\n");
  CHECK_THROWS_AS(read_pit_csv(header), InputError);
}

TEST_CASE("order search") {
  const auto s = random_series(17);
  const auto search = select_arima_order(s);
  REQUIRE(search.candidates.size() == 32);
  std::size_t best = search.candidates.size();
  for (std::size_t i = 0; i < search.candidates.size(); ++i) {
    const auto& c = search.candidates[i];
    if (!c.feasible) continue;
    CHECK(std::abs(c.phi) < 1.0);
    CHECK(std::abs(c.theta) < 1.0);
    if (c.p == 0) CHECK(c.phi == 0.0);
    if (c.q == 0) CHECK(c.theta == 0.0);
    const double k = static_cast<double>(c.coefficients.size() + c.p + c.q + 1);
    CHECK(c.aic == doctest::Approx(2 * k - 2 * c.log_likelihood));
    if (best == search.candidates.size() || c.aic < search.candidates[best].aic) best = i;
  }
  CHECK(search.best == best);

  // The plain differenced regression matches the dedicated fit.
  const auto fit = fit_arima010_with_covariate(s);
  bool found = false;
  for (const auto& c : search.candidates) {
    if (c.p == 0 && c.d == 1 && c.q == 0 && c.drift && c.covariate) {
      found = true;
      CHECK(c.log_likelihood == doctest::Approx(fit.log_likelihood).epsilon(1e-9));
      REQUIRE(c.coefficients.size() == 2);
      CHECK(c.coefficients[0] == doctest::Approx(fit.drift));
      CHECK(c.coefficients[1] == doctest::Approx(fit.beta_log_shelter));
    }
  }
  CHECK(found);

  // AR(1) coefficient of the differences is recovered.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> e(0.0, 1.0);
  std::vector<double> y{1000}, x;
  double prev = 0;
  for (int t = 0; t < 200; ++t) {
    prev = 0.7 * prev + e(rng);
    if (t > 0) y.push_back(y.back() + prev);
  }
  for (std::size_t t = 0; t < y.size(); ++t) x.push_back(100 + std::exp(0.01 * static_cast<double>(t % 7)));
  const auto ar = select_arima_order(make_series(y, x, 1800));
  for (const auto& c : ar.candidates)
    if (c.p == 1 && c.d == 1 && c.q == 0 && !c.drift && !c.covariate) CHECK(c.phi == doctest::Approx(0.7).epsilon(0.2));
}
