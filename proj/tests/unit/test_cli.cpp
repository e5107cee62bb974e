#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "rdskit/cli.hpp"
#include "rdskit/estimators.hpp"
#include "rdskit/timeseries.hpp"

namespace fs = std::filesystem;
using namespace rdskit;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rdskit_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

json load(const fs::path& p) { return json::parse(slurp(p)); }

const json& find_record(const json& results, const std::string& estimator, const std::string& method) {
  for (const auto& r : results["results"])
    if (r["estimator"] == estimator && r["method"] == method) return r;
  FAIL("record " << estimator << "/" << method << " missing");
  return results;
}

void same_outputs(const fs::path& a, const fs::path& b) {
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    if (name == "manifest.json") continue;
    INFO(name.string());
    CHECK(slurp(entry.path()) == slurp(b / name));
  }
}

void write_network(const AttributedNetwork& net, const fs::path& dir) {
  std::ofstream e(dir / "edges.csv"), n(dir / "nodes.csv");
  write_edge_list_csv(net, e);
  write_node_attributes_csv(net, n);
}

}  // namespace

TEST_CASE("cli: usage errors") {
  CHECK(invoke({}).code == cli::kValidationError);
  CHECK(invoke({"bogus"}).code == cli::kValidationError);
  CHECK(invoke({"simulate-network"}).code == cli::kValidationError);  // --out missing
  const auto dir = scratch("usage");
  const auto r = invoke({"simulate-network", "--n", "0", "--out", dir.string()});
  CHECK(r.code == cli::kValidationError);
  CHECK(r.err.find("n must be >= 2") != std::string::npos);
  CHECK(invoke({"simulate-network", "--n", "ten", "--out", dir.string()}).code == cli::kValidationError);
  CHECK(invoke({"estimate", "--out", dir.string()}).code == cli::kValidationError);
  CHECK(invoke({"simulate-network", "--help"}).code == cli::kOk);
}

TEST_CASE("cli: simulate-network is deterministic and reports its stats") {
  const auto a = scratch("net_a"), b = scratch("net_b");
  REQUIRE(invoke({"simulate-network", "--n", "150", "--seed", "3", "--out", a.string()}).code == 0);
  REQUIRE(invoke({"simulate-network", "--n", "150", "--seed", "3", "--out", b.string(), "--workers", "2"}).code == 0);
  for (auto f : {"edges.csv", "nodes.csv", "stats.json", "manifest.json"}) CHECK(slurp(a / f) == slurp(b / f));
  const auto stats = load(a / "stats.json");
  CHECK(stats["nodes"] == 150);
  CHECK(stats["subgroup_counts"]["group"]["unsheltered"].get<int>() +
            stats["subgroup_counts"]["group"]["sheltered"].get<int>() ==
        150);
  CHECK(stats["terms"].size() > 0);

  const auto c = scratch("net_c");
  REQUIRE(invoke({"simulate-network", "--n", "150", "--seed", "4", "--out", c.string()}).code == 0);
  CHECK(slurp(a / "edges.csv") != slurp(c / "edges.csv"));
}

TEST_CASE("cli: bad model file names its line") {
  const auto dir = scratch("bad_model");
  spit(dir / "model.json", "{\n  \"terms\": [\n    {\"kind\": \"edges\"} {\"kind\": \"edges\"}\n  ],\n  \"theta\": [0, 0]\n}\n");
  const auto r = invoke({"simulate-network", "--n", "20", "--model", (dir / "model.json").string(), "--out",
                      (dir / "out").string()});
  CHECK(r.code == cli::kValidationError);
  CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("cli: config file with flag override") {
  const auto dir = scratch("config");
  spit(dir / "cfg.json", "{\"n\": 40, \"seed\": 9}");
  REQUIRE(invoke({"simulate-network", "--config", (dir / "cfg.json").string(), "--n", "30", "--out",
               (dir / "out").string()})
              .code == 0);
  const auto manifest = load(dir / "out" / "manifest.json");
  CHECK(manifest["command"] == "simulate-network");
  CHECK(manifest["config"]["n"] == 30);
  CHECK(manifest["config"]["seed"] == 9);
  spit(dir / "typo.json", "{\"nodes\": 40}");
  CHECK(invoke({"simulate-network", "--config", (dir / "typo.json").string(), "--out", (dir / "o2").string()}).code ==
        cli::kValidationError);
  spit(dir / "type.json", "{\"n\": \"forty\"}");
  CHECK(invoke({"simulate-network", "--config", (dir / "type.json").string(), "--out", (dir / "o3").string()}).code ==
        cli::kValidationError);
}

TEST_CASE("cli: simulate-rds then estimate, with replay") {
  const auto dir = scratch("pipeline");
  write_network(testing::random_net(400, 0.02, 5), dir);
  const auto rds = dir / "rds";
  REQUIRE(invoke({"simulate-rds", "--edges", (dir / "edges.csv").string(), "--nodes", (dir / "nodes.csv").string(),
               "--target-n", "150", "--seed", "2", "--out", rds.string()})
              .code == 0);
  const auto summary = load(rds / "summary.json");
  CHECK(summary["respondents"] == 150);
  CHECK(summary["seeds"] == 10);

  const auto est = dir / "est";
  const auto r = invoke({"estimate", "--sample", (rds / "sample.csv").string(), "--known-b", "1225", "--replicates",
                      "200", "--dump-replicates", "--sensitivity", "--delta-se", "analytic", "--out",
                      est.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto results = load(est / "results.json");
  const auto& mu = find_record(results, "mu_a", "bootstrap");
  const auto& total = find_record(results, "total_a", "bootstrap");
  const auto& delta = find_record(results, "total_a", "delta");
  find_record(results, "mu_a", "analytic");
  const double m = mu["point"];
  CHECK(total["point"].get<double>() == doctest::Approx(1225 * m / (1 - m)));
  CHECK(delta["point"].get<double>() == doctest::Approx(total["point"].get<double>()));
  CHECK(total["n"] == 150);
  CHECK(total["ci"][0].get<double>() <= total["ci"][1].get<double>());
  CHECK(total["level"] == 0.95);
  CHECK(total["settings"]["known_b"] == 1225.0);
  bool breakdown = false;
  for (const auto& rec : results["results"])
    breakdown |= rec["estimator"] == "proportion.gender.unsheltered.Female";
  CHECK(breakdown);

  std::istringstream reps(slurp(est / "replicates.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(reps, line)) ++rows;
  CHECK(rows == 201);
  CHECK(slurp(est / "sensitivity.csv").rfind("perturbation,point,se,ci_low,ci_high,shift,flagged,note\n", 0) == 0);

  // Replays reproduce every file.
  for (const auto& d : {rds, est}) {
    const auto again = dir / ("replay_" + d.filename().string());
    REQUIRE(invoke({"replay", "--manifest", (d / "manifest.json").string(), "--out", again.string(), "--workers",
                 "3"})
                .code == 0);
    same_outputs(d, again);
  }

  // Dropping two waves matches the sensitivity row for the same cut.
  const auto cut = dir / "cut";
  REQUIRE(invoke({"estimate", "--sample", (rds / "sample.csv").string(), "--known-b", "1225", "--replicates", "200",
               "--exclude-seeds", "--drop-waves", "2", "--out", cut.string()})
              .code == 0);
  const auto cut_total = find_record(load(cut / "results.json"), "total_a", "bootstrap");
  std::istringstream sens(slurp(est / "sensitivity.csv"));
  bool matched = false;
  while (std::getline(sens, line)) {
    if (line.rfind("drop_waves=2,", 0) != 0) continue;
    const double point = std::stod(line.substr(13));
    CHECK(point == doctest::Approx(cut_total["point"].get<double>()).epsilon(1e-12));
    matched = true;
  }
  CHECK(matched);
}

TEST_CASE("cli: census sample gives the exact proportion") {
  const auto dir = scratch("census");
  const auto net = testing::random_net(30, 0.2, 4);
  std::ofstream(dir / "census.csv") << [&] {
    std::ostringstream s;
    write_rds_sample_csv(edge_census_sample(net), s);
    return s.str();
  }();
  std::size_t n_a = 0, n = 0;
  for (NodeId i = 0; i < 30; ++i) {
    if (net.degree(i) == 0) continue;
    ++n;
    n_a += net.attributes().get(i, 0) == 0 ? 1 : 0;
  }
  const auto r = invoke({"estimate", "--sample", (dir / "census.csv").string(), "--known-b", "500", "--coupons", "1",
                      "--replicates", "50", "--out", (dir / "out").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto mu = find_record(load(dir / "out" / "results.json"), "mu_a", "bootstrap");
  CHECK(mu["point"].get<double>() == doctest::Approx(static_cast<double>(n_a) / n).epsilon(1e-12));
}

TEST_CASE("cli: sample errors and undefined estimators") {
  const auto dir = scratch("sample_errors");
  spit(dir / "bad.csv",
       "id,recruiter_id,wave,degree,group\n1,,0,3,sheltered\n2,1,1,0,sheltered\n3,1,1,x,sheltered\n");
  auto r = invoke({"estimate", "--sample", (dir / "bad.csv").string(), "--known-b", "10", "--out",
                (dir / "o1").string()});
  CHECK(r.code == cli::kValidationError);
  CHECK(r.err.find("sample:3") != std::string::npos);
  CHECK(r.err.find("sample:4") != std::string::npos);

  spit(dir / "one_way.csv", "id,recruiter_id,wave,degree,group\n1,,0,3,unsheltered\n2,1,1,2,sheltered\n");
  r = invoke({"estimate", "--sample", (dir / "one_way.csv").string(), "--known-b", "10", "--out",
           (dir / "o2").string()});
  CHECK(r.code == cli::kEstimatorUndefined);
  CHECK(r.err.find("no cross-ties") != std::string::npos);

  // Chain-free resamples cannot support the two-group estimator.
  spit(dir / "ok.csv",
       "id,recruiter_id,wave,degree,group\n1,,0,3,unsheltered\n2,1,1,2,sheltered\n3,2,2,2,unsheltered\n");
  r = invoke({"estimate", "--sample", (dir / "ok.csv").string(), "--known-b", "10", "--scheme", "respondent_iid",
           "--out", (dir / "o3").string()});
  CHECK(r.code == cli::kEstimatorUndefined);
  r = invoke({"estimate", "--sample", (dir / "ok.csv").string(), "--known-b", "0", "--out", (dir / "o4").string()});
  CHECK(r.code == cli::kValidationError);
  r = invoke({"estimate", "--sample", (dir / "missing.csv").string(), "--known-b", "5", "--out",
           (dir / "o5").string()});
  CHECK(r.code == cli::kValidationError);
}

TEST_CASE("cli: forecast matches the library") {
  const auto dir = scratch("forecast");
  spit(dir / "toy.csv", "year,unsheltered,sheltered\n2017,100,50\n2018,130,55\n2019,150,52\n2020,190,60\n2021,,64\n");
  const auto r = invoke({"forecast", "--series", (dir / "toy.csv").string(), "--search", "--out", (dir / "o").string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto doc = load(dir / "o" / "forecast.json");

  std::ifstream in(dir / "toy.csv");
  const auto series = read_pit_csv(in);
  const auto fit = fit_arima010_with_covariate(series);
  const std::vector<double> fut{std::log(64.0)};
  const auto f = forecast(fit, fut);
  CHECK(doc["fit"]["drift"].get<double>() == fit.drift);
  CHECK(doc["fit"]["beta_log_shelter"].get<double>() == fit.beta_log_shelter);
  CHECK(doc["fit"]["divisor"] == "dof");
  REQUIRE(doc["forecasts"].size() == 1);
  CHECK(doc["forecasts"][0]["estimator"] == "unsheltered.2021");
  CHECK(doc["forecasts"][0]["point"].get<double>() == f[0].point);
  CHECK(doc["forecasts"][0]["ci"][1].get<double>() == f[0].ci_high);
  CHECK(doc["order_search"]["candidates"].size() == 32);

  CHECK(invoke({"forecast", "--series", (dir / "toy.csv").string(), "--divisor", "n", "--out", (dir / "o2").string()})
            .code == cli::kValidationError);
}

TEST_CASE("cli: power sweep on the default grid") {
  const auto dir = scratch("power");
  write_network(testing::random_net(500, 0.015, 6), dir);
  const auto out = dir / "out";
  const auto r = invoke({"power", "--edges", (dir / "edges.csv").string(), "--nodes", (dir / "nodes.csv").string(),
                      "--sweep-replicates", "30", "--replicates", "30", "--out", out.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::istringstream csv(slurp(out / "power.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 7);
  const auto again = dir / "again";
  REQUIRE(invoke({"replay", "--manifest", (out / "manifest.json").string(), "--out", again.string(), "--workers", "2"})
              .code == 0);
  same_outputs(out, again);
}
