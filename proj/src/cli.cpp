#include "rdskit/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "rdskit/bootstrap.hpp"
#include "rdskit/ergm.hpp"
#include "rdskit/error.hpp"
#include "rdskit/estimators.hpp"
#include "rdskit/graph.hpp"
#include "rdskit/parallel.hpp"
#include "rdskit/power.hpp"
#include "rdskit/rds.hpp"
#include "rdskit/timeseries.hpp"

namespace rdskit::cli {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

enum class Kind { integer, number, text, flag, numbers, integers };

struct OptionDef {
  std::string key;
  Kind kind;
  ordered_json fallback;
  std::string help;
};

struct Context {
  fs::path out;
  std::size_t workers = 1;
  std::ostream& log;
};

using Runner = std::function<void(const ordered_json& cfg, Context& ctx)>;

struct CommandDef {
  std::string name;
  std::string help;
  std::vector<OptionDef> options;
  Runner run;
};

// ---------------------------------------------------------------------------
// Small helpers.

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string absolute_path(const std::string& path) {
  if (path.empty()) return path;
  return fs::weakly_canonical(fs::absolute(path)).string();
}

std::string flag_name(const std::string& key) {
  std::string s = key;
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

ordered_json parse_value(const OptionDef& def, const std::string& text) {
  auto fail = [&]() -> ordered_json {
    throw InputError("option " + flag_name(def.key) + ": cannot parse '" + text + "'");
  };
  auto to_int = [&](const std::string& s) -> std::int64_t {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail();
    return 0;
  };
  auto to_double = [&](const std::string& s) -> double {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail();
    return 0.0;
  };
  switch (def.kind) {
    case Kind::integer: return to_int(text);
    case Kind::number: return to_double(text);
    case Kind::text: return text;
    case Kind::flag:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      return fail();
    case Kind::numbers:
    case Kind::integers: {
      ordered_json arr = ordered_json::array();
      if (text.empty()) return arr;
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (def.kind == Kind::numbers)
          arr.push_back(to_double(item));
        else
          arr.push_back(to_int(item));
      }
      return arr;
    }
  }
  return fail();
}

ordered_json check_json_value(const OptionDef& def, const ordered_json& v) {
  auto bad = [&]() -> ordered_json {
    throw InputError("config key '" + def.key + "' has the wrong type");
  };
  switch (def.kind) {
    case Kind::integer:
      if (!v.is_number_integer()) return bad();
      return v;
    case Kind::number:
      if (!v.is_number()) return bad();
      return v.get<double>();
    case Kind::text:
      if (!v.is_string()) return bad();
      return v;
    case Kind::flag:
      if (!v.is_boolean()) return bad();
      return v;
    case Kind::numbers:
    case Kind::integers: {
      if (!v.is_array()) return bad();
      ordered_json arr = ordered_json::array();
      for (const auto& x : v) {
        if (def.kind == Kind::integers ? !x.is_number_integer() : !x.is_number()) return bad();
        arr.push_back(def.kind == Kind::numbers ? ordered_json(x.get<double>()) : x);
      }
      return arr;
    }
  }
  return bad();
}

/// Defaults, then the config file, then explicit flags.
ordered_json resolve(const CommandDef& def, const ordered_json* file,
                     const std::map<std::string, std::string>& flags) {
  ordered_json cfg = ordered_json::object();
  for (const auto& o : def.options) cfg[o.key] = o.fallback;
  if (file) {
    if (!file->is_object()) throw InputError("config must be a JSON object");
    for (const auto& [key, value] : file->items()) {
      auto it = std::find_if(def.options.begin(), def.options.end(),
                             [&](const OptionDef& o) { return o.key == key; });
      if (it == def.options.end())
        throw InputError("unknown config key '" + key + "' for " + def.name);
      cfg[key] = check_json_value(*it, value);
    }
  }
  for (const auto& o : def.options)
    if (auto it = flags.find(o.key); it != flags.end()) cfg[o.key] = parse_value(o, it->second);
  for (const auto& o : def.options)
    if (o.key == "sample" || o.key == "edges" || o.key == "nodes" || o.key == "model" ||
        o.key == "margins" || o.key == "series")
      cfg[o.key] = absolute_path(cfg[o.key].get<std::string>());
  return cfg;
}

ordered_json parse_json_file(const std::string& path, const std::string& what) {
  const std::string text = read_file(path);
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(what + " '" + path + "' is not valid JSON (byte " + std::to_string(e.byte) + ")");
  }
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json record(const std::string& estimator, const EstimateWithCi& e, ordered_json settings) {
  ordered_json r;
  r["estimator"] = estimator;
  r["point"] = e.point;
  r["se"] = e.se;
  r["ci"] = {e.ci_low, e.ci_high};
  r["level"] = e.level;
  r["method"] = std::string(to_string(e.method));
  r["n"] = e.n;
  r["settings"] = std::move(settings);
  return r;
}

std::uint64_t u64(const ordered_json& cfg, const char* key) {
  const auto v = cfg.at(key).get<std::int64_t>();
  if (v < 0) throw InputError(std::string(key) + " must be >= 0");
  return static_cast<std::uint64_t>(v);
}

std::size_t positive(const ordered_json& cfg, const char* key) {
  const auto v = cfg.at(key).get<std::int64_t>();
  if (v < 1) throw InputError(std::string(key) + " must be >= 1");
  return static_cast<std::size_t>(v);
}

std::string text(const ordered_json& cfg, const char* key) { return cfg.at(key).get<std::string>(); }

std::shared_ptr<const NodeAttributeSchema> shared_schema() {
  static const auto schema = std::make_shared<const NodeAttributeSchema>(default_schema());
  return schema;
}

AttributedNetwork load_network(const ordered_json& cfg) {
  const auto edges_path = text(cfg, "edges");
  const auto nodes_path = text(cfg, "nodes");
  if (edges_path.empty() || nodes_path.empty()) throw InputError("--edges and --nodes are required");
  auto edges = open_input(edges_path);
  auto nodes = open_input(nodes_path);
  return read_network_csv(edges, nodes, shared_schema());
}

ErgmModel load_model(const ordered_json& cfg) {
  const auto path = text(cfg, "model");
  return path.empty() ? nashville_model() : model_from_json(read_file(path));
}

AttributeMargins load_margins(const ordered_json& cfg) {
  const auto path = text(cfg, "margins");
  if (path.empty()) return nashville_margins();
  auto in = open_input(path);
  return read_margins_csv(in);
}

RdsDesign design_from(const ordered_json& cfg) {
  RdsDesign d;
  d.n_seeds = positive(cfg, "n_seeds");
  d.seed_rule = seed_rule_from_string(text(cfg, "seed_rule"));
  for (const auto& s : cfg.at("fixed_seeds")) {
    if (s.get<std::int64_t>() < 0) throw InputError("fixed seeds must be >= 0");
    d.fixed_seeds.push_back(static_cast<NodeId>(s.get<std::int64_t>()));
  }
  if (d.seed_rule == SeedRule::fixed_list) d.n_seeds = std::max<std::size_t>(d.fixed_seeds.size(), 1);
  d.coupon_limit = static_cast<int>(positive(cfg, "coupons"));
  d.seed = u64(cfg, "seed");
  return d;
}

BootstrapPlan plan_from(const ordered_json& cfg, std::size_t workers) {
  BootstrapPlan p;
  p.replicates = positive(cfg, "replicates");
  p.level = cfg.at("level").get<double>();
  p.seed = u64(cfg, "seed");
  const auto scheme = text(cfg, "scheme");
  if (scheme == "tree")
    p.scheme = BootstrapScheme::tree;
  else if (scheme == "respondent_iid")
    p.scheme = BootstrapScheme::respondent_iid;
  else
    throw InputError("unknown bootstrap scheme '" + scheme + "'");
  p.workers = workers;
  return p;
}

// ---------------------------------------------------------------------------
// Commands.

void cmd_simulate_network(const ordered_json& cfg, Context& ctx) {
  const auto n_raw = cfg.at("n").get<std::int64_t>();
  if (n_raw < 2) throw InputError("n must be >= 2");
  const auto n = static_cast<std::size_t>(n_raw);
  const auto model = load_model(cfg);
  const auto margins = load_margins(cfg);
  const auto net = simulate_network(model, margins, n, u64(cfg, "seed"), u64(cfg, "burn_in"));

  std::ostringstream edges, nodes;
  write_edge_list_csv(net, edges);
  write_node_attributes_csv(net, nodes);
  write_file(ctx.out / "edges.csv", edges.str());
  write_file(ctx.out / "nodes.csv", nodes.str());

  ordered_json stats;
  stats["nodes"] = net.node_count();
  stats["edges"] = net.edge_count();
  stats["isolates"] = net.isolate_count();
  stats["cross_ties"] = cross_tie_total(net);
  ordered_json counts = ordered_json::object();
  for (const auto& a : net.schema().attributes()) {
    ordered_json c = ordered_json::object();
    for (const auto& [level, count] : subgroup_counts(net, a.name)) c[level] = count;
    counts[a.name] = std::move(c);
  }
  stats["subgroup_counts"] = std::move(counts);
  const auto s = sufficient_stats(net, model.terms);
  ordered_json terms = ordered_json::array();
  for (std::size_t t = 0; t < model.terms.size(); ++t)
    terms.push_back({{"term", model.terms[t].label()}, {"theta", model.theta[t]}, {"stat", s[t]}});
  stats["terms"] = std::move(terms);
  write_file(ctx.out / "stats.json", dump(stats));
  ctx.log << "network: " << net.node_count() << " nodes, " << net.edge_count() << " edges\n";
}

void cmd_simulate_rds(const ordered_json& cfg, Context& ctx) {
  const auto net = load_network(cfg);
  RdsDesign design = design_from(cfg);
  design.target_n = positive(cfg, "target_n");
  design.degree_noise_sdlog = cfg.at("degree_noise").get<double>();
  const auto sample = simulate_rds(net, design);

  std::ostringstream csv;
  write_rds_sample_csv(sample, csv);
  write_file(ctx.out / "sample.csv", csv.str());
  const auto r = cross_recruit_counts(sample);
  ordered_json summary;
  summary["respondents"] = sample.size();
  summary["seeds"] = sample.seed_ids().size();
  summary["max_wave"] = sample.max_wave();
  summary["shortfall"] = sample.shortfall();
  summary["recruitments"] = {{r[0][0], r[0][1]}, {r[1][0], r[1][1]}};
  write_file(ctx.out / "summary.json", dump(summary));
  ctx.log << "sample: " << sample.size() << " respondents" << (sample.shortfall() ? " (shortfall)" : "")
          << "\n";
}

void cmd_estimate(const ordered_json& cfg, Context& ctx) {
  const auto path = text(cfg, "sample");
  if (path.empty()) throw InputError("--sample is required");
  const double known_b = cfg.at("known_b").get<double>();
  if (!(known_b >= 1.0)) throw InputError("--known-b must be >= 1");
  auto in = open_input(path);
  const auto full = read_rds_sample_csv(in, default_schema(), static_cast<int>(positive(cfg, "coupons")));

  int drop = static_cast<int>(cfg.at("drop_waves").get<std::int64_t>());
  if (drop < 0) throw InputError("--drop-waves must be >= 0");
  if (cfg.at("exclude_seeds").get<bool>()) drop = std::max(drop, 1);
  const RdsSample sample = drop_early_waves(full, drop);
  const auto plan = plan_from(cfg, ctx.workers);

  const ordered_json base_settings = {{"known_b", known_b},
                                      {"drop_waves", drop},
                                      {"replicates", plan.replicates},
                                      {"scheme", text(cfg, "scheme")},
                                      {"seed", plan.seed}};
  ordered_json results = ordered_json::array();

  const auto summary = sh_proportion(sample);
  auto mu_stat = [](const RdsSample& s) { return sh_proportion(s).mu_a; };
  auto total_stat = [known_b](const RdsSample& s) { return total_from_known(sh_proportion(s).mu_a, known_b); };

  const auto mu_boot = bootstrap(sample, plan, mu_stat);
  auto settings = base_settings;
  settings["mean_degree_a"] = summary.mean_degree_a;
  settings["mean_degree_b"] = summary.mean_degree_b;
  settings["c_ab"] = summary.c_ab;
  settings["c_ba"] = summary.c_ba;
  results.push_back(record("mu_a", mu_boot.estimate, settings));

  const auto total_boot = bootstrap(sample, plan, total_stat);
  results.push_back(record("total_a", total_boot.estimate, base_settings));

  const auto se_method = text(cfg, "delta_se");
  EstimateWithCi mu_for_delta;
  if (se_method == "bootstrap") {
    mu_for_delta = mu_boot.estimate;
  } else if (se_method == "analytic") {
    mu_for_delta = analytic_mu(sample, plan.level);
    results.push_back(record("mu_a", mu_for_delta, base_settings));
  } else {
    throw InputError("--delta-se must be 'bootstrap' or 'analytic'");
  }
  auto delta_settings = base_settings;
  delta_settings["mu_se_method"] = se_method;
  results.push_back(record("total_a", delta_ci_total(mu_for_delta, known_b), delta_settings));

  for (const auto& attr : sample.schema().attributes()) {
    if (attr.name == kGroupAttribute) continue;
    for (const auto& cell : breakdown_with_ci(sample, attr.name, plan)) {
      auto s = base_settings;
      s["flagged"] = cell.estimate.flagged;
      results.push_back(
          record("proportion." + attr.name + "." + cell.group + "." + cell.level, cell.estimate, s));
    }
  }

  ordered_json doc;
  doc["results"] = std::move(results);
  write_file(ctx.out / "results.json", dump(doc));
  if (cfg.at("dump_replicates").get<bool>()) {
    std::ostringstream csv;
    write_replicates_csv(total_boot, csv);
    write_file(ctx.out / "replicates.csv", csv.str());
  }
  if (cfg.at("sensitivity").get<bool>()) {
    SensitivityProtocol protocol;
    protocol.plan = plan;
    protocol.known_b = known_b;
    protocol.drop_waves.clear();
    for (const auto& w : cfg.at("sensitivity_waves")) protocol.drop_waves.push_back(static_cast<int>(w.get<std::int64_t>()));
    std::ostringstream csv;
    csv.precision(17);
    csv << "perturbation,point,se,ci_low,ci_high,shift,flagged,note\n";
    for (const auto& row : seed_sensitivity(sample, protocol)) {
      csv << row.label << ',';
      if (row.estimate)
        csv << row.estimate->point << ',' << row.estimate->se << ',' << row.estimate->ci_low << ','
            << row.estimate->ci_high << ',' << row.shift << ',' << (row.flagged ? 1 : 0) << ',';
      else
        csv << "NA,NA,NA,NA,NA,0,";
      std::string note = row.note;
      std::replace(note.begin(), note.end(), ',', ';');
      csv << note << '\n';
    }
    write_file(ctx.out / "sensitivity.csv", csv.str());
  }
  ctx.log << "total_a: " << total_boot.estimate.point << " [" << total_boot.estimate.ci_low << ", "
          << total_boot.estimate.ci_high << "]\n";
}

void cmd_power(const ordered_json& cfg, Context& ctx) {
  AttributedNetwork net;
  if (text(cfg, "edges").empty() && text(cfg, "nodes").empty()) {
    const auto n = positive(cfg, "n");
    net = simulate_network(load_model(cfg), load_margins(cfg), n, u64(cfg, "network_seed"));
  } else {
    net = load_network(cfg);
  }
  PowerSweepConfig sweep;
  sweep.fractions = cfg.at("fractions").get<std::vector<double>>();
  sweep.replicates = positive(cfg, "sweep_replicates");
  sweep.design = design_from(cfg);
  sweep.plan = plan_from(cfg, 1);
  sweep.seed = u64(cfg, "seed");
  sweep.workers = ctx.workers;
  const double known_b = cfg.at("known_b").get<double>();
  sweep.truth = known_b > 0.0 ? PowerTruth::scaled(net, known_b) : PowerTruth::from_network(net);
  const auto rows = run_power_sweep(net, sweep);
  std::ostringstream csv;
  write_power_csv(rows, csv);
  write_file(ctx.out / "power.csv", csv.str());
  ctx.log << "power: " << rows.size() << " fractions, truth " << sweep.truth.total_a << "\n";
}

void cmd_forecast(const ordered_json& cfg, Context& ctx) {
  const auto path = text(cfg, "series");
  if (path.empty()) throw InputError("--series is required");
  auto in = open_input(path);
  PitSeries series = read_pit_csv(in);
  const auto divisor_name = text(cfg, "divisor");
  VarianceDivisor divisor;
  if (divisor_name == "dof")
    divisor = VarianceDivisor::residual_dof;
  else if (divisor_name == "ml")
    divisor = VarianceDivisor::ml;
  else
    throw InputError("--divisor must be 'dof' or 'ml'");
  const auto fit = fit_arima010_with_covariate(series, divisor);

  std::vector<double> future = series.future_sheltered;
  const auto flag_future = cfg.at("future_sheltered").get<std::vector<double>>();
  if (!flag_future.empty()) future = flag_future;
  const auto horizon_raw = cfg.at("horizon").get<std::int64_t>();
  if (horizon_raw < 0) throw InputError("--horizon must be >= 0");
  std::size_t horizon = horizon_raw > 0 ? static_cast<std::size_t>(horizon_raw) : future.size();
  if (horizon == 0) throw InputError("nothing to forecast: give --horizon or future covariate rows");
  std::vector<double> future_log;
  for (std::size_t h = 0; h < horizon; ++h) {
    const double x = h < future.size() ? future[h] : (future.empty() ? series.sheltered.back() : future.back());
    if (!(x > 0.0)) throw InputError("future shelter counts must be > 0");
    future_log.push_back(std::log(x));
  }
  const double level = cfg.at("level").get<double>();
  const auto points = forecast(fit, future_log, level);

  ordered_json doc;
  ordered_json f;
  f["drift"] = fit.drift;
  f["se_drift"] = fit.se_drift;
  f["beta_log_shelter"] = fit.beta_log_shelter;
  f["se_beta"] = fit.se_beta;
  f["sigma2"] = fit.sigma2;
  f["sigma2_ml"] = fit.sigma2_ml;
  f["divisor"] = divisor_name;
  f["log_likelihood"] = fit.log_likelihood;
  f["aic"] = fit.aic;
  f["n_obs"] = fit.n_obs;
  f["gaps"] = series.gaps();
  doc["fit"] = std::move(f);
  ordered_json recs = ordered_json::array();
  for (std::size_t h = 0; h < points.size(); ++h) {
    const int year = series.years.back() + static_cast<int>(h + 1);
    recs.push_back(record("unsheltered." + std::to_string(year), points[h],
                          {{"year", year}, {"horizon", h + 1}, {"log_shelter", future_log[h]}}));
  }
  doc["forecasts"] = std::move(recs);
  if (cfg.at("search").get<bool>()) {
    const auto search = select_arima_order(series);
    ordered_json cands = ordered_json::array();
    for (const auto& c : search.candidates) {
      ordered_json j;
      j["model"] = c.label();
      j["feasible"] = c.feasible;
      if (c.feasible) {
        j["aic"] = c.aic;
        j["log_likelihood"] = c.log_likelihood;
        j["sigma2_ml"] = c.sigma2_ml;
        j["phi"] = c.phi;
        j["theta"] = c.theta;
        j["coefficients"] = c.coefficients;
        j["n_eff"] = c.n_eff;
      } else {
        j["reason"] = c.reason;
      }
      cands.push_back(std::move(j));
    }
    doc["order_search"] = {{"best", search.candidates[search.best].label()}, {"candidates", std::move(cands)}};
  }
  write_file(ctx.out / "forecast.json", dump(doc));
  ctx.log << "forecast: " << points.back().point << " at h=" << points.size() << "\n";
}

// ---------------------------------------------------------------------------

std::vector<OptionDef> design_options() {
  return {
      {"n_seeds", Kind::integer, 10, "number of seeds"},
      {"seed_rule", Kind::text, "degree_proportional", "degree_proportional | uniform | fixed_list"},
      {"fixed_seeds", Kind::integers, ordered_json::array(), "seed node ids for fixed_list"},
      {"coupons", Kind::integer, 3, "coupon limit per respondent"},
  };
}

std::vector<OptionDef> bootstrap_options() {
  return {
      {"replicates", Kind::integer, 1000, "bootstrap replicates"},
      {"level", Kind::number, 0.95, "confidence level"},
      {"scheme", Kind::text, "tree", "tree | respondent_iid"},
  };
}

std::vector<CommandDef> commands() {
  std::vector<CommandDef> out;
  out.push_back({"simulate-network",
                 "simulate an attributed network from an ERGM",
                 {{"n", Kind::integer, 2035, "number of nodes"},
                  {"seed", Kind::integer, 1, "master seed"},
                  {"model", Kind::text, "", "model JSON (default: built-in reference model)"},
                  {"margins", Kind::text, "", "attribute margins CSV (default: built-in)"},
                  {"burn_in", Kind::integer, 0, "proposals before output (0: five per dyad)"}},
                 cmd_simulate_network});

  auto rds_opts = design_options();
  rds_opts.insert(rds_opts.begin(), {{"edges", Kind::text, "", "edge list CSV"},
                                     {"nodes", Kind::text, "", "node attribute CSV"}});
  rds_opts.push_back({"target_n", Kind::integer, 246, "target sample size"});
  rds_opts.push_back({"seed", Kind::integer, 1, "master seed"});
  rds_opts.push_back({"degree_noise", Kind::number, 0.0, "sdlog of reported-degree noise"});
  out.push_back({"simulate-rds", "simulate RDS recruitment on a network", rds_opts, cmd_simulate_rds});

  std::vector<OptionDef> est_opts = {
      {"sample", Kind::text, "", "RDS sample CSV"},
      {"known_b", Kind::number, 0.0, "known size of group B (sheltered)"},
      {"coupons", Kind::integer, 3, "coupon limit used in the field"},
      {"seed", Kind::integer, 1, "bootstrap seed"},
      {"exclude_seeds", Kind::flag, false, "drop seeds before estimation"},
      {"drop_waves", Kind::integer, 0, "drop waves below this number"},
      {"delta_se", Kind::text, "bootstrap", "se of mu for the delta interval: bootstrap | analytic"},
      {"dump_replicates", Kind::flag, false, "write replicates.csv for the total"},
      {"sensitivity", Kind::flag, false, "write sensitivity.csv"},
      {"sensitivity_waves", Kind::integers, ordered_json::array({2}), "wave cutoffs for sensitivity"},
  };
  for (auto& o : bootstrap_options()) est_opts.push_back(o);
  out.push_back({"estimate", "estimate proportions and totals from an RDS sample", est_opts, cmd_estimate});

  std::vector<OptionDef> pow_opts = {
      {"edges", Kind::text, "", "edge list CSV (default: simulate the reference network)"},
      {"nodes", Kind::text, "", "node attribute CSV"},
      {"n", Kind::integer, 2035, "nodes of the simulated reference network"},
      {"model", Kind::text, "", "model JSON for the simulated network"},
      {"margins", Kind::text, "", "margins CSV for the simulated network"},
      {"network_seed", Kind::integer, 1, "seed of the simulated network"},
      {"fractions", Kind::numbers, ordered_json::array({0.02, 0.05, 0.10, 0.20, 0.30, 0.50}),
       "sampled population fractions"},
      {"sweep_replicates", Kind::integer, 100, "pipelines per fraction"},
      {"known_b", Kind::number, 0.0, "known group-B size (0: realized count)"},
      {"seed", Kind::integer, 1, "master seed"},
  };
  for (auto& o : design_options()) pow_opts.push_back(o);
  for (auto& o : bootstrap_options()) pow_opts.push_back(o);
  out.push_back({"power", "power-analysis sweep over sample fractions", pow_opts, cmd_power});

  out.push_back({"forecast",
                 "fit ARIMA(0,1,0) with drift and log shelter covariate, then forecast",
                 {{"series", Kind::text, "", "CSV year,unsheltered,sheltered"},
                  {"future_sheltered", Kind::numbers, ordered_json::array(), "shelter counts for future years"},
                  {"horizon", Kind::integer, 0, "steps ahead (0: number of future covariate values)"},
                  {"level", Kind::number, 0.95, "interval level"},
                  {"divisor", Kind::text, "dof", "sigma2 divisor: dof | ml"},
                  {"search", Kind::flag, false, "also run the AIC order search"}},
                 cmd_forecast});
  return out;
}

int execute(const CommandDef& def, const ordered_json& cfg, const std::string& out_dir,
            std::size_t workers, std::ostream& log) {
  if (out_dir.empty()) throw InputError("--out is required");
  fs::create_directories(out_dir);
  Context ctx{fs::path(out_dir), workers, log};
  def.run(cfg, ctx);
  ordered_json manifest;
  manifest["command"] = def.name;
  manifest["config"] = cfg;
  write_file(ctx.out / "manifest.json", dump(manifest));
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto defs = commands();
  CLI::App app{"rdskit: respondent-driven sampling simulation and estimation"};
  app.require_subcommand(1);

  struct Bound {
    CLI::App* sub;
    std::string config;
    std::string out;
    std::size_t workers = 0;
    std::map<std::string, std::string> raw;
    std::map<std::string, CLI::Option*> opts;
    std::map<std::string, bool> flags;
  };
  std::vector<Bound> bound(defs.size());
  for (std::size_t c = 0; c < defs.size(); ++c) {
    auto& b = bound[c];
    b.sub = app.add_subcommand(defs[c].name, defs[c].help);
    b.sub->add_option("--config", b.config, "JSON config; flags override it");
    b.sub->add_option("--out", b.out, "output directory")->required();
    b.sub->add_option("--workers", b.workers, "worker threads (default: RDSKIT_WORKERS or all cores)");
    for (const auto& o : defs[c].options) {
      if (o.kind == Kind::flag)
        b.opts[o.key] = b.sub->add_flag(flag_name(o.key), b.flags[o.key], o.help);
      else
        b.opts[o.key] = b.sub->add_option(flag_name(o.key), b.raw[o.key], o.help);
    }
  }
  std::string manifest_path;
  std::string replay_out;
  std::size_t replay_workers = 0;
  auto* replay = app.add_subcommand("replay", "re-run a command from its manifest.json");
  replay->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();
  replay->add_option("--out", replay_out, "output directory")->required();
  replay->add_option("--workers", replay_workers, "worker threads");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  }

  try {
    if (replay->parsed()) {
      const auto manifest = parse_json_file(manifest_path, "manifest");
      if (!manifest.is_object() || !manifest.contains("command") || !manifest["command"].is_string() ||
          !manifest.contains("config"))
        throw InputError("manifest must have 'command' and 'config'");
      const auto name = manifest["command"].get<std::string>();
      auto it = std::find_if(defs.begin(), defs.end(), [&](const CommandDef& d) { return d.name == name; });
      if (it == defs.end()) throw InputError("manifest names unknown command '" + name + "'");
      const auto cfg = resolve(*it, &manifest["config"], {});
      return execute(*it, cfg, replay_out, replay_workers ? replay_workers : default_workers(), err);
    }
    for (std::size_t c = 0; c < defs.size(); ++c) {
      auto& b = bound[c];
      if (!b.sub->parsed()) continue;
      std::optional<ordered_json> file;
      if (!b.config.empty()) file = parse_json_file(b.config, "config");
      std::map<std::string, std::string> given;
      for (const auto& o : defs[c].options) {
        if (b.opts[o.key]->count() == 0) continue;
        given[o.key] = o.kind == Kind::flag ? (b.flags[o.key] ? "true" : "false") : b.raw[o.key];
      }
      const auto cfg = resolve(defs[c], file ? &*file : nullptr, given);
      return execute(defs[c], cfg, b.out, b.workers ? b.workers : default_workers(), err);
    }
  } catch (const EstimatorUndefined& e) {
    err << "error: " << e.what() << "\n";
    return kEstimatorUndefined;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace rdskit::cli
