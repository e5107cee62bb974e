#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "rdskit/csv.hpp"
#include "rdskit/ergm.hpp"
#include "rdskit/error.hpp"

namespace rdskit {

namespace {

using ordered_json = nlohmann::ordered_json;

const char* kind_name(TermKind kind) {
  switch (kind) {
    case TermKind::edges: return "edges";
    case TermKind::degree: return "degree";
    case TermKind::nodefactor: return "nodefactor";
    case TermKind::nodematch: return "nodematch";
    case TermKind::offset_edges: return "offset_edges";
  }
  return "?";
}

TermKind kind_from_name(const std::string& name, const std::string& where) {
  if (name == "edges") return TermKind::edges;
  if (name == "degree") return TermKind::degree;
  if (name == "nodefactor") return TermKind::nodefactor;
  if (name == "nodematch") return TermKind::nodematch;
  if (name == "offset_edges") return TermKind::offset_edges;
  throw InputError(where + ": unknown term kind '" + name + "'");
}

std::string line_context(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

std::string model_to_json(const ErgmModel& model) {
  model.validate();
  ordered_json doc;
  ordered_json terms = ordered_json::array();
  for (const auto& t : model.terms) {
    ordered_json j;
    j["kind"] = kind_name(t.kind);
    if (t.kind == TermKind::degree) j["k"] = t.k;
    if (t.kind == TermKind::nodefactor || t.kind == TermKind::nodematch) j["attribute"] = t.attribute;
    if (t.kind == TermKind::nodefactor) j["level"] = t.level;
    terms.push_back(std::move(j));
  }
  doc["terms"] = std::move(terms);
  doc["theta"] = model.theta;
  ordered_json fixed = ordered_json::array();
  for (bool f : model.fixed) fixed.push_back(f);
  doc["fixed"] = std::move(fixed);
  return doc.dump(2) + "\n";
}

ErgmModel model_from_json(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("model file: malformed JSON at " + line_context(text, e.byte));
  }
  if (!doc.is_object()) throw InputError("model file: top level must be an object");
  for (const char* key : {"terms", "theta"})
    if (!doc.contains(key) || !doc[key].is_array())
      throw InputError(std::string("model file: '") + key + "' must be an array");

  ErgmModel model;
  const auto& terms = doc["terms"];
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string where = "model file: terms[" + std::to_string(i) + "]";
    const auto& j = terms[i];
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
      throw InputError(where + ": expected an object with a string 'kind'");
    ErgmTerm t;
    t.kind = kind_from_name(j["kind"].get<std::string>(), where);
    try {
      if (t.kind == TermKind::degree) t.k = j.at("k").get<int>();
      if (t.kind == TermKind::nodefactor || t.kind == TermKind::nodematch)
        t.attribute = j.at("attribute").get<std::string>();
      if (t.kind == TermKind::nodefactor) t.level = j.at("level").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError(where + ": " + e.what());
    }
    model.terms.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < doc["theta"].size(); ++i) {
    const auto& v = doc["theta"][i];
    if (!v.is_number()) throw InputError("model file: theta[" + std::to_string(i) + "] is not a number");
    model.theta.push_back(v.get<double>());
  }
  if (doc.contains("fixed")) {
    if (!doc["fixed"].is_array()) throw InputError("model file: 'fixed' must be an array");
    for (std::size_t i = 0; i < doc["fixed"].size(); ++i) {
      const auto& v = doc["fixed"][i];
      if (!v.is_boolean())
        throw InputError("model file: fixed[" + std::to_string(i) + "] is not a boolean");
      model.fixed.push_back(v.get<bool>());
    }
  } else {
    for (const auto& t : model.terms) model.fixed.push_back(t.kind == TermKind::offset_edges);
  }
  try {
    model.validate();
  } catch (const InputError& e) {
    throw InputError(std::string("model file: ") + e.what());
  }
  return model;
}

// ---------------------------------------------------------------------------

AttributeMargins nashville_margins() {
  AttributeMargins m;
  auto add = [&m](std::string attr, std::string group, std::string level, double p) {
    m.entries.push_back({std::move(attr), std::move(group), std::move(level), p});
  };
  add("group", "", "unsheltered", 597.0 / 2035.0);
  add("group", "", "sheltered", 1438.0 / 2035.0);
  add("gender", "unsheltered", "Female", 0.233);
  add("gender", "unsheltered", "Male", 0.767);
  add("gender", "sheltered", "Female", 0.275);
  add("gender", "sheltered", "Male", 0.725);
  add("age_band", "unsheltered", "18-24", 0.029);
  add("age_band", "unsheltered", "25+", 0.971);
  add("age_band", "sheltered", "18-24", 0.076);
  add("age_band", "sheltered", "25+", 0.924);
  add("race", "", "White", 0.52);
  add("race", "", "Black", 0.41);
  add("race", "", "LatinX", 0.03);
  add("race", "", "Asian", 0.01);
  add("race", "", "AIAN", 0.02);
  add("race", "", "NHPI", 0.01);
  for (const char* season : {"Summer", "Fall", "Winter", "Spring"}) add("season", "", season, 0.25);
  return m;
}

namespace {

// Largest-remainder apportionment of n items over proportions; ties in the
// fractional part go to the earlier level.
std::vector<std::size_t> apportion(const std::vector<double>& props, std::size_t n) {
  std::vector<std::size_t> counts(props.size());
  std::vector<double> frac(props.size());
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < props.size(); ++k) {
    const double exact = props[k] * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    frac[k] = exact - std::floor(exact);
    assigned += counts[k];
  }
  std::vector<std::size_t> order(props.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[order[r % order.size()]];
  return counts;
}

}  // namespace

NodeAttributes assign_attributes(std::shared_ptr<const NodeAttributeSchema> schema, std::size_t n,
                                 const AttributeMargins& margins, std::uint64_t seed) {
  NodeAttributes attrs(schema, n);
  Rng rng(seed);
  const std::size_t group_attr = schema->group_index();

  // attribute -> (group key -> per-level proportions); key "" = unconditional.
  std::map<std::size_t, std::map<std::string, std::vector<double>>> table;
  for (const auto& e : margins.entries) {
    const std::size_t a = schema->index_of(e.attribute);
    const Level l = schema->level_of(a, e.level);
    if (!e.group.empty()) {
      if (a == group_attr) throw InputError("margins: 'group' cannot be conditional on group");
      (void)schema->level_of(group_attr, e.group);
    }
    if (!(e.proportion >= 0.0 && e.proportion <= 1.0))
      throw InputError("margins: proportion for " + e.attribute + "=" + e.level + " not in [0,1]");
    auto& props = table[a][e.group];
    props.resize(schema->at(a).levels.size(), 0.0);
    props[l] += e.proportion;
  }
  for (const auto& [a, by_group] : table) {
    if (by_group.count("") && by_group.size() > 1)
      throw InputError("margins: '" + schema->at(a).name +
                       "' mixes conditional and unconditional rows");
    for (const auto& [g, props] : by_group) {
      const double total = std::accumulate(props.begin(), props.end(), 0.0);
      if (std::abs(total - 1.0) > 1e-6)
        throw InputError("margins: proportions for '" + schema->at(a).name +
                         (g.empty() ? "" : "' in group '" + g) + "' sum to " +
                         std::to_string(total));
    }
  }
  if (!table.count(group_attr) || !table[group_attr].count(""))
    throw InputError("margins: 'group' proportions are required");

  auto fill = [&](std::size_t a, const std::vector<NodeId>& nodes, const std::vector<double>& props) {
    const auto counts = apportion(props, nodes.size());
    std::vector<Level> labels;
    labels.reserve(nodes.size());
    for (std::size_t l = 0; l < counts.size(); ++l)
      labels.insert(labels.end(), counts[l], static_cast<Level>(l));
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t i = 0; i < nodes.size(); ++i) attrs.set(nodes[i], a, labels[i]);
  };

  std::vector<NodeId> everyone(n);
  std::iota(everyone.begin(), everyone.end(), NodeId{0});
  fill(group_attr, everyone, table[group_attr][""]);

  for (std::size_t a = 0; a < schema->size(); ++a) {
    if (a == group_attr || !table.count(a)) continue;
    const auto& by_group = table[a];
    if (by_group.count("")) {
      fill(a, everyone, by_group.at(""));
      continue;
    }
    for (std::size_t g = 0; g < schema->at(group_attr).levels.size(); ++g) {
      const auto& name = schema->at(group_attr).levels[g];
      auto it = by_group.find(name);
      if (it == by_group.end())
        throw InputError("margins: '" + schema->at(a).name + "' has no rows for group '" + name + "'");
      std::vector<NodeId> members;
      for (NodeId i = 0; i < n; ++i)
        if (attrs.get(i, group_attr) == g) members.push_back(i);
      fill(a, members, it->second);
    }
  }
  return attrs;
}

AttributedNetwork simulate_network(const ErgmModel& model, const AttributeMargins& margins,
                                   std::size_t n, std::uint64_t seed, std::uint64_t burn_in) {
  if (n < 2) throw InputError("network needs at least 2 nodes");
  auto schema = std::make_shared<const NodeAttributeSchema>(default_schema());
  model.validate(*schema);
  const auto attrs = assign_attributes(schema, n, margins, derive_seed(seed, 1));
  auto ctl = SimulationControl::for_nodes(n, derive_seed(seed, 2));
  if (burn_in > 0) ctl.burn_in = burn_in;
  return simulate(model, n, attrs, ctl);
}

AttributeMargins read_margins_csv(std::istream& in) {
  const auto table = csv::read(in, "margins");
  if (table.header != std::vector<std::string>{"attribute", "group", "level", "proportion"})
    throw InputError("margins: header must be 'attribute,group,level,proportion'");
  AttributeMargins m;
  for (const auto& row : table.rows) {
    double p = 0.0;
    try {
      std::size_t used = 0;
      p = std::stod(row.fields[3], &used);
      if (used != row.fields[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw InputError("margins:" + std::to_string(row.line) + ": bad proportion '" +
                       row.fields[3] + "'");
    }
    m.entries.push_back({row.fields[0], row.fields[1], row.fields[2], p});
  }
  return m;
}

void write_margins_csv(const AttributeMargins& margins, std::ostream& out) {
  out << "attribute,group,level,proportion\n";
  for (const auto& e : margins.entries)
    out << e.attribute << ',' << e.group << ',' << e.level << ','
        << std::setprecision(17) << e.proportion << '\n';
}

}  // namespace rdskit
