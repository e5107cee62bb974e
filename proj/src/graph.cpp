#include "rdskit/graph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "rdskit/csv.hpp"
#include "rdskit/error.hpp"

namespace rdskit {

NodeAttributeSchema::NodeAttributeSchema(std::vector<AttributeSpec> attributes)
    : attributes_(std::move(attributes)) {
  std::set<std::string> names;
  for (const auto& a : attributes_) {
    if (a.name.empty()) throw InputError("attribute with empty name");
    if (!names.insert(a.name).second) throw InputError("duplicate attribute '" + a.name + "'");
    if (a.levels.empty()) throw InputError("attribute '" + a.name + "' has no levels");
    if (a.levels.size() > 255) throw InputError("attribute '" + a.name + "' has too many levels");
    std::set<std::string> seen(a.levels.begin(), a.levels.end());
    if (seen.size() != a.levels.size())
      throw InputError("attribute '" + a.name + "' has duplicate levels");
    if (a.reference >= a.levels.size())
      throw InputError("attribute '" + a.name + "' reference level out of range");
  }
}

std::optional<std::size_t> NodeAttributeSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i)
    if (attributes_[i].name == name) return i;
  return std::nullopt;
}

std::size_t NodeAttributeSchema::index_of(std::string_view name) const {
  if (auto idx = find(name)) return *idx;
  throw InputError("unknown attribute '" + std::string(name) + "'");
}

std::optional<Level> NodeAttributeSchema::find_level(std::size_t attr,
                                                     std::string_view level) const {
  const auto& levels = attributes_.at(attr).levels;
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i] == level) return static_cast<Level>(i);
  return std::nullopt;
}

Level NodeAttributeSchema::level_of(std::size_t attr, std::string_view level) const {
  if (auto l = find_level(attr, level)) return *l;
  throw InputError("unknown level '" + std::string(level) + "' for attribute '" +
                   attributes_.at(attr).name + "'");
}

std::size_t NodeAttributeSchema::group_index() const {
  const auto idx = find(kGroupAttribute);
  if (!idx) throw InputError("schema has no 'group' attribute");
  if (attributes_[*idx].levels.size() != 2)
    throw InputError("'group' attribute must have exactly two levels");
  return *idx;
}

NodeAttributeSchema default_schema() {
  return NodeAttributeSchema({
      {"group", {"unsheltered", "sheltered"}, 1},
      {"gender", {"Female", "Male"}, 0},
      {"race", {"White", "Black", "LatinX", "Asian", "AIAN", "NHPI"}, 0},
      {"age_band", {"18-24", "25+"}, 1},
      {"season", {"Summer", "Fall", "Winter", "Spring"}, 0},
  });
}

// ---------------------------------------------------------------------------

NodeAttributes::NodeAttributes(std::shared_ptr<const NodeAttributeSchema> schema,
                               std::size_t node_count)
    : schema_(std::move(schema)), node_count_(node_count) {
  if (!schema_) throw InputError("null attribute schema");
  columns_.reserve(schema_->size());
  for (const auto& a : schema_->attributes())
    columns_.emplace_back(node_count, static_cast<Level>(a.reference));
}

NodeAttributes::NodeAttributes(std::shared_ptr<const NodeAttributeSchema> schema,
                               std::vector<std::vector<Level>> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
  if (!schema_) throw InputError("null attribute schema");
  if (columns_.size() != schema_->size())
    throw InputError("attribute column count does not match schema");
  node_count_ = columns_.empty() ? 0 : columns_.front().size();
  for (std::size_t a = 0; a < columns_.size(); ++a) {
    if (columns_[a].size() != node_count_)
      throw InputError("attribute columns have different lengths");
    const auto n_levels = schema_->at(a).levels.size();
    for (Level l : columns_[a])
      if (l >= n_levels)
        throw InputError("level index out of range for attribute '" + schema_->at(a).name + "'");
  }
}

void NodeAttributes::set(NodeId node, std::size_t attr, Level level) {
  if (node >= node_count_) throw InputError("node id out of range");
  if (level >= schema_->at(attr).levels.size()) throw InputError("level index out of range");
  columns_[attr][node] = level;
}

const std::string& NodeAttributes::label(NodeId node, std::size_t attr) const {
  return schema_->at(attr).levels[columns_.at(attr).at(node)];
}

bool NodeAttributes::operator==(const NodeAttributes& other) const {
  if (node_count_ != other.node_count_ || columns_ != other.columns_) return false;
  if (schema_ == other.schema_) return true;
  return schema_ && other.schema_ && *schema_ == *other.schema_;
}

// ---------------------------------------------------------------------------

AttributedNetwork::AttributedNetwork(NodeAttributes attributes, std::span<const Edge> edges)
    : attributes_(std::move(attributes)) {
  const std::size_t n = attributes_.node_count();
  std::vector<std::size_t> deg(n, 0);
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n)
      throw InputError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                       ") references a node >= " + std::to_string(n));
    if (a == b) throw InputError("self-loop on node " + std::to_string(a));
    ++deg[a];
    ++deg[b];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + deg[i];
  targets_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [a, b] : edges) {
    targets_[fill[a]++] = b;
    targets_[fill[b]++] = a;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto first = targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
    auto last = targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
    std::sort(first, last);
    if (std::adjacent_find(first, last) != last)
      throw InputError("duplicate edge at node " + std::to_string(i));
  }
}

void AttributedNetwork::check_node(NodeId node) const {
  if (node >= node_count())
    throw InputError("node id " + std::to_string(node) + " out of range (N=" +
                     std::to_string(node_count()) + ")");
}

std::size_t AttributedNetwork::degree(NodeId node) const {
  check_node(node);
  return offsets_[node + 1] - offsets_[node];
}

std::span<const NodeId> AttributedNetwork::neighbors(NodeId node) const {
  check_node(node);
  return {targets_.data() + offsets_[node], offsets_[node + 1] - offsets_[node]};
}

bool AttributedNetwork::has_edge(NodeId a, NodeId b) const {
  const auto nb = neighbors(a);
  check_node(b);
  return std::binary_search(nb.begin(), nb.end(), b);
}

std::vector<Edge> AttributedNetwork::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (NodeId i = 0; i < node_count(); ++i)
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k)
      if (targets_[k] > i) out.emplace_back(i, targets_[k]);
  return out;
}

std::size_t AttributedNetwork::isolate_count() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < node_count(); ++i)
    if (offsets_[i + 1] == offsets_[i]) ++count;
  return count;
}

bool AttributedNetwork::operator==(const AttributedNetwork& other) const {
  return offsets_ == other.offsets_ && targets_ == other.targets_ &&
         attributes_ == other.attributes_;
}

std::map<std::string, std::size_t> subgroup_counts(const AttributedNetwork& net,
                                                   std::string_view attr) {
  const auto& schema = net.schema();
  const std::size_t a = schema.index_of(attr);
  std::map<std::string, std::size_t> counts;
  for (const auto& level : schema.at(a).levels) counts[level] = 0;
  for (Level l : net.attributes().column(a)) ++counts[schema.at(a).levels[l]];
  return counts;
}

std::size_t cross_tie_total(const AttributedNetwork& net) {
  const std::size_t g = net.schema().group_index();
  const auto group = net.attributes().column(g);
  std::size_t total = 0;
  for (NodeId i = 0; i < net.node_count(); ++i)
    for (NodeId j : net.neighbors(i))
      if (j > i && group[i] != group[j]) ++total;
  return total;
}

// ---------------------------------------------------------------------------

void write_edge_list_csv(const AttributedNetwork& net, std::ostream& out) {
  out << "src,dst\n";
  for (const auto& [a, b] : net.edges()) out << a << ',' << b << '\n';
}

void write_node_attributes_csv(const AttributedNetwork& net, std::ostream& out) {
  const auto& schema = net.schema();
  out << "id";
  for (const auto& a : schema.attributes()) out << ',' << a.name;
  out << '\n';
  for (NodeId i = 0; i < net.node_count(); ++i) {
    out << i;
    for (std::size_t a = 0; a < schema.size(); ++a) out << ',' << net.attributes().label(i, a);
    out << '\n';
  }
}

AttributedNetwork read_network_csv(std::istream& edges, std::istream& nodes,
                                   std::shared_ptr<const NodeAttributeSchema> schema) {
  const auto node_table = csv::read(nodes, "nodes");
  if (node_table.header.empty() || node_table.header.front() != "id")
    throw InputError("nodes: first column must be 'id'");

  std::vector<std::size_t> column_of(schema->size());
  for (std::size_t a = 0; a < schema->size(); ++a) {
    const auto col = node_table.column(schema->at(a).name);
    if (!col) throw InputError("nodes: missing column '" + schema->at(a).name + "'");
    column_of[a] = *col;
  }

  std::unordered_map<std::string, NodeId> id_of;
  NodeAttributes attrs(schema, node_table.rows.size());
  std::vector<std::string> problems;
  for (std::size_t r = 0; r < node_table.rows.size(); ++r) {
    const auto& row = node_table.rows[r];
    const auto& token = row.fields[0];
    if (!id_of.emplace(token, static_cast<NodeId>(r)).second)
      problems.push_back("nodes:" + std::to_string(row.line) + ": duplicate id '" + token + "'");
    for (std::size_t a = 0; a < schema->size(); ++a) {
      const auto& value = row.fields[column_of[a]];
      if (auto level = schema->find_level(a, value))
        attrs.set(static_cast<NodeId>(r), a, *level);
      else
        problems.push_back("nodes:" + std::to_string(row.line) + ": unknown level '" + value +
                           "' for '" + schema->at(a).name + "'");
    }
  }

  const auto edge_table = csv::read(edges, "edges");
  if (edge_table.header != std::vector<std::string>{"src", "dst"})
    throw InputError("edges: header must be 'src,dst'");
  std::vector<Edge> edge_list;
  edge_list.reserve(edge_table.rows.size());
  for (const auto& row : edge_table.rows) {
    const auto a = id_of.find(row.fields[0]);
    const auto b = id_of.find(row.fields[1]);
    if (a == id_of.end() || b == id_of.end()) {
      problems.push_back("edges:" + std::to_string(row.line) + ": unknown node id");
      continue;
    }
    edge_list.emplace_back(std::min(a->second, b->second), std::max(a->second, b->second));
  }

  if (!problems.empty()) {
    std::string msg = "invalid network files:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw InputError(msg);
  }
  return AttributedNetwork(std::move(attrs), edge_list);
}

}  // namespace rdskit
