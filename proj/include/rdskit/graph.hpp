#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rdskit {

using NodeId = std::uint32_t;
/// Index of a categorical level within its attribute's level list.
using Level = std::uint8_t;

/// Name of the two-level attribute that splits the population into groups
/// A (level 0) and B (level 1).
inline constexpr std::string_view kGroupAttribute = "group";

struct AttributeSpec {
  std::string name;
  std::vector<std::string> levels;
  std::size_t reference = 0;  // index into levels

  bool operator==(const AttributeSpec&) const = default;
};

/// Ordered set of categorical attributes. Levels are unique per attribute and
/// the reference level must exist.
class NodeAttributeSchema {
 public:
  NodeAttributeSchema() = default;
  explicit NodeAttributeSchema(std::vector<AttributeSpec> attributes);

  std::size_t size() const noexcept { return attributes_.size(); }
  const std::vector<AttributeSpec>& attributes() const noexcept { return attributes_; }
  const AttributeSpec& at(std::size_t attr) const { return attributes_.at(attr); }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws InputError for an unknown attribute.
  std::size_t index_of(std::string_view name) const;
  std::optional<Level> find_level(std::size_t attr, std::string_view level) const;
  /// Throws InputError for an unknown level.
  Level level_of(std::size_t attr, std::string_view level) const;

  /// Index of the `group` attribute; throws InputError unless it exists with
  /// exactly two levels.
  std::size_t group_index() const;

  bool operator==(const NodeAttributeSchema&) const = default;

 private:
  std::vector<AttributeSpec> attributes_;
};

/// Schema with the factor levels of the Nashville reference model:
/// group {unsheltered, sheltered}, gender {Female*, Male},
/// race {White*, Black, LatinX, Asian, AIAN, NHPI}, age_band {18-24, 25+*},
/// season {Summer*, Fall, Winter, Spring}. (* = reference level)
NodeAttributeSchema default_schema();

/// Column-major table of categorical node attributes. Every node carries a
/// level for every attribute.
class NodeAttributes {
 public:
  NodeAttributes() = default;
  /// All nodes start at each attribute's reference level.
  NodeAttributes(std::shared_ptr<const NodeAttributeSchema> schema, std::size_t node_count);
  NodeAttributes(std::shared_ptr<const NodeAttributeSchema> schema,
                 std::vector<std::vector<Level>> columns);

  std::size_t node_count() const noexcept { return node_count_; }
  const NodeAttributeSchema& schema() const noexcept { return *schema_; }
  const std::shared_ptr<const NodeAttributeSchema>& schema_ptr() const noexcept { return schema_; }

  Level get(NodeId node, std::size_t attr) const { return columns_[attr][node]; }
  void set(NodeId node, std::size_t attr, Level level);
  std::span<const Level> column(std::size_t attr) const { return columns_.at(attr); }
  const std::string& label(NodeId node, std::size_t attr) const;

  bool operator==(const NodeAttributes& other) const;

 private:
  std::shared_ptr<const NodeAttributeSchema> schema_;
  std::size_t node_count_ = 0;
  std::vector<std::vector<Level>> columns_;
};

/// Undirected edge with first < second after normalization.
using Edge = std::pair<NodeId, NodeId>;

/// Immutable undirected simple graph with categorical node attributes.
/// Adjacency is stored in CSR form with sorted neighbor lists, so degree()
/// is O(1) and has_edge() is a binary search.
class AttributedNetwork {
 public:
  AttributedNetwork() = default;
  /// Throws InputError on self-loops, duplicate edges or endpoints >= N.
  AttributedNetwork(NodeAttributes attributes, std::span<const Edge> edges);

  std::size_t node_count() const noexcept { return attributes_.node_count(); }
  std::size_t edge_count() const noexcept { return targets_.size() / 2; }

  /// Throws InputError for an out-of-range node.
  std::size_t degree(NodeId node) const;
  std::span<const NodeId> neighbors(NodeId node) const;
  bool has_edge(NodeId a, NodeId b) const;

  /// Edges as (u, v) with u < v, sorted lexicographically.
  std::vector<Edge> edges() const;

  const NodeAttributes& attributes() const noexcept { return attributes_; }
  const NodeAttributeSchema& schema() const noexcept { return attributes_.schema(); }

  /// Number of degree-0 nodes. They are legal but can never be recruited.
  std::size_t isolate_count() const;

  bool operator==(const AttributedNetwork& other) const;

 private:
  void check_node(NodeId node) const;

  NodeAttributes attributes_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> targets_;
};

std::map<std::string, std::size_t> subgroup_counts(const AttributedNetwork& net,
                                                   std::string_view attr);

/// t_AB: number of edges joining a group-A node to a group-B node.
std::size_t cross_tie_total(const AttributedNetwork& net);

// Edge-list CSV (`src,dst`) and node-attribute CSV (`id,<attribute>...`).
// Node ids in the attribute file may be arbitrary tokens; they are mapped to
// dense ids in row order, and the edge file must reference the same tokens.
void write_edge_list_csv(const AttributedNetwork& net, std::ostream& out);
void write_node_attributes_csv(const AttributedNetwork& net, std::ostream& out);
AttributedNetwork read_network_csv(std::istream& edges, std::istream& nodes,
                                   std::shared_ptr<const NodeAttributeSchema> schema);

}  // namespace rdskit
