#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdskit/graph.hpp"
#include "rdskit/random.hpp"

namespace rdskit {

enum class TermKind { edges, degree, nodefactor, nodematch, offset_edges };

/// One sufficient statistic of an exponential-family random graph model.
struct ErgmTerm {
  TermKind kind = TermKind::edges;
  int k = 0;              // degree(k)
  std::string attribute;  // nodefactor, nodematch
  std::string level;      // nodefactor

  static ErgmTerm edges() { return {TermKind::edges, 0, {}, {}}; }
  static ErgmTerm offset_edges() { return {TermKind::offset_edges, 0, {}, {}}; }
  static ErgmTerm degree(int k) { return {TermKind::degree, k, {}, {}}; }
  static ErgmTerm nodefactor(std::string attr, std::string level) {
    return {TermKind::nodefactor, 0, std::move(attr), std::move(level)};
  }
  static ErgmTerm nodematch(std::string attr) { return {TermKind::nodematch, 0, std::move(attr), {}}; }

  /// Human-readable label, e.g. "degree3", "nodefactor.race.Black".
  std::string label() const;

  bool operator==(const ErgmTerm&) const = default;
};

/// Terms with coefficients in log-odds units. Fixed coefficients (offsets)
/// are never changed by fitting.
struct ErgmModel {
  std::vector<ErgmTerm> terms;
  std::vector<double> theta;
  std::vector<bool> fixed;

  /// Throws InputError if lengths disagree, a coefficient is not finite, or
  /// a term is malformed (degree k < 1, missing attribute name).
  void validate() const;
  /// validate() plus: every attribute/level referenced exists in `schema`.
  void validate(const NodeAttributeSchema& schema) const;

  bool operator==(const ErgmModel&) const = default;
};

/// The Nashville reference model: offset(N) -6.342 (fixed), edges 2.037,
/// degree2..degree6, season/race/gender node factors and gender homophily.
ErgmModel nashville_model();

struct SimulationControl {
  std::uint64_t burn_in = 0;  // proposals before the first retained state
  std::uint64_t thin = 1;     // proposals between retained draws, >= 1
  std::uint64_t seed = 1;

  /// burn_in = 5 and thin = 1 proposals per dyad of an n-node graph.
  static SimulationControl for_nodes(std::size_t n, std::uint64_t seed);
};

std::uint64_t dyad_count(std::size_t n) noexcept;

std::vector<double> sufficient_stats(const AttributedNetwork& net, std::span<const ErgmTerm> terms);

/// theta . (s(g + ij) - s(g - ij)) for the dyad {i, j}, from change
/// statistics on the current degrees.
double log_odds_of_toggle(const ErgmModel& model, const AttributedNetwork& net, NodeId i, NodeId j);

/// Change-statistic vector s(g + ij) - s(g - ij).
std::vector<double> change_stats(std::span<const ErgmTerm> terms, const AttributedNetwork& net,
                                 NodeId i, NodeId j);

namespace detail {
/// A term resolved against a schema.
struct BoundTerm {
  TermKind kind;
  int k;
  std::size_t attr;
  Level level;
};
std::vector<BoundTerm> bind_terms(std::span<const ErgmTerm> terms, const NodeAttributeSchema& schema);
}  // namespace detail

/// Metropolis edge-toggle chain. Each proposal picks a dyad uniformly at
/// random and toggles it with probability min(1, exp(+-log-odds)). The
/// sufficient statistics of the current state are maintained incrementally.
class ErgmChain {
 public:
  /// Starts from the empty graph on attributes.node_count() nodes.
  ErgmChain(const ErgmModel& model, NodeAttributes attributes, std::uint64_t seed);

  void set_theta(std::span<const double> theta);
  std::span<const double> theta() const noexcept { return theta_; }

  void run(std::uint64_t proposals);

  std::span<const double> stats() const noexcept { return stats_; }
  std::size_t edge_count() const noexcept { return edge_count_; }
  std::uint64_t proposals() const noexcept { return proposals_; }
  std::uint64_t accepted() const noexcept { return accepted_; }

  AttributedNetwork network() const;

 private:
  bool has_edge(NodeId i, NodeId j) const;
  void add_edge(NodeId i, NodeId j);
  void remove_edge(NodeId i, NodeId j);
  double log_odds(NodeId i, NodeId j, std::size_t di, std::size_t dj) const;
  void apply_change(NodeId i, NodeId j, std::size_t di, std::size_t dj, double sign);

  NodeAttributes attributes_;
  std::vector<detail::BoundTerm> terms_;
  std::vector<double> theta_;
  std::vector<double> stats_;
  // Cached parts of theta . delta for fast proposals.
  double edge_theta_ = 0.0;
  std::vector<double> node_weight_;   // summed nodefactor coefficients per node
  std::vector<double> degree_gain_;   // theta_deg(d+1) - theta_deg(d)
  std::vector<std::pair<std::size_t, double>> match_theta_;

  std::vector<std::vector<NodeId>> adj_;
  std::size_t edge_count_ = 0;
  std::uint64_t proposals_ = 0;
  std::uint64_t accepted_ = 0;
  Rng rng_;
};

/// Runs ctl.burn_in proposals from the empty graph and returns the state.
/// Deterministic given ctl.seed.
AttributedNetwork simulate(const ErgmModel& model, const NodeAttributes& attributes,
                           const SimulationControl& ctl);
/// As above; throws InputError unless attributes has exactly n rows.
AttributedNetwork simulate(const ErgmModel& model, std::size_t n, const NodeAttributes& attributes,
                           const SimulationControl& ctl);

/// Sufficient statistics of `draws` states taken every ctl.thin proposals
/// after burn-in.
std::vector<std::vector<double>> sample_stats(const ErgmModel& model,
                                              const NodeAttributes& attributes,
                                              const SimulationControl& ctl, std::size_t draws);

struct FitOptions {
  double a0 = 0.1;
  double tau = 20.0;
  std::size_t max_iterations = 1000;
  std::size_t draws_per_iteration = 32;
  /// Converged when every |mean - target| <= max(tolerance_se * SE, min_tolerance).
  double tolerance_se = 0.5;
  double min_tolerance = 0.5;
};

struct FitResult {
  ErgmModel model;
  bool converged = false;
  std::size_t iterations = 0;
  std::vector<double> simulated_mean;  // free terms only, last iteration
};

/// Robbins-Monro moment matching. `start` supplies the terms, the initial
/// coefficients and which ones are fixed; `target` has one entry per free
/// term, in term order. Each iteration simulates `draws_per_iteration`
/// thinned states from a persistent chain and moves the free coefficients by
/// a_t * Cov^-1 (target - mean), a_t = a0 / (1 + t / tau).
FitResult fit_moment_matching(std::span<const double> target, const ErgmModel& start,
                              const NodeAttributes& attributes, const SimulationControl& ctl,
                              const FitOptions& options = {});

// Model file: {"terms": [...], "theta": [...], "fixed": [...]}.
std::string model_to_json(const ErgmModel& model);
/// Throws InputError with line/column context on malformed JSON or schema.
ErgmModel model_from_json(std::string_view text);

// ---------------------------------------------------------------------------
// Node attribute margins used to populate simulated networks.

struct MarginEntry {
  std::string attribute;
  std::string group;  // empty: applies to every node; else conditional on group level
  std::string level;
  double proportion = 0.0;

  bool operator==(const MarginEntry&) const = default;
};

struct AttributeMargins {
  std::vector<MarginEntry> entries;
  bool operator==(const AttributeMargins&) const = default;
};

/// Group split 597/1438 of the 2,035-node reference network; gender and age
/// splits within each group from the 2020 PIT; race and season illustrative
/// defaults (the latter uniform over collection periods).
AttributeMargins nashville_margins();

/// Exact-count allocation (largest remainder) of each margin, randomly
/// permuted over nodes. `group` must have unconditional margins; other
/// attributes may be conditional on group. Attributes without margins stay
/// at their reference level.
NodeAttributes assign_attributes(std::shared_ptr<const NodeAttributeSchema> schema, std::size_t n,
                                 const AttributeMargins& margins, std::uint64_t seed);

/// Attributes from `margins` (stream derive_seed(seed, 1)) on the default
/// schema, then `burn_in` proposals (0: five per dyad) of the chain seeded
/// with derive_seed(seed, 2).
AttributedNetwork simulate_network(const ErgmModel& model, const AttributeMargins& margins,
                                   std::size_t n, std::uint64_t seed, std::uint64_t burn_in = 0);

/// CSV header: attribute,group,level,proportion
AttributeMargins read_margins_csv(std::istream& in);
void write_margins_csv(const AttributeMargins& margins, std::ostream& out);

}  // namespace rdskit
