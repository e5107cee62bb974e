#include "rdskit/ergm.hpp"

#include <algorithm>
#include <cmath>
#include <Eigen/Dense>

#include "rdskit/error.hpp"

namespace rdskit {

std::string ErgmTerm::label() const {
  switch (kind) {
    case TermKind::edges: return "edges";
    case TermKind::offset_edges: return "offset(edges)";
    case TermKind::degree: return "degree" + std::to_string(k);
    case TermKind::nodefactor: return "nodefactor." + attribute + "." + level;
    case TermKind::nodematch: return "nodematch." + attribute;
  }
  return "?";
}

void ErgmModel::validate() const {
  if (theta.size() != terms.size())
    throw InputError("model has " + std::to_string(terms.size()) + " terms but " +
                     std::to_string(theta.size()) + " coefficients");
  if (fixed.size() != terms.size())
    throw InputError("model 'fixed' flags must have one entry per term");
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto& term = terms[t];
    if (!std::isfinite(theta[t]))
      throw InputError("coefficient of term " + std::to_string(t) + " is not finite");
    if (term.kind == TermKind::degree && term.k < 1)
      throw InputError("degree term needs k >= 1");
    if ((term.kind == TermKind::nodefactor || term.kind == TermKind::nodematch) &&
        term.attribute.empty())
      throw InputError("term " + std::to_string(t) + " needs an attribute");
    if (term.kind == TermKind::nodefactor && term.level.empty())
      throw InputError("nodefactor term " + std::to_string(t) + " needs a level");
    if (term.kind == TermKind::offset_edges && !fixed[t])
      throw InputError("offset term " + std::to_string(t) + " must be fixed");
  }
}

void ErgmModel::validate(const NodeAttributeSchema& schema) const {
  validate();
  (void)detail::bind_terms(terms, schema);
}

ErgmModel nashville_model() {
  ErgmModel m;
  auto add = [&m](ErgmTerm term, double value, bool fixed = false) {
    m.terms.push_back(std::move(term));
    m.theta.push_back(value);
    m.fixed.push_back(fixed);
  };
  add(ErgmTerm::offset_edges(), -6.342, true);
  add(ErgmTerm::edges(), 2.037);
  add(ErgmTerm::degree(2), 0.338);
  add(ErgmTerm::degree(3), 0.117);
  add(ErgmTerm::degree(4), 0.854);
  add(ErgmTerm::degree(5), 1.300);
  add(ErgmTerm::degree(6), 1.239);
  add(ErgmTerm::nodefactor("season", "Fall"), -0.881);
  add(ErgmTerm::nodefactor("season", "Winter"), -0.867);
  add(ErgmTerm::nodefactor("season", "Spring"), -0.804);
  add(ErgmTerm::nodefactor("race", "Black"), -0.016);
  add(ErgmTerm::nodefactor("race", "LatinX"), -0.731);
  add(ErgmTerm::nodefactor("race", "Asian"), 0.308);
  add(ErgmTerm::nodefactor("race", "AIAN"), -0.202);
  add(ErgmTerm::nodefactor("race", "NHPI"), -0.552);
  add(ErgmTerm::nodefactor("gender", "Male"), 0.277);
  add(ErgmTerm::nodematch("gender"), -0.423);
  return m;
}

SimulationControl SimulationControl::for_nodes(std::size_t n, std::uint64_t seed) {
  const auto dyads = dyad_count(n);
  return {5 * dyads, std::max<std::uint64_t>(1, dyads), seed};
}

std::uint64_t dyad_count(std::size_t n) noexcept {
  return n < 2 ? 0 : static_cast<std::uint64_t>(n) * (n - 1) / 2;
}

namespace detail {

std::vector<BoundTerm> bind_terms(std::span<const ErgmTerm> terms,
                                  const NodeAttributeSchema& schema) {
  std::vector<BoundTerm> bound;
  bound.reserve(terms.size());
  for (const auto& t : terms) {
    BoundTerm b{t.kind, t.k, 0, 0};
    switch (t.kind) {
      case TermKind::degree:
        if (t.k < 1) throw InputError("degree term needs k >= 1");
        break;
      case TermKind::nodefactor:
        b.attr = schema.index_of(t.attribute);
        b.level = schema.level_of(b.attr, t.level);
        break;
      case TermKind::nodematch:
        b.attr = schema.index_of(t.attribute);
        break;
      case TermKind::edges:
      case TermKind::offset_edges:
        break;
      default:
        throw InputError("unknown term kind");
    }
    bound.push_back(b);
  }
  return bound;
}

}  // namespace detail

namespace {

double term_change(const detail::BoundTerm& t, const NodeAttributes& attrs, NodeId i, NodeId j,
                   std::size_t di, std::size_t dj) {
  switch (t.kind) {
    case TermKind::edges:
    case TermKind::offset_edges:
      return 1.0;
    case TermKind::degree: {
      const auto k = static_cast<std::size_t>(t.k);
      const int gain_i = (di + 1 == k) - (di == k);
      const int gain_j = (dj + 1 == k) - (dj == k);
      return gain_i + gain_j;
    }
    case TermKind::nodefactor:
      return (attrs.get(i, t.attr) == t.level) + (attrs.get(j, t.attr) == t.level);
    case TermKind::nodematch:
      return attrs.get(i, t.attr) == attrs.get(j, t.attr) ? 1.0 : 0.0;
  }
  return 0.0;
}

}  // namespace

std::vector<double> sufficient_stats(const AttributedNetwork& net,
                                     std::span<const ErgmTerm> terms) {
  const auto bound = detail::bind_terms(terms, net.schema());
  const auto& attrs = net.attributes();
  std::vector<double> stats(terms.size(), 0.0);
  const auto edges = net.edges();
  for (std::size_t t = 0; t < bound.size(); ++t) {
    const auto& b = bound[t];
    switch (b.kind) {
      case TermKind::edges:
      case TermKind::offset_edges:
        stats[t] = static_cast<double>(edges.size());
        break;
      case TermKind::degree:
        for (NodeId i = 0; i < net.node_count(); ++i)
          if (net.degree(i) == static_cast<std::size_t>(b.k)) stats[t] += 1.0;
        break;
      case TermKind::nodefactor:
        for (const auto& [u, v] : edges)
          stats[t] += (attrs.get(u, b.attr) == b.level) + (attrs.get(v, b.attr) == b.level);
        break;
      case TermKind::nodematch:
        for (const auto& [u, v] : edges)
          if (attrs.get(u, b.attr) == attrs.get(v, b.attr)) stats[t] += 1.0;
        break;
    }
  }
  return stats;
}

std::vector<double> change_stats(std::span<const ErgmTerm> terms, const AttributedNetwork& net,
                                 NodeId i, NodeId j) {
  if (i == j) throw InputError("toggle requires two distinct nodes");
  const bool present = net.has_edge(i, j);
  const std::size_t di = net.degree(i) - present;
  const std::size_t dj = net.degree(j) - present;
  const auto bound = detail::bind_terms(terms, net.schema());
  std::vector<double> delta(bound.size());
  for (std::size_t t = 0; t < bound.size(); ++t)
    delta[t] = term_change(bound[t], net.attributes(), i, j, di, dj);
  return delta;
}

double log_odds_of_toggle(const ErgmModel& model, const AttributedNetwork& net, NodeId i,
                          NodeId j) {
  model.validate();
  const auto delta = change_stats(model.terms, net, i, j);
  double lo = 0.0;
  for (std::size_t t = 0; t < delta.size(); ++t) lo += model.theta[t] * delta[t];
  return lo;
}

// ---------------------------------------------------------------------------

ErgmChain::ErgmChain(const ErgmModel& model, NodeAttributes attributes, std::uint64_t seed)
    : attributes_(std::move(attributes)),
      terms_(detail::bind_terms(model.terms, attributes_.schema())),
      stats_(model.terms.size(), 0.0),
      adj_(attributes_.node_count()),
      rng_(seed) {
  model.validate();
  set_theta(model.theta);
}

void ErgmChain::set_theta(std::span<const double> theta) {
  if (theta.size() != terms_.size()) throw InputError("theta length does not match terms");
  theta_.assign(theta.begin(), theta.end());

  edge_theta_ = 0.0;
  node_weight_.assign(attributes_.node_count(), 0.0);
  match_theta_.clear();
  int max_k = 0;
  for (const auto& t : terms_)
    if (t.kind == TermKind::degree) max_k = std::max(max_k, t.k);
  std::vector<double> degree_theta(static_cast<std::size_t>(max_k) + 2, 0.0);

  for (std::size_t t = 0; t < terms_.size(); ++t) {
    const auto& b = terms_[t];
    switch (b.kind) {
      case TermKind::edges:
      case TermKind::offset_edges:
        edge_theta_ += theta_[t];
        break;
      case TermKind::degree:
        degree_theta[static_cast<std::size_t>(b.k)] += theta_[t];
        break;
      case TermKind::nodefactor: {
        const auto col = attributes_.column(b.attr);
        for (std::size_t i = 0; i < col.size(); ++i)
          if (col[i] == b.level) node_weight_[i] += theta_[t];
        break;
      }
      case TermKind::nodematch: {
        auto it = std::find_if(match_theta_.begin(), match_theta_.end(),
                               [&](const auto& p) { return p.first == b.attr; });
        if (it == match_theta_.end())
          match_theta_.emplace_back(b.attr, theta_[t]);
        else
          it->second += theta_[t];
        break;
      }
    }
  }
  degree_gain_.assign(static_cast<std::size_t>(max_k) + 1, 0.0);
  for (std::size_t d = 0; d < degree_gain_.size(); ++d)
    degree_gain_[d] = degree_theta[d + 1] - degree_theta[d];
}

bool ErgmChain::has_edge(NodeId i, NodeId j) const {
  const auto& a = adj_[i].size() <= adj_[j].size() ? adj_[i] : adj_[j];
  const NodeId other = adj_[i].size() <= adj_[j].size() ? j : i;
  return std::find(a.begin(), a.end(), other) != a.end();
}

void ErgmChain::add_edge(NodeId i, NodeId j) {
  adj_[i].push_back(j);
  adj_[j].push_back(i);
  ++edge_count_;
}

void ErgmChain::remove_edge(NodeId i, NodeId j) {
  auto drop = [](std::vector<NodeId>& list, NodeId v) {
    auto it = std::find(list.begin(), list.end(), v);
    *it = list.back();
    list.pop_back();
  };
  drop(adj_[i], j);
  drop(adj_[j], i);
  --edge_count_;
}

double ErgmChain::log_odds(NodeId i, NodeId j, std::size_t di, std::size_t dj) const {
  double lo = edge_theta_ + node_weight_[i] + node_weight_[j];
  if (di < degree_gain_.size()) lo += degree_gain_[di];
  if (dj < degree_gain_.size()) lo += degree_gain_[dj];
  for (const auto& [attr, value] : match_theta_)
    if (attributes_.get(i, attr) == attributes_.get(j, attr)) lo += value;
  return lo;
}

void ErgmChain::apply_change(NodeId i, NodeId j, std::size_t di, std::size_t dj, double sign) {
  for (std::size_t t = 0; t < terms_.size(); ++t)
    stats_[t] += sign * term_change(terms_[t], attributes_, i, j, di, dj);
}

void ErgmChain::run(std::uint64_t proposals) {
  const std::size_t n = attributes_.node_count();
  if (n < 2) {
    proposals_ += proposals;
    return;
  }
  std::uniform_int_distribution<NodeId> pick_first(0, static_cast<NodeId>(n - 1));
  std::uniform_int_distribution<NodeId> pick_second(0, static_cast<NodeId>(n - 2));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::uint64_t p = 0; p < proposals; ++p) {
    const NodeId i = pick_first(rng_);
    NodeId j = pick_second(rng_);
    if (j >= i) ++j;
    const bool present = has_edge(i, j);
    const std::size_t di = adj_[i].size() - present;
    const std::size_t dj = adj_[j].size() - present;
    const double lo = log_odds(i, j, di, dj);
    const double toward = present ? -lo : lo;
    if (toward < 0.0 && unif(rng_) >= std::exp(toward)) continue;
    if (present) {
      remove_edge(i, j);
      apply_change(i, j, di, dj, -1.0);
    } else {
      add_edge(i, j);
      apply_change(i, j, di, dj, 1.0);
    }
    ++accepted_;
  }
  proposals_ += proposals;
}

AttributedNetwork ErgmChain::network() const {
  std::vector<Edge> edges;
  edges.reserve(edge_count_);
  for (NodeId i = 0; i < adj_.size(); ++i)
    for (NodeId j : adj_[i])
      if (j > i) edges.emplace_back(i, j);
  std::sort(edges.begin(), edges.end());
  return AttributedNetwork(attributes_, edges);
}

AttributedNetwork simulate(const ErgmModel& model, const NodeAttributes& attributes,
                           const SimulationControl& ctl) {
  if (ctl.thin < 1) throw InputError("thin must be >= 1");
  ErgmChain chain(model, attributes, ctl.seed);
  chain.run(ctl.burn_in);
  return chain.network();
}

AttributedNetwork simulate(const ErgmModel& model, std::size_t n, const NodeAttributes& attributes,
                           const SimulationControl& ctl) {
  if (attributes.node_count() != n)
    throw InputError("attribute table has " + std::to_string(attributes.node_count()) +
                     " rows, expected " + std::to_string(n));
  return simulate(model, attributes, ctl);
}

std::vector<std::vector<double>> sample_stats(const ErgmModel& model,
                                              const NodeAttributes& attributes,
                                              const SimulationControl& ctl, std::size_t draws) {
  if (ctl.thin < 1) throw InputError("thin must be >= 1");
  ErgmChain chain(model, attributes, ctl.seed);
  chain.run(ctl.burn_in);
  std::vector<std::vector<double>> out;
  out.reserve(draws);
  for (std::size_t d = 0; d < draws; ++d) {
    chain.run(ctl.thin);
    out.emplace_back(chain.stats().begin(), chain.stats().end());
  }
  return out;
}

FitResult fit_moment_matching(std::span<const double> target, const ErgmModel& start,
                              const NodeAttributes& attributes, const SimulationControl& ctl,
                              const FitOptions& options) {
  start.validate(attributes.schema());
  if (ctl.thin < 1) throw InputError("thin must be >= 1");
  if (options.draws_per_iteration < 2) throw InputError("need at least two draws per iteration");

  std::vector<std::size_t> free;
  for (std::size_t t = 0; t < start.terms.size(); ++t)
    if (!start.fixed[t]) free.push_back(t);
  if (target.size() != free.size())
    throw InputError("target has " + std::to_string(target.size()) + " entries but model has " +
                     std::to_string(free.size()) + " free terms");

  const auto k = static_cast<Eigen::Index>(free.size());
  const auto m = options.draws_per_iteration;
  FitResult result{start, false, 0, {}};
  std::vector<double> theta = start.theta;

  ErgmChain chain(start, attributes, ctl.seed);
  chain.run(ctl.burn_in);

  Eigen::MatrixXd draws(static_cast<Eigen::Index>(m), k);
  const Eigen::Map<const Eigen::VectorXd> goal(target.data(), k);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    for (std::size_t d = 0; d < m; ++d) {
      chain.run(ctl.thin);
      for (Eigen::Index c = 0; c < k; ++c)
        draws(static_cast<Eigen::Index>(d), c) = chain.stats()[free[static_cast<std::size_t>(c)]];
    }
    mean = draws.colwise().mean();
    const Eigen::MatrixXd centered = draws.rowwise() - mean.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(m - 1);
    result.iterations = iter + 1;

    bool within = true;
    for (Eigen::Index c = 0; c < k; ++c) {
      const double se = std::sqrt(cov(c, c) / static_cast<double>(m));
      const double tol = std::max(options.tolerance_se * se, options.min_tolerance);
      if (std::abs(mean(c) - goal(c)) > tol) within = false;
    }
    if (within) {
      result.converged = true;
      break;
    }

    for (Eigen::Index c = 0; c < k; ++c) cov(c, c) += 1e-3 * cov(c, c) + 1e-2;
    Eigen::VectorXd direction = cov.ldlt().solve(goal - mean);
    // A poorly estimated covariance can produce wild Newton directions.
    const double largest = direction.cwiseAbs().maxCoeff();
    if (!std::isfinite(largest)) break;
    if (largest > 10.0) direction *= 10.0 / largest;

    const double step = options.a0 / (1.0 + static_cast<double>(iter) / options.tau);
    for (Eigen::Index c = 0; c < k; ++c) theta[free[static_cast<std::size_t>(c)]] += step * direction(c);
    chain.set_theta(theta);
  }

  result.model.theta = theta;
  result.simulated_mean.assign(mean.data(), mean.data() + k);
  return result;
}

}  // namespace rdskit
