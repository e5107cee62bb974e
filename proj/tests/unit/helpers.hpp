#pragma once

#include <memory>
#include <random>
#include <vector>

#include "rdskit/graph.hpp"
#include "rdskit/rds.hpp"

namespace testing {

using namespace rdskit;

inline std::shared_ptr<const NodeAttributeSchema> schema() {
  static auto s = std::make_shared<const NodeAttributeSchema>(default_schema());
  return s;
}

/// Network on the default schema; group[i] = 0 (A) or 1 (B), other
/// attributes at their reference level.
inline AttributedNetwork make_net(std::size_t n, const std::vector<Edge>& edges,
                                  const std::vector<Level>& group = {}) {
  NodeAttributes attrs(schema(), n);
  for (NodeId i = 0; i < group.size(); ++i) attrs.set(i, 0, group[i]);
  return AttributedNetwork(attrs, edges);
}

/// G(n, p) with uniformly random attributes.
inline AttributedNetwork random_net(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (coin(rng)) edges.emplace_back(i, j);
  NodeAttributes attrs(schema(), n);
  for (std::size_t a = 0; a < schema()->size(); ++a) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(schema()->at(a).levels.size()) - 1);
    for (NodeId i = 0; i < n; ++i) attrs.set(i, a, static_cast<Level>(pick(rng)));
  }
  return AttributedNetwork(attrs, edges);
}

struct Rec {
  RespondentId id;
  std::optional<RespondentId> recruiter;
  int wave;
  std::int64_t degree;
  Level group;
  Level gender = 0;
};

/// Sample on the default schema from compact records.
inline RdsSample make_sample(const std::vector<Rec>& recs, int coupons = 3) {
  std::vector<RdsRespondent> rs;
  std::vector<Level> levels;
  for (const auto& r : recs) {
    rs.push_back({r.id, r.recruiter, r.wave, r.degree});
    levels.insert(levels.end(), {r.group, r.gender, 0, 1, 0});
  }
  return RdsSample(schema(), rs, levels, coupons);
}

}  // namespace testing
