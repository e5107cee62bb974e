#include "rdskit/rds.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_map>

#include "rdskit/csv.hpp"
#include "rdskit/error.hpp"
#include "rdskit/random.hpp"

namespace rdskit {

RdsSample::RdsSample(std::shared_ptr<const NodeAttributeSchema> schema,
                     std::vector<RdsRespondent> respondents, std::vector<Level> levels,
                     int coupon_limit)
    : schema_(std::move(schema)),
      respondents_(std::move(respondents)),
      levels_(std::move(levels)),
      coupon_limit_(coupon_limit) {
  if (!schema_) throw InputError("sample needs an attribute schema");
  if (coupon_limit_ < 1) throw InputError("coupon_limit must be >= 1");
  const std::size_t n = respondents_.size();
  const std::size_t n_attr = schema_->size();
  if (levels_.size() != n * n_attr)
    throw InputError("sample attribute table has the wrong size");
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t a = 0; a < n_attr; ++a)
      if (levels_[r * n_attr + a] >= schema_->at(a).levels.size())
        throw InputError("sample level index out of range");

  bool dense = true;
  for (std::size_t r = 0; r < n && dense; ++r)
    dense = respondents_[r].id == static_cast<RespondentId>(r);
  std::unordered_map<RespondentId, std::size_t> position;
  if (!dense) {
    position.reserve(n);
    for (std::size_t r = 0; r < n; ++r)
      if (!position.emplace(respondents_[r].id, r).second)
        throw InputError("duplicate respondent id " + std::to_string(respondents_[r].id));
  }

  recruiter_index_.assign(n, npos);
  std::vector<int> recruit_count(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& resp = respondents_[r];
    const std::string who = "respondent " + std::to_string(resp.id);
    if (resp.reported_degree < 1) throw InputError(who + ": reported degree must be >= 1");
    if (!resp.recruiter) {
      if (resp.wave != 0) throw InputError(who + ": seeds must be wave 0");
      continue;
    }
    std::size_t p = npos;
    if (dense) {
      if (*resp.recruiter >= 0 && *resp.recruiter < static_cast<RespondentId>(n))
        p = static_cast<std::size_t>(*resp.recruiter);
    } else if (auto it = position.find(*resp.recruiter); it != position.end()) {
      p = it->second;
    }
    if (p == npos || p >= r)
      throw InputError(who + ": recruiter " + std::to_string(*resp.recruiter) +
                       " does not appear earlier in the sample");
    if (resp.wave != respondents_[p].wave + 1)
      throw InputError(who + ": wave must be recruiter's wave + 1");
    if (++recruit_count[p] > coupon_limit_)
      throw InputError("respondent " + std::to_string(respondents_[p].id) + " recruited more than " +
                       std::to_string(coupon_limit_) + " others");
    recruiter_index_[r] = p;
  }
}

std::vector<RespondentId> RdsSample::seed_ids() const {
  std::vector<RespondentId> out;
  for (const auto& r : respondents_)
    if (!r.recruiter) out.push_back(r.id);
  return out;
}

int RdsSample::max_wave() const noexcept {
  int w = 0;
  for (const auto& r : respondents_) w = std::max(w, r.wave);
  return w;
}

std::vector<std::vector<std::size_t>> RdsSample::recruits() const {
  std::vector<std::vector<std::size_t>> out(size());
  for (std::size_t r = 0; r < size(); ++r)
    if (recruiter_index_[r] != npos) out[recruiter_index_[r]].push_back(r);
  return out;
}

bool RdsSample::operator==(const RdsSample& other) const {
  if (respondents_ != other.respondents_ || levels_ != other.levels_ ||
      coupon_limit_ != other.coupon_limit_ || shortfall_ != other.shortfall_)
    return false;
  return schema_ == other.schema_ || (schema_ && other.schema_ && *schema_ == *other.schema_);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<NodeId> pick_seeds(const AttributedNetwork& net, const RdsDesign& design,
                               const std::vector<NodeId>& recruitable, Rng& rng) {
  const std::size_t k = std::min(design.n_seeds, design.target_n);
  std::vector<NodeId> seeds;
  switch (design.seed_rule) {
    case SeedRule::fixed_list: {
      if (design.fixed_seeds.empty()) throw InputError("fixed_list seed rule needs seed ids");
      std::vector<NodeId> sorted = design.fixed_seeds;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InputError("fixed seed list has duplicates");
      for (NodeId s : design.fixed_seeds) {
        if (s >= net.node_count()) throw InputError("fixed seed " + std::to_string(s) + " out of range");
      }
      seeds.assign(design.fixed_seeds.begin(),
                   design.fixed_seeds.begin() +
                       static_cast<std::ptrdiff_t>(std::min(design.fixed_seeds.size(), design.target_n)));
      break;
    }
    case SeedRule::uniform: {
      std::vector<NodeId> pool = recruitable;
      for (std::size_t s = 0; s < k; ++s) {
        std::uniform_int_distribution<std::size_t> pick(s, pool.size() - 1);
        std::swap(pool[s], pool[pick(rng)]);
        seeds.push_back(pool[s]);
      }
      break;
    }
    case SeedRule::degree_proportional: {
      std::vector<double> weight(recruitable.size());
      for (std::size_t c = 0; c < recruitable.size(); ++c)
        weight[c] = static_cast<double>(net.degree(recruitable[c]));
      for (std::size_t s = 0; s < k; ++s) {
        std::discrete_distribution<std::size_t> pick(weight.begin(), weight.end());
        const std::size_t c = pick(rng);
        seeds.push_back(recruitable[c]);
        weight[c] = 0.0;
      }
      break;
    }
  }
  return seeds;
}

}  // namespace

RdsSample simulate_rds(const AttributedNetwork& net, const RdsDesign& design) {
  if (design.n_seeds < 1) throw InputError("design needs at least one seed");
  if (design.target_n < design.n_seeds) throw InputError("target_n must be >= n_seeds");
  if (design.coupon_limit < 1) throw InputError("coupon_limit must be >= 1");
  if (!(design.degree_noise_sdlog >= 0.0)) throw InputError("degree noise must be >= 0");

  std::vector<NodeId> recruitable;
  for (NodeId i = 0; i < net.node_count(); ++i)
    if (net.degree(i) > 0) recruitable.push_back(i);
  if (recruitable.empty()) throw InputError("network has no recruitable nodes");
  if (design.seed_rule != SeedRule::fixed_list && recruitable.size() < design.n_seeds)
    throw InputError("network has fewer recruitable nodes than seeds");

  Rng rng(design.seed);
  const auto seeds = pick_seeds(net, design, recruitable, rng);

  const std::size_t n_attr = net.schema().size();
  std::vector<RdsRespondent> respondents;
  std::vector<Level> levels;
  std::vector<char> sampled(net.node_count(), 0);
  respondents.reserve(design.target_n);
  levels.reserve(design.target_n * n_attr);
  std::normal_distribution<double> noise(0.0, design.degree_noise_sdlog > 0 ? design.degree_noise_sdlog : 1.0);

  auto enroll = [&](NodeId node, std::optional<RespondentId> recruiter, int wave) {
    sampled[node] = 1;
    auto degree = static_cast<std::int64_t>(net.degree(node));
    if (design.degree_noise_sdlog > 0.0)
      degree = std::llround(static_cast<double>(degree) * std::exp(noise(rng)));
    respondents.push_back({static_cast<RespondentId>(node), recruiter, wave, std::max<std::int64_t>(1, degree)});
    for (std::size_t a = 0; a < n_attr; ++a) levels.push_back(net.attributes().get(node, a));
  };

  std::deque<std::size_t> frontier;
  for (NodeId s : seeds) {
    enroll(s, std::nullopt, 0);
    frontier.push_back(respondents.size() - 1);
  }

  std::vector<NodeId> available;
  while (!frontier.empty() && respondents.size() < design.target_n) {
    const std::size_t r = frontier.front();
    frontier.pop_front();
    const auto node = static_cast<NodeId>(respondents[r].id);
    available.clear();
    for (NodeId nb : net.neighbors(node))
      if (!sampled[nb]) available.push_back(nb);
    const std::size_t take =
        std::min({static_cast<std::size_t>(design.coupon_limit), available.size(),
                  design.target_n - respondents.size()});
    for (std::size_t c = 0; c < take; ++c) {
      std::uniform_int_distribution<std::size_t> pick(c, available.size() - 1);
      std::swap(available[c], available[pick(rng)]);
      enroll(available[c], respondents[r].id, respondents[r].wave + 1);
      frontier.push_back(respondents.size() - 1);
    }
  }

  RdsSample sample(net.attributes().schema_ptr(), std::move(respondents), std::move(levels),
                   design.coupon_limit);
  sample.set_shortfall(sample.size() < design.target_n);
  return sample;
}

CrossRecruitMatrix cross_recruit_counts(const RdsSample& sample) {
  const std::size_t g = sample.schema().group_index();
  CrossRecruitMatrix r{};
  const auto& parent = sample.recruiter_index();
  for (std::size_t i = 0; i < sample.size(); ++i)
    if (parent[i] != RdsSample::npos) ++r[sample.level(parent[i], g)][sample.level(i, g)];
  return r;
}

RdsSample drop_early_waves(const RdsSample& sample, int w) {
  if (w < 0) throw InputError("wave cutoff must be >= 0");
  if (w == 0) return sample;
  const std::size_t n_attr = sample.schema().size();
  std::vector<RdsRespondent> kept;
  std::vector<Level> levels;
  for (std::size_t r = 0; r < sample.size(); ++r) {
    RdsRespondent resp = sample[r];
    if (resp.wave < w) continue;
    if (resp.wave == w) resp.recruiter.reset();
    resp.wave -= w;
    kept.push_back(resp);
    const auto row = sample.levels().subspan(r * n_attr, n_attr);
    levels.insert(levels.end(), row.begin(), row.end());
  }
  if (kept.empty()) throw InputError("empty sample");
  RdsSample out(sample.schema_ptr(), std::move(kept), std::move(levels), sample.coupon_limit());
  out.set_shortfall(sample.shortfall());
  return out;
}

RdsSample edge_census_sample(const AttributedNetwork& net) {
  const std::size_t n_attr = net.schema().size();
  std::vector<RdsRespondent> respondents;
  std::vector<Level> levels;
  respondents.reserve(4 * net.edge_count());
  levels.reserve(4 * net.edge_count() * n_attr);
  auto push_levels = [&](NodeId node) {
    for (std::size_t a = 0; a < n_attr; ++a) levels.push_back(net.attributes().get(node, a));
  };
  for (NodeId i = 0; i < net.node_count(); ++i) {
    const auto di = static_cast<std::int64_t>(net.degree(i));
    for (NodeId j : net.neighbors(i)) {
      const auto id = static_cast<RespondentId>(respondents.size());
      respondents.push_back({id, std::nullopt, 0, di});
      push_levels(i);
      respondents.push_back({id + 1, id, 1, static_cast<std::int64_t>(net.degree(j))});
      push_levels(j);
    }
  }
  return RdsSample(net.attributes().schema_ptr(), std::move(respondents), std::move(levels), 1);
}

// ---------------------------------------------------------------------------

namespace {

std::optional<std::int64_t> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

RdsSample read_rds_sample_csv(std::istream& in, const NodeAttributeSchema& schema, int coupon_limit) {
  const auto table = csv::read(in, "sample");
  const std::vector<std::string> fixed_cols{"id", "recruiter_id", "wave", "degree"};
  if (table.header.size() < fixed_cols.size() ||
      !std::equal(fixed_cols.begin(), fixed_cols.end(), table.header.begin()))
    throw InputError("sample: header must start with 'id,recruiter_id,wave,degree'");

  std::vector<AttributeSpec> kept;
  std::vector<std::size_t> columns;
  for (const auto& spec : schema.attributes()) {
    if (auto col = table.column(spec.name)) {
      kept.push_back(spec);
      columns.push_back(*col);
    }
  }
  auto sub_schema = std::make_shared<const NodeAttributeSchema>(kept);
  if (!sub_schema->find(kGroupAttribute)) throw InputError("sample: missing column 'group'");

  struct Parsed {
    RdsRespondent resp;
    std::vector<Level> levels;
    std::size_t line;
  };
  std::vector<Parsed> rows;
  std::vector<std::string> problems;
  std::unordered_map<RespondentId, std::size_t> seen;
  for (const auto& row : table.rows) {
    const std::string at = "sample:" + std::to_string(row.line) + ": ";
    Parsed p{{}, {}, row.line};
    bool ok = true;
    if (auto id = parse_int(row.fields[0])) {
      p.resp.id = *id;
      if (!seen.emplace(*id, rows.size()).second) {
        problems.push_back(at + "duplicate id " + row.fields[0]);
        ok = false;
      }
    } else {
      problems.push_back(at + "id '" + row.fields[0] + "' is not an integer");
      ok = false;
    }
    if (!row.fields[1].empty()) {
      if (auto rec = parse_int(row.fields[1]))
        p.resp.recruiter = *rec;
      else {
        problems.push_back(at + "recruiter_id '" + row.fields[1] + "' is not an integer");
        ok = false;
      }
    }
    if (auto wave = parse_int(row.fields[2]); wave && *wave >= 0)
      p.resp.wave = static_cast<int>(*wave);
    else {
      problems.push_back(at + "wave '" + row.fields[2] + "' is not a nonnegative integer");
      ok = false;
    }
    if (auto deg = parse_int(row.fields[3]); deg && *deg >= 1)
      p.resp.reported_degree = *deg;
    else {
      problems.push_back(at + "degree '" + row.fields[3] + "' must be an integer >= 1");
      ok = false;
    }
    for (std::size_t a = 0; a < kept.size(); ++a) {
      const auto& value = row.fields[columns[a]];
      if (auto level = sub_schema->find_level(a, value))
        p.levels.push_back(*level);
      else {
        problems.push_back(at + "unknown " + kept[a].name + " '" + value + "'");
        ok = false;
      }
    }
    if (ok) rows.push_back(std::move(p));
  }

  for (const auto& p : rows) {
    const std::string at = "sample:" + std::to_string(p.line) + ": ";
    if (!p.resp.recruiter) {
      if (p.resp.wave != 0) problems.push_back(at + "seed (empty recruiter_id) must be wave 0");
      continue;
    }
    auto it = seen.find(*p.resp.recruiter);
    if (it == seen.end() || it->second >= rows.size()) {
      problems.push_back(at + "recruiter_id " + std::to_string(*p.resp.recruiter) + " not in sample");
      continue;
    }
    if (rows[it->second].resp.wave + 1 != p.resp.wave)
      problems.push_back(at + "wave must be recruiter's wave + 1");
  }
  if (!problems.empty()) {
    std::string msg = "invalid sample CSV:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw InputError(msg);
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Parsed& a, const Parsed& b) { return a.resp.wave < b.resp.wave; });
  std::vector<RdsRespondent> respondents;
  std::vector<Level> levels;
  for (auto& p : rows) {
    respondents.push_back(p.resp);
    levels.insert(levels.end(), p.levels.begin(), p.levels.end());
  }
  return RdsSample(sub_schema, std::move(respondents), std::move(levels), coupon_limit);
}

void write_rds_sample_csv(const RdsSample& sample, std::ostream& out) {
  const auto& schema = sample.schema();
  out << "id,recruiter_id,wave,degree";
  for (const auto& a : schema.attributes()) out << ',' << a.name;
  out << '\n';
  for (std::size_t r = 0; r < sample.size(); ++r) {
    const auto& resp = sample[r];
    out << resp.id << ',';
    if (resp.recruiter) out << *resp.recruiter;
    out << ',' << resp.wave << ',' << resp.reported_degree;
    for (std::size_t a = 0; a < schema.size(); ++a)
      out << ',' << schema.at(a).levels[sample.level(r, a)];
    out << '\n';
  }
}

}  // namespace rdskit
