#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rdskit/graph.hpp"

namespace rdskit {

using RespondentId = std::int64_t;

/// One interview record. Attribute levels live in the owning RdsSample.
struct RdsRespondent {
  RespondentId id = 0;
  std::optional<RespondentId> recruiter;  // empty for seeds
  int wave = 0;
  std::int64_t reported_degree = 1;

  bool operator==(const RdsRespondent&) const = default;
};

/// A recruitment forest. Invariants, checked on construction:
///  - ids unique; every recruiter appears earlier in the list
///  - seeds are wave 0, recruits are one wave past their recruiter
///  - reported_degree >= 1
///  - no respondent recruits more than coupon_limit others
///  - one attribute level per respondent per schema attribute
class RdsSample {
 public:
  RdsSample() = default;
  /// `levels` is row-major: levels[r * schema->size() + a].
  RdsSample(std::shared_ptr<const NodeAttributeSchema> schema, std::vector<RdsRespondent> respondents,
            std::vector<Level> levels, int coupon_limit = 3);

  std::size_t size() const noexcept { return respondents_.size(); }
  bool empty() const noexcept { return respondents_.empty(); }
  const std::vector<RdsRespondent>& respondents() const noexcept { return respondents_; }
  const RdsRespondent& operator[](std::size_t r) const { return respondents_[r]; }

  const NodeAttributeSchema& schema() const noexcept { return *schema_; }
  const std::shared_ptr<const NodeAttributeSchema>& schema_ptr() const noexcept { return schema_; }
  Level level(std::size_t r, std::size_t attr) const { return levels_[r * schema_->size() + attr]; }
  std::span<const Level> levels() const noexcept { return levels_; }

  int coupon_limit() const noexcept { return coupon_limit_; }
  std::vector<RespondentId> seed_ids() const;
  int max_wave() const noexcept;

  /// Position of each respondent's recruiter, or npos for seeds.
  const std::vector<std::size_t>& recruiter_index() const noexcept { return recruiter_index_; }
  /// Recruit positions for every respondent, in sample order.
  std::vector<std::vector<std::size_t>> recruits() const;

  /// Set when simulation ran out of recruitable nodes before target_n.
  bool shortfall() const noexcept { return shortfall_; }
  void set_shortfall(bool value) noexcept { shortfall_ = value; }

  bool operator==(const RdsSample& other) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::shared_ptr<const NodeAttributeSchema> schema_;
  std::vector<RdsRespondent> respondents_;
  std::vector<Level> levels_;
  std::vector<std::size_t> recruiter_index_;
  int coupon_limit_ = 3;
  bool shortfall_ = false;
};

enum class SeedRule { degree_proportional, uniform, fixed_list };

struct RdsDesign {
  std::size_t n_seeds = 10;
  SeedRule seed_rule = SeedRule::degree_proportional;
  std::vector<NodeId> fixed_seeds;  // used by SeedRule::fixed_list
  int coupon_limit = 3;
  std::size_t target_n = 0;
  std::uint64_t seed = 1;
  /// sdlog of multiplicative lognormal noise on reported degree; 0 = exact.
  double degree_noise_sdlog = 0.0;
};

/// Simulates coupon-limited recruitment. Seeds are drawn per design.seed_rule
/// from non-isolated nodes; respondents are processed first-in first-out and
/// each recruits up to coupon_limit uniformly chosen, not-yet-sampled
/// neighbors until target_n respondents are reached or the frontier empties
/// (shortfall). Respondent ids are node ids.
RdsSample simulate_rds(const AttributedNetwork& net, const RdsDesign& design);

/// r[X][Y]: recruitments from a group-X recruiter to a group-Y recruit.
using CrossRecruitMatrix = std::array<std::array<std::size_t, 2>, 2>;
CrossRecruitMatrix cross_recruit_counts(const RdsSample& sample);

/// Removes respondents with wave < w, promotes orphaned recruits to seeds
/// and shifts every wave down by w. Throws InputError if nothing remains.
RdsSample drop_early_waves(const RdsSample& sample, int w);

/// Every directed tie i->j becomes a wave-0 record of i recruiting a wave-1
/// record of j, so each node appears 2*degree times and every tie is observed
/// once in each direction: the saturated sample of a random walk on edges.
/// Reported degrees are exact; ids are record numbers.
RdsSample edge_census_sample(const AttributedNetwork& net);

/// Sample CSV: id,recruiter_id,wave,degree,<attributes...>, empty
/// recruiter_id for seeds. Attribute columns are matched to `schema` by
/// name; `group` is required and other schema attributes present in the
/// header are kept. Unknown extra columns are ignored. All row errors are
/// reported together in one InputError.
RdsSample read_rds_sample_csv(std::istream& in, const NodeAttributeSchema& schema,
                              int coupon_limit = 3);
void write_rds_sample_csv(const RdsSample& sample, std::ostream& out);

}  // namespace rdskit
