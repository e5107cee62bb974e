#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "rdskit/error.hpp"
#include "rdskit/rds.hpp"

using namespace rdskit;
using testing::make_net;
using testing::random_net;

namespace {

RdsDesign fixed_design(std::vector<NodeId> seeds, std::size_t target, int coupons = 3) {
  RdsDesign d;
  d.seed_rule = SeedRule::fixed_list;
  d.fixed_seeds = std::move(seeds);
  d.n_seeds = d.fixed_seeds.size();
  d.target_n = target;
  d.coupon_limit = coupons;
  return d;
}

void check_invariants(const RdsSample& s) {
  std::set<RespondentId> ids;
  std::map<RespondentId, int> out;
  std::map<RespondentId, int> wave;
  for (const auto& r : s.respondents()) {
    CHECK(ids.insert(r.id).second);
    wave[r.id] = r.wave;
    if (r.recruiter) {
      CHECK(wave.count(*r.recruiter) == 1);
      CHECK(wave[*r.recruiter] + 1 == r.wave);
      ++out[*r.recruiter];
    } else {
      CHECK(r.wave == 0);
    }
    CHECK(r.reported_degree >= 1);
  }
  for (const auto& [id, k] : out) CHECK(k <= s.coupon_limit());
}

}  // namespace

TEST_CASE("star with the hub as seed samples everyone") {
  const auto star = make_net(4, {{0, 1}, {0, 2}, {0, 3}});
  const auto s = simulate_rds(star, fixed_design({0}, 4));
  REQUIRE(s.size() == 4);
  CHECK(s[0].id == 0);
  for (std::size_t r = 1; r < 4; ++r) CHECK(s[r].wave == 1);
  CHECK_FALSE(s.shortfall());
}

TEST_CASE("path from one end is a single chain") {
  const auto path = make_net(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  const auto s = simulate_rds(path, fixed_design({0}, 5));
  REQUIRE(s.size() == 5);
  for (int r = 0; r < 5; ++r) {
    CHECK(s[static_cast<std::size_t>(r)].id == r);
    CHECK(s[static_cast<std::size_t>(r)].wave == r);
  }
}

TEST_CASE("simulated samples keep their invariants") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto net = random_net(200, 0.03, seed);
    RdsDesign d;
    d.n_seeds = 5;
    d.target_n = 120;
    d.seed = seed;
    d.seed_rule = seed % 2 ? SeedRule::uniform : SeedRule::degree_proportional;
    const auto s = simulate_rds(net, d);
    check_invariants(s);
    for (const auto& r : s.respondents())
      CHECK(r.reported_degree == static_cast<std::int64_t>(net.degree(static_cast<NodeId>(r.id))));
    if (!s.shortfall()) CHECK(s.size() == 120);
    CHECK(s == simulate_rds(net, d));
  }
}

TEST_CASE("unlimited coupons on a connected network reach every node") {
  // Ring plus chords: connected.
  std::vector<Edge> edges;
  for (NodeId i = 0; i < 60; ++i) edges.emplace_back(std::min(i, (i + 1) % 60), std::max(i, (i + 1) % 60));
  for (NodeId i = 0; i < 30; i += 7) edges.emplace_back(i, i + 30);
  const auto net = make_net(60, edges);
  RdsDesign d;
  d.n_seeds = 1;
  d.target_n = 60;
  d.coupon_limit = 60;
  const auto s = simulate_rds(net, d);
  CHECK(s.size() == 60);
  CHECK_FALSE(s.shortfall());
}

TEST_CASE("exhaustion sets the shortfall flag; isolated networks are rejected") {
  const auto two = make_net(6, {{0, 1}});
  RdsDesign d;
  d.n_seeds = 1;
  d.target_n = 5;
  const auto s = simulate_rds(two, d);
  CHECK(s.size() == 2);
  CHECK(s.shortfall());

  const auto isolated = make_net(5, {});
  try {
    simulate_rds(isolated, d);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()) == "network has no recruitable nodes");
  }
  d.target_n = 0;
  CHECK_THROWS_AS(simulate_rds(two, d), InputError);
}

TEST_CASE("seed rules") {
  const auto net = random_net(100, 0.05, 3);
  RdsDesign d;
  d.n_seeds = 8;
  d.target_n = 8;
  for (auto rule : {SeedRule::uniform, SeedRule::degree_proportional}) {
    d.seed_rule = rule;
    const auto s = simulate_rds(net, d);
    CHECK(s.seed_ids().size() == 8);
    for (auto id : s.seed_ids()) CHECK(net.degree(static_cast<NodeId>(id)) > 0);
  }
  // Degree-proportional first seed: hub of a star is picked half the time.
  const auto star = make_net(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  d.n_seeds = 1;
  d.target_n = 1;
  d.seed_rule = SeedRule::degree_proportional;
  int hub = 0;
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    d.seed = seed;
    hub += simulate_rds(star, d)[0].id == 0 ? 1 : 0;
  }
  CHECK(std::abs(hub / 4000.0 - 0.5) < 4 * std::sqrt(0.25 / 4000));
}

TEST_CASE("cross_recruit_counts") {
  const auto seeds_only = testing::make_sample({{1, {}, 0, 2, 0}, {2, {}, 0, 3, 1}});
  const auto zero = cross_recruit_counts(seeds_only);
  for (auto& row : zero)
    for (auto v : row) CHECK(v == 0);

  const auto s = testing::make_sample({{1, {}, 0, 2, 0}, {2, 1, 1, 3, 1}, {3, 1, 1, 3, 1}});
  const auto r = cross_recruit_counts(s);
  CHECK(r[0][1] == 2);
  CHECK(r[0][0] + r[1][0] + r[1][1] == 0);

  const auto net = random_net(300, 0.03, 5);
  RdsDesign d;
  d.target_n = 200;
  const auto sample = simulate_rds(net, d);
  std::map<RespondentId, Level> group;
  std::size_t recount[2][2] = {{0, 0}, {0, 0}};
  for (const auto& resp : sample.respondents()) group[resp.id] = net.attributes().get(static_cast<NodeId>(resp.id), 0);
  for (const auto& resp : sample.respondents())
    if (resp.recruiter) ++recount[group[*resp.recruiter]][group[resp.id]];
  const auto rr = cross_recruit_counts(sample);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) CHECK(rr[x][y] == recount[x][y]);
}

TEST_CASE("drop_early_waves") {
  const auto chain = testing::make_sample(
      {{10, {}, 0, 1, 0}, {11, 10, 1, 2, 0}, {12, 11, 2, 2, 1}, {13, 12, 3, 2, 1}, {14, 13, 4, 1, 0}});
  CHECK(drop_early_waves(chain, 0) == chain);
  const auto d1 = drop_early_waves(chain, 1);
  CHECK(d1.size() == 4);
  CHECK(d1[0].id == 11);
  CHECK_FALSE(d1[0].recruiter.has_value());
  CHECK(d1[0].wave == 0);
  CHECK(d1[3].wave == 3);
  check_invariants(d1);
  try {
    drop_early_waves(chain, 9);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()) == "empty sample");
  }
}

TEST_CASE("sample constructor enforces invariants") {
  CHECK_THROWS_AS(testing::make_sample({{1, {}, 0, 0, 0}}), InputError);
  CHECK_THROWS_AS(testing::make_sample({{1, {}, 1, 2, 0}}), InputError);
  CHECK_THROWS_AS(testing::make_sample({{1, {}, 0, 2, 0}, {1, {}, 0, 2, 0}}), InputError);
  CHECK_THROWS_AS(testing::make_sample({{2, 1, 1, 2, 0}, {1, {}, 0, 2, 0}}), InputError);
  CHECK_THROWS_AS(testing::make_sample({{1, {}, 0, 2, 0}, {2, 1, 2, 2, 0}}), InputError);
  CHECK_THROWS_AS(
      testing::make_sample({{1, {}, 0, 2, 0}, {2, 1, 1, 2, 0}, {3, 1, 1, 2, 0}}, 1), InputError);
}

TEST_CASE("edge census sample observes every tie in both directions") {
  const auto net = random_net(30, 0.2, 7);
  const auto s = edge_census_sample(net);
  CHECK(s.size() == 4 * net.edge_count());
  const auto r = cross_recruit_counts(s);
  CHECK(r[0][1] == cross_tie_total(net));
  CHECK(r[1][0] == cross_tie_total(net));
  check_invariants(s);
}

TEST_CASE("sample CSV round trip and error reporting") {
  const auto net = random_net(150, 0.04, 2);
  RdsDesign d;
  d.target_n = 80;
  const auto s = simulate_rds(net, d);
  std::stringstream csv;
  write_rds_sample_csv(s, csv);
  const auto back = read_rds_sample_csv(csv, default_schema());
  CHECK(back.respondents() == s.respondents());
  CHECK(std::equal(back.levels().begin(), back.levels().end(), s.levels().begin(), s.levels().end()));

  // Rows out of wave order are accepted and reordered.
  std::stringstream shuffled("id,recruiter_id,wave,degree,group\n7,5,1,2,sheltered\n5,,0,3,unsheltered\n");
  const auto reordered = read_rds_sample_csv(shuffled, default_schema());
  CHECK(reordered[0].id == 5);
  CHECK(reordered.schema().size() == 1);

  std::stringstream bad("id,recruiter_id,wave,degree,group,gender\n"
                        "1,,0,3,sheltered,Male\n"
                        "2,1,1,0,sheltered,Male\n"
                        "3,9,1,2,sheltered,Male\n"
                        "4,1,1,2,housed,Male\n");
  try {
    read_rds_sample_csv(bad, default_schema());
    FAIL("expected an error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("sample:3") != std::string::npos);
    CHECK(msg.find("sample:4") != std::string::npos);
    CHECK(msg.find("sample:5") != std::string::npos);
  }
  std::stringstream no_group("id,recruiter_id,wave,degree\n1,,0,3\n");
  CHECK_THROWS_AS(read_rds_sample_csv(no_group, default_schema()), InputError);
}
