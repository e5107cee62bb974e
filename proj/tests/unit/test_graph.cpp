#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "rdskit/ergm.hpp"
#include "rdskit/error.hpp"

using namespace rdskit;
using testing::make_net;
using testing::random_net;

TEST_CASE("degree") {
  CHECK(make_net(4, {}).degree(2) == 0);
  const auto tri = make_net(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(tri.degree(1) == 2);
  const auto path = make_net(4, {{0, 1}, {1, 2}, {2, 3}});
  CHECK(path.degree(0) == 1);
  CHECK(path.degree(1) == 2);
  CHECK_THROWS_AS(path.degree(4), InputError);
}

TEST_CASE("construction rejects bad edges") {
  CHECK_THROWS_AS(make_net(3, {{1, 1}}), InputError);
  CHECK_THROWS_AS(make_net(3, {{0, 1}, {1, 0}}), InputError);
  CHECK_THROWS_AS(make_net(3, {{0, 3}}), InputError);
}

TEST_CASE("handshake and has_edge on random graphs") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto net = random_net(40, 0.1, seed);
    std::size_t sum = 0;
    for (NodeId i = 0; i < net.node_count(); ++i) sum += net.degree(i);
    CHECK(sum == 2 * net.edge_count());
    for (const auto& [a, b] : net.edges()) {
      CHECK(net.has_edge(a, b));
      CHECK(net.has_edge(b, a));
    }
  }
}

TEST_CASE("subgroup_counts") {
  const auto all_a = make_net(3, {}, {0, 0, 0});
  const auto c = subgroup_counts(all_a, "group");
  CHECK(c.at("unsheltered") == 3);
  CHECK(c.at("sheltered") == 0);
  CHECK_THROWS_AS(subgroup_counts(all_a, "shoe_size"), InputError);

  // Random assignment against a linear-scan recount.
  const auto net = random_net(300, 0.0, 9);
  const auto counts = subgroup_counts(net, "race");
  std::map<std::string, std::size_t> recount;
  for (NodeId i = 0; i < net.node_count(); ++i) ++recount[net.attributes().label(i, 2)];
  std::size_t total = 0;
  for (const auto& [level, n] : counts) {
    CHECK(n == recount[level]);
    total += n;
  }
  CHECK(total == 300);
}

TEST_CASE("reference margins give 597 unsheltered and 1438 sheltered") {
  const auto attrs = assign_attributes(testing::schema(), 2035, nashville_margins(), 11);
  std::size_t a = 0;
  for (NodeId i = 0; i < 2035; ++i) a += attrs.get(i, 0) == 0 ? 1 : 0;
  CHECK(a == 597);
  CHECK(2035 - a == 1438);
}

TEST_CASE("cross_tie_total") {
  CHECK(cross_tie_total(make_net(3, {{0, 1}, {1, 2}}, {0, 0, 0})) == 0);
  CHECK(cross_tie_total(make_net(2, {{0, 1}}, {0, 1})) == 1);
  const std::vector<Edge> k4{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  CHECK(cross_tie_total(make_net(4, k4, {0, 0, 1, 1})) == 4);

  // Symmetric in the labeling.
  const auto net = random_net(60, 0.1, 3);
  NodeAttributes flipped = net.attributes();
  for (NodeId i = 0; i < net.node_count(); ++i) flipped.set(i, 0, 1 - net.attributes().get(i, 0));
  CHECK(cross_tie_total(net) == cross_tie_total(AttributedNetwork(flipped, net.edges())));
}

TEST_CASE("csv round trip") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto net = random_net(50, 0.08, seed);
    std::stringstream edges, nodes;
    write_edge_list_csv(net, edges);
    write_node_attributes_csv(net, nodes);
    const auto back = read_network_csv(edges, nodes, testing::schema());
    CHECK(back == net);
  }
}

TEST_CASE("csv reader maps string ids and reports problems") {
  std::stringstream nodes("id,group,gender,race,age_band,season\n"
                          "x,sheltered,Male,White,25+,Fall\n"
                          "y,unsheltered,Female,Black,18-24,Summer\n");
  std::stringstream edges("src,dst\ny,x\n");
  const auto net = read_network_csv(edges, nodes, testing::schema());
  CHECK(net.node_count() == 2);
  CHECK(net.has_edge(0, 1));
  CHECK(net.attributes().label(1, 0) == "unsheltered");

  std::stringstream bad_nodes("id,group,gender,race,age_band,season\n"
                              "x,sheltered,Male,Purple,25+,Fall\n");
  std::stringstream bad_edges("src,dst\nx,z\n");
  try {
    read_network_csv(bad_edges, bad_nodes, testing::schema());
    FAIL("expected an error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("nodes:2") != std::string::npos);
    CHECK(msg.find("edges:2") != std::string::npos);
  }
}
