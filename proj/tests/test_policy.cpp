#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "qroutesim/policy.hpp"
#include "qroutesim/topology.hpp"

using namespace qroutesim;

namespace {

Topology line_graph(int n) {
  std::vector<Link> links;
  for (int i = 0; i + 1 < n; ++i) links.emplace_back(i, i + 1);
  return Topology(n, links);
}

LearningParams first_tie_params() {
  LearningParams params;
  params.tie_break = TieBreak::first;
  return params;
}

}  // namespace

TEST_CASE("confidence learning rate") {
  CHECK(confidence_learning_rate(1.0, 0.3) == doctest::Approx(0.3));
  CHECK(confidence_learning_rate(0.0, 0.3) == doctest::Approx(1.0));
  CHECK(confidence_learning_rate(0.5, 0.7) == doctest::Approx(0.7));
  CHECK_THROWS_AS(confidence_learning_rate(-0.1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(confidence_learning_rate(0.5, 1.2), std::invalid_argument);

  // zero local confidence always means a full overwrite
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    CHECK(confidence_learning_rate(0.0, unit(rng)) == 1.0);
  }
}

TEST_CASE("confidence decay") {
  CHECK(decay_confidence(0.8, 0.95) == doctest::Approx(0.76));
  CHECK(decay_confidence(0.0, 0.5) == 0.0);
  CHECK(decay_confidence(1.0, 0.95) == doctest::Approx(0.95));
  CHECK_THROWS_AS(decay_confidence(0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(decay_confidence(0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(decay_confidence(1.5, 0.95), std::invalid_argument);
}

TEST_CASE("confidence update") {
  CHECK(update_confidence(0.5, 0.9) == doctest::Approx(0.86));
  CHECK(update_confidence(0.0, 1.0) == doctest::Approx(1.0));
  for (const double c : {0.0, 0.25, 0.5, 1.0}) {
    CHECK(update_confidence(c, c) == doctest::Approx(c));
  }
  CHECK_THROWS_AS(update_confidence(-0.2, 0.5), std::invalid_argument);
}

TEST_CASE("confidence stays in [0,1] under any update/decay interleaving") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> decay_rate(0.01, 0.99);
  for (int sequence = 0; sequence < 2000; ++sequence) {
    double c = unit(rng);
    for (int op = 0; op < 30; ++op) {
      if (rng() % 2 == 0) {
        c = update_confidence(c, unit(rng));
      } else {
        c = decay_confidence(c, decay_rate(rng));
      }
      REQUIRE(c >= 0.0);
      REQUIRE(c <= 1.0);
    }
  }
}

TEST_CASE("q_update moves the estimate toward the observed total") {
  QTable table(0, {1, 2}, 5);

  SUBCASE("hand-evaluated step") {
    table.set_value(1, 4, 10.0);
    const Feedback fb{1, 4, 5.0, 1.0};
    const double result = q_update(table, 1, 4, 2.0, 1.0, fb, 0.85);
    CHECK(result == doctest::Approx(8.3));
    CHECK(table.value(1, 4) == doctest::Approx(8.3));
  }
  SUBCASE("fixed point") {
    table.set_value(1, 4, 8.0);
    const Feedback fb{1, 4, 5.0, 1.0};
    for (const double eta : {0.1, 0.5, 1.0}) {
      CHECK(q_update(table, 1, 4, 2.0, 1.0, fb, eta) == doctest::Approx(8.0));
    }
  }
  SUBCASE("one-hop bootstrap from zero") {
    const Feedback fb{4, 4, 0.0, 1.0};
    CHECK(q_update(table, 1, 4, 0.0, 1.0, fb, 0.85) == doctest::Approx(0.85));
  }
  SUBCASE("missing entry") {
    const Feedback fb{3, 4, 5.0, 1.0};
    CHECK_THROWS_AS(q_update(table, 3, 4, 0.0, 1.0, fb, 0.85), std::out_of_range);
    CHECK_THROWS_AS(q_update(table, 1, 0, 0.0, 1.0, fb, 0.85), std::out_of_range);
  }
  SUBCASE("bad arguments") {
    const Feedback fb{1, 4, 5.0, 1.0};
    CHECK_THROWS_AS(q_update(table, 1, 4, -1.0, 1.0, fb, 0.85),
                    std::invalid_argument);
    CHECK_THROWS_AS(q_update(table, 1, 4, 0.0, 0.5, fb, 0.85),
                    std::invalid_argument);
    CHECK_THROWS_AS(q_update(table, 1, 4, 0.0, 1.0, fb, 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("q_update never drives an estimate negative") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  QTable table(0, {1}, 3);
  for (int i = 0; i < 5000; ++i) {
    const Feedback fb{1, 2, 20.0 * unit(rng), 1.0};
    const double eta = std::max(1e-3, unit(rng));
    const double result =
        q_update(table, 1, 2, 10.0 * unit(rng), 1.0 + unit(rng), fb, eta);
    REQUIRE(result >= 0.0);
  }
}

TEST_CASE("cq_update blends estimate and confidence together") {
  SUBCASE("hand-evaluated step") {
    QTable q(0, {1, 2}, 5);
    ConfidenceTable c(0, {1, 2}, 5);
    q.set_value(1, 4, 10.0);
    c.set_value(1, 4, 0.5);
    const Feedback fb{1, 4, 5.0, 0.9};
    const auto result = cq_update(q, c, 1, 4, 2.0, 1.0, fb);
    CHECK(result.q_value == doctest::Approx(8.2));
    CHECK(result.c_value == doctest::Approx(0.86));
  }
  SUBCASE("zero confidence entry is fully overwritten") {
    QTable q(0, {1}, 3);
    ConfidenceTable c(0, {1}, 3);
    q.set_value(1, 2, 7.0);
    for (const double reported : {0.0, 0.4, 1.0}) {
      c.set_value(1, 2, 0.0);
      q.set_value(1, 2, 7.0);
      const Feedback fb{1, 2, 3.0, reported};
      const auto result = cq_update(q, c, 1, 2, 1.0, 1.0, fb);
      CHECK(result.q_value == doctest::Approx(5.0));  // target 3+1+1
    }
  }
  SUBCASE("converged one-hop entry stays put") {
    QTable q(0, {1}, 2);
    ConfidenceTable c(0, {1}, 2);
    q.set_value(1, 1, 1.0);
    c.set_value(1, 1, 1.0);
    const Feedback fb{1, 1, 0.0, 1.0};
    const auto result = cq_update(q, c, 1, 1, 0.0, 1.0, fb);
    CHECK(result.q_value == doctest::Approx(1.0));
    CHECK(result.c_value == doctest::Approx(1.0));
  }
}

TEST_CASE("cq_update with full local confidence matches q_update at eta=c_est") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double q0 = 30.0 * unit(rng);
    const double c_est = std::max(1e-3, unit(rng));
    const double wait = 5.0 * unit(rng);
    const Feedback fb{1, 2, 10.0 * unit(rng), c_est};

    QTable q_a(0, {1}, 3);
    ConfidenceTable c_a(0, {1}, 3);
    q_a.set_value(1, 2, q0);
    c_a.set_value(1, 2, 1.0);
    const auto via_cq = cq_update(q_a, c_a, 1, 2, wait, 1.0, fb);

    QTable q_b(0, {1}, 3);
    q_b.set_value(1, 2, q0);
    const double via_q = q_update(q_b, 1, 2, wait, 1.0, fb, c_est);

    REQUIRE(via_cq.q_value == via_q);
  }
}

TEST_CASE("decay_all_unvisited scales exactly the untouched entries") {
  ConfidenceTable table(1, {0, 2}, 3);
  table.set_value(0, 2, 0.8);
  table.set_value(2, 0, 0.6);
  table.set_value(2, 2, 0.4);

  SUBCASE("nothing updated: everything decays") {
    table.decay_all_unvisited({}, 0.95);
    CHECK(table.value(0, 2) == doctest::Approx(0.76));
    CHECK(table.value(2, 0) == doctest::Approx(0.57));
    CHECK(table.value(2, 2) == doctest::Approx(0.38));
  }
  SUBCASE("everything updated: table unchanged") {
    table.decay_all_unvisited({{0, 2}, {2, 0}, {2, 2}}, 0.95);
    CHECK(table.value(0, 2) == 0.8);
    CHECK(table.value(2, 0) == 0.6);
    CHECK(table.value(2, 2) == 0.4);
  }
  SUBCASE("two idle steps compound the decay") {
    table.decay_all_unvisited({{2, 0}, {2, 2}}, 0.95);
    table.decay_all_unvisited({{2, 0}, {2, 2}}, 0.95);
    CHECK(table.value(0, 2) == doctest::Approx(0.8 * 0.95 * 0.95));
    CHECK(table.value(0, 2) == doctest::Approx(0.722));
    CHECK(table.value(2, 0) == 0.6);
  }
  SUBCASE("unknown entry rejected") {
    CHECK_THROWS_AS(table.decay_all_unvisited({{1, 2}}, 0.95), std::out_of_range);
  }
}

TEST_CASE("tables are initialized to zero with the destination base case") {
  const Topology grid = build_irregular_grid_6x6();
  const LearningParams params;

  const QRoutingPolicy q_policy(grid, params);
  for (const NodeId x : {0, 17, 35}) {
    const QTable& table = q_policy.table(x);
    for (const NodeId y : table.neighbors()) {
      for (NodeId d = 0; d < grid.node_count(); ++d) {
        if (d == x) continue;
        CHECK(table.value(y, d) == 0.0);
      }
    }
  }

  const CqRoutingPolicy cq_policy(grid, params);
  for (const NodeId x : {0, 17, 35}) {
    const ConfidenceTable& table = cq_policy.confidence(x);
    for (const NodeId y : grid.neighbors(x)) {
      for (NodeId d = 0; d < grid.node_count(); ++d) {
        if (d == x) continue;
        CHECK(table.value(y, d) == 0.0);
      }
    }
  }

  // a node reporting about itself: estimate 0 at full confidence
  const Feedback fb = cq_policy.feedback_from(4, 4);
  CHECK(fb.best_estimate == 0.0);
  CHECK(fb.estimate_confidence == 1.0);
}

TEST_CASE("select_next_hop is a greedy argmin with pinned tie-breaking") {
  const Topology line = line_graph(3);
  Rng rng(1);

  SUBCASE("argmin wins") {
    QRoutingPolicy policy(line, first_tie_params());
    policy.table(1).set_value(0, 2, 3.0);
    policy.table(1).set_value(2, 2, 5.0);
    CHECK(policy.select_next_hop(1, 2, rng) == 0);
    policy.table(1).set_value(0, 2, 6.0);
    CHECK(policy.select_next_hop(1, 2, rng) == 2);
  }
  SUBCASE("first tie-break takes the lowest index") {
    QRoutingPolicy policy(line, first_tie_params());
    for (int i = 0; i < 10; ++i) {
      CHECK(policy.select_next_hop(1, 2, rng) == 0);  // all entries equal 0
    }
  }
  SUBCASE("random tie-break is uniform over the tied argmin set") {
    const Topology star(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2}});
    LearningParams params;  // random tie-break
    QRoutingPolicy policy(star, params);
    policy.table(0).set_value(3, 4, 9.0);  // exclude one neighbor from the tie
    std::array<int, 5> hits{};
    for (int i = 0; i < 6000; ++i) {
      ++hits[policy.select_next_hop(0, 4, rng)];
    }
    CHECK(hits[3] == 0);
    for (const NodeId y : {1, 2, 4}) {
      CHECK(hits[y] > 1800);
      CHECK(hits[y] < 2200);
    }
  }
}

TEST_CASE("selection is invariant under shifting all entries of a destination") {
  const Topology grid = build_irregular_grid_6x6();
  LearningParams params = first_tie_params();
  QRoutingPolicy policy(grid, params);
  QRoutingPolicy shifted(grid, params);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> value(0.0, 20.0);
  for (NodeId x = 0; x < grid.node_count(); ++x) {
    for (const NodeId y : grid.neighbors(x)) {
      for (NodeId d = 0; d < grid.node_count(); ++d) {
        if (d == x) continue;
        const double v = value(rng);
        policy.table(x).set_value(y, d, v);
        shifted.table(x).set_value(y, d, v + 7.5);
      }
    }
  }
  Rng tie_rng(1);
  for (NodeId x = 0; x < grid.node_count(); ++x) {
    for (NodeId d = 0; d < grid.node_count(); ++d) {
      if (d == x) continue;
      CHECK(policy.select_next_hop(x, d, tie_rng) ==
            shifted.select_next_hop(x, d, tie_rng));
    }
  }
}

TEST_CASE("shortest-path policy follows BFS next hops") {
  const Topology grid = build_irregular_grid_6x6();
  const ShortestPathPolicy policy(grid);
  Rng rng(1);

  CHECK(policy.select_next_hop(20, 21, rng) == 21);

  // first hop from 0 toward 35 stays on a 10-hop path
  const NodeId hop = policy.select_next_hop(0, 35, rng);
  const auto dist = hop_distances(grid, 35);
  CHECK(dist[0] == 10);
  CHECK(dist[hop] == 9);

  // every hop decreases the BFS distance on every pair
  for (NodeId d = 0; d < grid.node_count(); ++d) {
    const auto dist_d = hop_distances(grid, d);
    for (NodeId x = 0; x < grid.node_count(); ++x) {
      if (x == d) continue;
      const NodeId y = policy.select_next_hop(x, d, rng);
      CHECK(dist_d[y] == dist_d[x] - 1);
    }
  }
}

TEST_CASE("policy factory applies the stated initialization") {
  const Topology grid = build_irregular_grid_6x6();
  const LearningParams params;
  const auto q = make_policy(PolicyKind::q_routing, grid, params);
  CHECK(q->kind() == PolicyKind::q_routing);
  CHECK(q->learns());
  const auto sp = make_policy(PolicyKind::shortest_path, grid, params);
  CHECK_FALSE(sp->learns());
  const auto cq = make_policy(PolicyKind::cq_routing, grid, params);
  CHECK(cq->kind() == PolicyKind::cq_routing);

  LearningParams bad;
  bad.eta = 1.5;
  CHECK_THROWS_AS(make_policy(PolicyKind::q_routing, grid, bad),
                  std::invalid_argument);
}

TEST_CASE("link events drop and recreate table entries") {
  const Topology grid = build_irregular_grid_6x6();
  LearningParams params = first_tie_params();
  CqRoutingPolicy policy(grid, params);
  policy.table(20).set_value(21, 35, 4.0);
  policy.confidence(20).set_value(21, 35, 0.9);

  policy.on_link_down(20, 21);
  CHECK_THROWS_AS((void)policy.table(20).value(21, 35), std::out_of_range);
  CHECK_THROWS_AS((void)policy.confidence(20).value(21, 35), std::out_of_range);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    CHECK(policy.select_next_hop(20, 35, rng) != 21);
  }

  policy.on_link_up(20, 21);
  CHECK(policy.table(20).value(21, 35) == 0.0);
  CHECK(policy.confidence(20).value(21, 35) == 0.0);
}

TEST_CASE("random-walk updates converge to exact remaining hop counts") {
  const Topology path = line_graph(5);
  LearningParams params;  // eta 0.85
  QRoutingPolicy policy(path, params);

  std::mt19937_64 walk_rng(2024);
  std::uniform_int_distribution<NodeId> any_node(0, 4);
  NodeId at = 0;
  NodeId dst = 4;
  for (int update = 0; update < 10000; ++update) {
    const auto& nbrs = path.neighbors(at);
    const NodeId y =
        nbrs[std::uniform_int_distribution<std::size_t>(0, nbrs.size() - 1)(walk_rng)];
    const Feedback fb = policy.feedback_from(y, dst);
    policy.learn(at, y, dst, 0.0, 1.0, fb);
    if (y == dst) {
      at = any_node(walk_rng);
      do {
        dst = any_node(walk_rng);
      } while (dst == at);
    } else {
      at = y;
    }
  }

  for (NodeId d = 0; d < 5; ++d) {
    const auto dist = hop_distances(path, d);
    for (NodeId x = 0; x < 5; ++x) {
      if (x == d) continue;
      for (const NodeId y : path.neighbors(x)) {
        REQUIRE(std::abs(policy.table(x).value(y, d) - (1.0 + dist[y])) <= 1e-6);
      }
    }
  }
}

TEST_CASE("policy names parse both short and long forms") {
  CHECK(parse_policy_kind("sp") == PolicyKind::shortest_path);
  CHECK(parse_policy_kind("shortest_path") == PolicyKind::shortest_path);
  CHECK(parse_policy_kind("q") == PolicyKind::q_routing);
  CHECK(parse_policy_kind("cq") == PolicyKind::cq_routing);
  CHECK_THROWS_AS(parse_policy_kind("ospf"), std::invalid_argument);
  CHECK(to_string(PolicyKind::cq_routing) == "cq_routing");
}

TEST_CASE("table dumps are CSV with one row per entry") {
  const Topology line = line_graph(3);
  const LearningParams params;
  QRoutingPolicy q_policy(line, params);
  std::ostringstream q_out;
  q_policy.dump_tables(q_out);
  std::string line1;
  std::istringstream parse(q_out.str());
  std::getline(parse, line1);
  CHECK(line1 == "node,neighbor,destination,q_value,c_value");
  int rows = 0;
  while (std::getline(parse, line1)) ++rows;
  CHECK(rows == 8);  // (1+2+1) neighbor slots x 2 destinations

  CqRoutingPolicy cq_policy(line, params);
  std::ostringstream cq_out;
  cq_policy.dump_tables(cq_out);
  CHECK(cq_out.str().find("0,1,1,0.000000,0.000000") != std::string::npos);
}
