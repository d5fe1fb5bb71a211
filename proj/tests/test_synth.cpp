#include <doctest.h>

#include "sonarr/synth.hpp"
#include "support.hpp"

using namespace sonarr;

namespace {

RunSummary run(const SyntheticModel& m) {
  RunSummary s;
  support::collect(IndexedNetwork(m.network), support::route(m.start, m.end), &s);
  return s;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("names") {
    CHECK(parse_topology("layered") == Topology::Layered);
    CHECK_FALSE(parse_topology("ring"));
    CHECK(parse_rule_template("node_simple") == RuleTemplate::NodeSimple);
    CHECK(parse_rule_template("no-link-retraversal") == RuleTemplate::NoLinkRetraversal);
    CHECK(topology_name(Topology::Complete) == "complete");
    CHECK(rule_template_name(RuleTemplate::PassThrough) == "pass_through");
  }

  TEST_CASE("chains have a single path through every link") {
    for (int n = 2; n <= 8; ++n) {
      CAPTURE(n);
      for (auto t : {RuleTemplate::PassThrough, RuleTemplate::NoLinkRetraversal, RuleTemplate::NodeSimple}) {
        const auto m = chain(n, t);
        CHECK(validate_network(m.network).empty());
        CHECK(m.start == 0);
        CHECK(m.end == n - 1);
        const auto s = run(m);
        CHECK(s.total_final_paths == 1);
        CHECK(s.longest_chain == ChainExtreme{static_cast<std::uint64_t>(n), 1});
      }
    }
  }

  TEST_CASE("node_simple on complete graphs counts simple paths") {
    const std::uint64_t expected[] = {0, 0, 0, 2, 5, 16, 65};
    for (int n = 3; n <= 6; ++n) {
      CAPTURE(n);
      const auto m = complete(n, RuleTemplate::NodeSimple);
      CHECK(count_simple_paths(m.network, m.start, m.end) == expected[n]);
      CHECK(run(m).total_final_paths == expected[n]);
    }
  }

  TEST_CASE("no_link_retraversal on complete graphs counts trails") {
    for (int n = 3; n <= 5; ++n) {
      CAPTURE(n);
      const auto m = complete(n, RuleTemplate::NoLinkRetraversal);
      CHECK(run(m).total_final_paths == count_trails(m.network, m.start, m.end));
    }
  }

  TEST_CASE("layered graphs have width^depth paths") {
    for (auto [w, d] : {std::pair{1, 1}, {2, 3}, {3, 2}, {4, 3}}) {
      CAPTURE(w);
      CAPTURE(d);
      const auto m = layered(w, d, RuleTemplate::NoLinkRetraversal);
      std::uint64_t expected = 1;
      for (int i = 0; i < d; ++i) expected *= static_cast<std::uint64_t>(w);
      CHECK(count_simple_paths(m.network, m.start, m.end) == expected);
      CHECK(run(m).total_final_paths == expected);
      CHECK(m.network.containers.size() == static_cast<std::size_t>(w * d + 2));
    }
  }

  TEST_CASE("seed changes only annotations") {
    const auto a = complete(4, RuleTemplate::NodeSimple, 1);
    const auto b = complete(4, RuleTemplate::NodeSimple, 2);
    CHECK(a.network.links.size() == b.network.links.size());
    CHECK(run(a).total_final_paths == run(b).total_final_paths);
    CHECK(render_network(complete(4, RuleTemplate::NodeSimple, 1).network) == render_network(a.network));
  }

  TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(chain(1, RuleTemplate::PassThrough), ModelError);
    CHECK_THROWS_AS(layered(0, 2, RuleTemplate::PassThrough), ModelError);
    CHECK_THROWS_AS(random_network(1, {1, 1, 1, false}), ModelError);
  }

  TEST_CASE("random models are valid, bounded and reproducible") {
    for (bool cyclic : {false, true}) {
      const RandomModelLimits limits{8, 12, 6, cyclic};
      for (std::uint64_t seed = 0; seed < 200; ++seed) {
        CAPTURE(seed);
        const auto m = random_network(seed, limits);
        const auto& n = m.network;
        REQUIRE(validate_network(n).empty());
        CHECK(n.containers.size() <= 8);
        CHECK(n.links.size() <= 12);
        CHECK(n.generic_rules.size() <= 6);
        CHECK(m.start == 0);
        CHECK(m.end == static_cast<Id>(n.containers.size()) - 1);
        if (cyclic) CHECK(n.links.size() >= std::min<std::size_t>(n.containers.size(), 12));
        CHECK(render_network(random_network(seed, limits).network) == render_network(n));
      }
    }
    CHECK(render_network(random_network(1).network) != render_network(random_network(2).network));
  }

  TEST_CASE("brute-force oracles on a hand-built graph") {
    // Triangle plus a pendant: 0-1, 1-2, 0-2, 2-3.
    Network n;
    for (Id i = 0; i < 4; ++i) n.containers.push_back({i, "c" + std::to_string(i), {}, {}});
    n.links = {{0, "a", 0, 1, false, {}, {}},
               {1, "b", 1, 2, false, {}, {}},
               {2, "c", 0, 2, false, {}, {}},
               {3, "d", 2, 3, false, {}, {}}};
    CHECK(count_simple_paths(n, 0, 3) == 2);
    CHECK(count_trails(n, 0, 3) == 2);
    CHECK(count_trails(n, 0, 2) == 2);
    n.links[3].directed = true;
    n.links[3].endpoint_a = 3;
    n.links[3].endpoint_b = 2;
    CHECK(count_simple_paths(n, 0, 3) == 0);
  }
}
