#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "sonarr/network.hpp"

namespace sonarr {

enum class Topology { Chain, Complete, Layered };

// pass_through: every link is always crossable; only the termination
//   heuristic bounds the search.
// no_link_retraversal: crossing a link consumes it (trail semantics).
// node_simple: a container may be entered at most once (simple paths).
enum class RuleTemplate { PassThrough, NoLinkRetraversal, NodeSimple };

struct SyntheticSpec {
  Topology topology = Topology::Chain;
  // Container count for chain and complete.
  int n = 2;
  int width = 1;
  int depth = 1;
  RuleTemplate rule_template = RuleTemplate::NoLinkRetraversal;
  // Drives link traversal chances and rule impacts only; topology and rules
  // are fixed by the other fields.
  std::uint64_t seed = 0;
};

struct SyntheticModel {
  Network network;
  Id start = 0;
  Id end = 0;
};

std::optional<Topology> parse_topology(std::string_view name);
std::optional<RuleTemplate> parse_rule_template(std::string_view name);
std::string_view topology_name(Topology t);
std::string_view rule_template_name(RuleTemplate t);

// Throws ModelError for an invalid spec (n < 2, width or depth < 1).
SyntheticModel generate(const SyntheticSpec& spec);

// n containers in a line joined by n - 1 undirected links.
SyntheticModel chain(int n, RuleTemplate t, std::uint64_t seed = 0);
// n containers, an undirected link between every pair.
SyntheticModel complete(int n, RuleTemplate t, std::uint64_t seed = 0);
// start, depth layers of width containers, end; directed links from every
// container of a layer to every container of the next. width^depth paths.
SyntheticModel layered(int width, int depth, RuleTemplate t, std::uint64_t seed = 0);

struct RandomModelLimits {
  int max_containers = 8;
  int max_links = 12;
  int max_generic_rules = 6;
  // Adds rule pairs that undo each other and guarantees a topological cycle.
  bool deliberate_cycles = false;
};

// Seeded random model. Start is container 0 and end is the highest ID.
SyntheticModel random_network(std::uint64_t seed, const RandomModelLimits& limits = {});

// Brute-force oracles over the base topology (directed links respected).
// Simple paths from s to t.
std::uint64_t count_simple_paths(const Network& net, Id s, Id t);
// Walks from s that use each link at most once and stop on first reaching t.
std::uint64_t count_trails(const Network& net, Id s, Id t);

}  // namespace sonarr
