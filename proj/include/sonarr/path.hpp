#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <vector>

#include "sonarr/network.hpp"

namespace sonarr {

using Clock = std::chrono::steady_clock;

struct FactValue {
  Id fact = 0;
  bool value = false;

  bool operator==(const FactValue&) const = default;
};

// Path-local copy of a container or link. Covers exactly the facts of its
// base entity, in the base entity's order.
struct Variant {
  Id base_id = 0;
  EntityKind kind = EntityKind::Container;
  std::vector<FactValue> facts;

  bool operator==(const Variant&) const = default;
};

Variant clone_entity(const Container& c);
Variant clone_entity(const Link& l);

// One container-link-container step. A finalization connection carries only
// entity1.
struct Connection {
  Id id = 0;
  std::optional<Variant> entity1;
  std::optional<Variant> link;
  std::optional<Variant> entity2;
  // In firing order; never holds a rule twice.
  std::vector<Id> triggered_rules;
  std::uint32_t generic_triggers = 0;
  // Environment writes made while assessing this connection.
  std::vector<FactValue> env_fact_changes;

  bool is_finalization() const noexcept { return entity1 && !link && !entity2; }

  bool operator==(const Connection&) const = default;
};

struct MetricVector {
  Id id = 0;
  double availability = 0.0;
  double confidentiality = 0.0;
  double integrity = 0.0;
  double traversability_chance = 1.0;
  // Milliseconds from traversal start to finalization.
  double total_run_time = 0.0;

  bool operator==(const MetricVector&) const = default;
};

struct RealityPath {
  Id id = 0;
  // Container the path was seeded at; the current container while the
  // connection list is empty.
  Id origin = 0;
  std::vector<Connection> connections;
  // Working environment state (full snapshot, not deltas).
  std::vector<FactValue> env_facts;
  std::map<Id, Variant> active_containers;
  std::map<Id, Variant> active_links;
  Clock::time_point started_at{};
  Clock::time_point finalized_at{};
  MetricVector metrics;

  Id current_container() const;
  std::size_t rules_triggered() const;

  bool operator==(const RealityPath&) const = default;
};

}  // namespace sonarr
