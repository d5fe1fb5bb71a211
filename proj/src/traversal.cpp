#include "sonarr/traversal.hpp"

#include <algorithm>
#include <string>

namespace sonarr {
namespace {

template <typename Entity>
Variant clone_facts(const Entity& e, EntityKind kind) {
  Variant v;
  v.base_id = e.id;
  v.kind = kind;
  v.facts.reserve(e.facts.size());
  for (const auto& f : e.facts) v.facts.push_back({f.id, f.value});
  return v;
}

std::map<Id, Variant>& active_map(RealityPath& path, EntityKind kind) {
  return kind == EntityKind::Container ? path.active_containers : path.active_links;
}

// Active variant for a base entity, created from the base network on first
// access.
Variant& active_variant(RealityPath& path, const IndexedNetwork& net, EntityKind kind,
                        std::size_t index) {
  auto& map = active_map(path, kind);
  const Id base = kind == EntityKind::Container ? net.container(index).id : net.link(index).id;
  auto it = map.find(base);
  if (it != map.end()) return it->second;
  Variant v = kind == EntityKind::Container ? clone_entity(net.container(index))
                                            : clone_entity(net.link(index));
  return map.emplace(base, std::move(v)).first->second;
}

// Writes one entity fact into the path's active variant and into whichever
// connection entity mirrors that variant.
void write_entity_fact(RealityPath& path, Connection& conn, const IndexedNetwork& net,
                       EntityKind kind, std::size_t index, std::size_t slot, bool value) {
  Variant& v = active_variant(path, net, kind, index);
  v.facts[slot].value = value;
  auto sync = [&v](std::optional<Variant>& entity) {
    if (entity && entity->kind == v.kind && entity->base_id == v.base_id) *entity = v;
  };
  sync(conn.entity1);
  sync(conn.link);
  sync(conn.entity2);
}

void write_fact(RealityPath& path, Connection& conn, const IndexedNetwork& net,
                const FactLocation& loc, bool value) {
  switch (loc.owner) {
    case FactOwner::Environment:
      path.env_facts[loc.slot].value = value;
      conn.env_fact_changes.push_back({path.env_facts[loc.slot].fact, value});
      break;
    case FactOwner::Container:
      write_entity_fact(path, conn, net, EntityKind::Container, loc.owner_index, loc.slot, value);
      break;
    case FactOwner::Link:
      write_entity_fact(path, conn, net, EntityKind::Link, loc.owner_index, loc.slot, value);
      break;
  }
}

const std::optional<Variant>& positioned(const Connection& conn, Position pos) {
  switch (pos) {
    case Position::StartContainer: return conn.entity1;
    case Position::EndContainer: return conn.entity2;
    case Position::Link: return conn.link;
  }
  return conn.entity1;
}

std::optional<std::size_t> entity_index(const IndexedNetwork& net, const Variant& v) {
  return v.kind == EntityKind::Container ? net.container_index(v.base_id)
                                         : net.link_index(v.base_id);
}

std::optional<std::size_t> positioned_slot(const Connection& conn, const IndexedNetwork& net,
                                           Position pos, Id property) {
  const auto& entity = positioned(conn, pos);
  if (!entity) return std::nullopt;
  const auto index = entity_index(net, *entity);
  if (!index) return std::nullopt;
  return net.property_slot(entity->kind, *index, property);
}

bool already_triggered(const Connection& conn, Id rule) {
  return std::find(conn.triggered_rules.begin(), conn.triggered_rules.end(), rule) !=
         conn.triggered_rules.end();
}

void dispatch_actions(const std::vector<Id>& actions, Id rule, const TraversalContext& ctx) {
  if (ctx.actions == nullptr) return;
  for (Id a : actions) {
    const Action* action = ctx.net.find_action(a);
    if (action != nullptr && action->enabled) ctx.actions->dispatch(*action, rule);
  }
}

bool same_state(const Connection& a, const Connection& b) {
  return a.entity1 == b.entity1 && a.link == b.link && a.entity2 == b.entity2;
}

double combine_impacts(double acc, double impact) {
  if (!(impact >= 0.0 && impact <= 1.0)) {
    throw ModelError("rule impact annotation outside [0, 1]");
  }
  return acc * (1.0 - impact);
}

}  // namespace

Variant clone_entity(const Container& c) { return clone_facts(c, EntityKind::Container); }
Variant clone_entity(const Link& l) { return clone_facts(l, EntityKind::Link); }

Id RealityPath::current_container() const {
  if (connections.empty()) return origin;
  const Connection& last = connections.back();
  if (last.entity2) return last.entity2->base_id;
  return last.entity1 ? last.entity1->base_id : origin;
}

std::size_t RealityPath::rules_triggered() const {
  std::size_t n = 0;
  for (const auto& c : connections) n += c.triggered_rules.size();
  return n;
}

const char* stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::Exhausted: return "Exhausted";
    case StopReason::MaxPaths: return "MaxPaths";
    case StopReason::TimeLimit: return "TimeLimit";
    case StopReason::StepBudget: return "StepBudget";
  }
  return "Exhausted";
}

std::optional<StopReason> parse_stop_reason(std::string_view name) {
  for (auto r : {StopReason::Exhausted, StopReason::MaxPaths, StopReason::TimeLimit,
                 StopReason::StepBudget}) {
    if (name == stop_reason_name(r)) return r;
  }
  return std::nullopt;
}

void RunSummary::record(const RealityPath& path) {
  const std::uint64_t n = path.connections.size();
  ++total_final_paths;
  total_connections += n;
  total_rules_triggered += path.rules_triggered();
  if (longest_chain.count == 0 || n > longest_chain.length) {
    longest_chain = {n, 1};
  } else if (n == longest_chain.length) {
    ++longest_chain.count;
  }
  if (shortest_chain.count == 0 || n < shortest_chain.length) {
    shortest_chain = {n, 1};
  } else if (n == shortest_chain.length) {
    ++shortest_chain.count;
  }
}

void RunSummary::merge(const RunSummary& other) {
  total_final_paths += other.total_final_paths;
  total_connections += other.total_connections;
  total_rules_triggered += other.total_rules_triggered;
  expansions += other.expansions;
  if (other.longest_chain.count != 0) {
    if (longest_chain.count == 0 || other.longest_chain.length > longest_chain.length) {
      longest_chain = other.longest_chain;
    } else if (other.longest_chain.length == longest_chain.length) {
      longest_chain.count += other.longest_chain.count;
    }
  }
  if (other.shortest_chain.count != 0) {
    if (shortest_chain.count == 0 || other.shortest_chain.length < shortest_chain.length) {
      shortest_chain = other.shortest_chain;
    } else if (other.shortest_chain.length == shortest_chain.length) {
      shortest_chain.count += other.shortest_chain.count;
    }
  }
}

Id PathIdAllocator::take() {
  const Id id = next_;
  next_ += stride_;
  return id;
}

void check_config(const IndexedNetwork& net, const TraversalConfig& config) {
  if (!net.container_index(config.start)) {
    throw TraversalError("start container " + std::to_string(config.start) + " does not exist");
  }
  if (!net.container_index(config.end)) {
    throw TraversalError("end container " + std::to_string(config.end) + " does not exist");
  }
  if (config.generic_rule_limit == 0) {
    throw TraversalError("generic rule limit must be positive");
  }
}

RealityPath seed_path(const IndexedNetwork& net, Id start, Id id, Clock::time_point started_at) {
  RealityPath path;
  path.id = id;
  path.origin = start;
  path.started_at = started_at;
  for (const auto& f : net.network().environment_facts) path.env_facts.push_back({f.id, f.value});
  return path;
}

RealityPath clone_path(const RealityPath& path, Id new_id) {
  RealityPath copy = path;
  copy.id = new_id;
  return copy;
}

Connection make_connection(RealityPath& path, const IndexedNetwork& net, Id from, Id link, Id to,
                           Id connection_id) {
  const auto link_idx = net.link_index(link);
  if (!link_idx) throw TraversalError("unknown link " + std::to_string(link));
  const auto from_idx = net.container_index(from);
  const auto to_idx = net.container_index(to);
  if (!from_idx || !to_idx) throw TraversalError("unknown container in connection");
  const Link& l = net.link(*link_idx);
  const bool forward = l.endpoint_a == from && l.endpoint_b == to;
  const bool backward = l.endpoint_b == from && l.endpoint_a == to;
  if (!forward && !backward) {
    throw TraversalError("link " + std::to_string(link) + " does not join containers " +
                         std::to_string(from) + " and " + std::to_string(to));
  }
  if (l.directed && !forward) {
    throw TraversalError("directed link " + std::to_string(link) + " cannot be crossed from " +
                         std::to_string(from));
  }
  Connection conn;
  conn.id = connection_id;
  conn.entity1 = active_variant(path, net, EntityKind::Container, *from_idx);
  conn.link = active_variant(path, net, EntityKind::Link, *link_idx);
  conn.entity2 = active_variant(path, net, EntityKind::Container, *to_idx);
  return conn;
}

Connection make_finalization_connection(RealityPath& path, const IndexedNetwork& net, Id container,
                                        Id connection_id) {
  const auto idx = net.container_index(container);
  if (!idx) throw TraversalError("unknown container " + std::to_string(container));
  Connection conn;
  conn.id = connection_id;
  conn.entity1 = active_variant(path, net, EntityKind::Container, *idx);
  return conn;
}

bool lookup_normal_fact(const RealityPath& path, const IndexedNetwork& net, Id fact) {
  const FactLocation* loc = net.find_fact(fact);
  if (loc == nullptr) throw UnknownIdError("unknown fact ID " + std::to_string(fact));
  switch (loc->owner) {
    case FactOwner::Environment:
      return path.env_facts[loc->slot].value;
    case FactOwner::Container: {
      const Id base = net.container(loc->owner_index).id;
      if (auto it = path.active_containers.find(base); it != path.active_containers.end()) {
        return it->second.facts[loc->slot].value;
      }
      break;
    }
    case FactOwner::Link: {
      const Id base = net.link(loc->owner_index).id;
      if (auto it = path.active_links.find(base); it != path.active_links.end()) {
        return it->second.facts[loc->slot].value;
      }
      break;
    }
  }
  return net.base_fact_value(*loc);
}

bool evaluate_normal_rule(const NormalRule& rule, const RealityPath& path,
                          const Connection& connection, const IndexedNetwork& net) {
  if (already_triggered(connection, rule.id)) return false;
  if (connection.is_finalization()) {
    // Only environment-driven rules are assessed on a finalization step.
    for (const auto& c : rule.preconditions) {
      if (!net.is_environment_fact(c.fact)) return false;
    }
  }
  for (const auto& c : rule.preconditions) {
    if (lookup_normal_fact(path, net, c.fact) != c.value) return false;
  }
  return true;
}

bool evaluate_generic_rule(const GenericRule& rule, const Connection& connection,
                           const IndexedNetwork& net) {
  if (already_triggered(connection, rule.id)) return false;
  for (const auto& c : rule.preconditions) {
    const auto slot = positioned_slot(connection, net, c.position, c.common_property);
    if (!slot) return false;
    if (positioned(connection, c.position)->facts[*slot].value != c.value) return false;
  }
  for (const auto& c : rule.postconditions) {
    if (!positioned_slot(connection, net, c.position, c.common_property)) return false;
  }
  return true;
}

void apply_normal_postconditions(const NormalRule& rule, RealityPath& path, Connection& connection,
                                 const IndexedNetwork& net) {
  connection.triggered_rules.push_back(rule.id);
  for (const auto& post : rule.postconditions) {
    if (const auto* fc = std::get_if<FactCondition>(&post)) {
      write_fact(path, connection, net, *net.find_fact(fc->fact), fc->value);
      continue;
    }
    const auto& pa = std::get<PropertyAssignment>(post);
    for (Id fact : net.facts_with_property(pa.common_property)) {
      write_fact(path, connection, net, *net.find_fact(fact), pa.value);
    }
  }
}

void apply_generic_postconditions(const GenericRule& rule, RealityPath& path,
                                  Connection& connection, const IndexedNetwork& net) {
  connection.triggered_rules.push_back(rule.id);
  ++connection.generic_triggers;
  for (const auto& c : rule.postconditions) {
    const auto& entity = positioned(connection, c.position);
    if (!entity) continue;
    const auto index = entity_index(net, *entity);
    const auto slot = net.property_slot(entity->kind, *index, c.common_property);
    if (!slot) continue;
    write_entity_fact(path, connection, net, entity->kind, *index, *slot, c.value);
  }
  // Refresh the active variants from the connection's entities.
  for (const auto* entity : {&connection.entity1, &connection.link, &connection.entity2}) {
    if (*entity) active_map(path, (*entity)->kind)[(*entity)->base_id] = **entity;
  }
}

const std::vector<Id>& run_rules(RealityPath& path, Connection& connection,
                                 const TraversalContext& ctx) {
  const auto limit = ctx.config.generic_rule_limit;
  while (connection.generic_triggers < limit) {
    bool fired = false;
    for (const NormalRule* rule : ctx.net.normal_rules()) {
      if (evaluate_normal_rule(*rule, path, connection, ctx.net)) {
        apply_normal_postconditions(*rule, path, connection, ctx.net);
        dispatch_actions(rule->actions, rule->id, ctx);
        fired = true;
        break;
      }
    }
    for (const GenericRule* rule : ctx.net.generic_rules()) {
      if (evaluate_generic_rule(*rule, connection, ctx.net)) {
        apply_generic_postconditions(*rule, path, connection, ctx.net);
        dispatch_actions(rule->actions, rule->id, ctx);
        fired = true;
        break;
      }
    }
    if (!fired) break;
  }
  return connection.triggered_rules;
}

bool termination_heuristic(const RealityPath& path, const Connection& connection,
                           const IndexedNetwork& net) {
  // Environment snapshots are rebuilt by replaying each connection's deltas
  // over the base environment.
  std::vector<FactValue> env;
  env.reserve(net.network().environment_facts.size());
  for (const auto& f : net.network().environment_facts) env.push_back({f.id, f.value});
  for (const auto& earlier : path.connections) {
    for (const auto& change : earlier.env_fact_changes) {
      env[net.find_fact(change.fact)->slot].value = change.value;
    }
    if (same_state(earlier, connection) && env == path.env_facts) return false;
  }
  return true;
}

Expansion expand_path(RealityPath path, const TraversalContext& ctx, PathIdAllocator& ids) {
  Expansion out;
  const IndexedNetwork& net = ctx.net;
  const Id current = path.current_container();

  if (current == ctx.config.end && evaluate_filter(ctx.filter, path, net)) {
    RealityPath final_path = std::move(path);
    final_path.id = ids.take();
    Connection conn = make_finalization_connection(
        final_path, net, current, static_cast<Id>(final_path.connections.size()));
    run_rules(final_path, conn, ctx);
    final_path.connections.push_back(std::move(conn));
    final_path.finalized_at = Clock::now();
    final_path.metrics = compute_metrics(final_path, net);
    out.finals.push_back(std::move(final_path));
    return out;
  }

  const auto current_idx = net.container_index(current);
  if (!current_idx) throw TraversalError("path sits on unknown container " + std::to_string(current));

  struct Step {
    Id link;
    Id to;
  };
  std::vector<Step> steps;
  for (std::size_t li : net.incident_links(*current_idx)) {
    const Link& l = net.link(li);
    if (l.endpoint_a == current) {
      steps.push_back({l.id, l.endpoint_b});
    } else if (!l.directed) {
      steps.push_back({l.id, l.endpoint_a});
    }
  }

  for (std::size_t i = 0; i < steps.size(); ++i) {
    // The last branch reuses the parent instead of copying it.
    RealityPath child =
        i + 1 == steps.size() ? std::move(path) : clone_path(path, 0);
    child.id = ids.take();
    Connection conn = make_connection(child, net, current, steps[i].link, steps[i].to,
                                      static_cast<Id>(child.connections.size()));
    run_rules(child, conn, ctx);
    if (conn.generic_triggers == 0) continue;
    if (!termination_heuristic(child, conn, net)) continue;
    child.connections.push_back(std::move(conn));
    out.in_progress.push_back(std::move(child));
  }
  std::reverse(out.in_progress.begin(), out.in_progress.end());
  return out;
}

MetricVector compute_metrics(const RealityPath& path, const IndexedNetwork& net) {
  MetricVector m;
  m.id = path.id;
  m.total_run_time =
      std::chrono::duration<double, std::milli>(path.finalized_at - path.started_at).count();
  double keep_a = 1.0;
  double keep_c = 1.0;
  double keep_i = 1.0;
  for (const auto& conn : path.connections) {
    if (conn.link) {
      if (const auto idx = net.link_index(conn.link->base_id)) {
        m.traversability_chance *= net.link_traversal_chance(*idx);
      }
    }
    for (Id rule : conn.triggered_rules) {
      const RuleImpact* impact = nullptr;
      if (const auto* g = net.find_generic_rule(rule)) {
        impact = &g->impact;
      } else if (const auto* n = net.find_normal_rule(rule)) {
        impact = &n->impact;
      }
      if (impact == nullptr) continue;
      keep_a = combine_impacts(keep_a, impact->availability);
      keep_c = combine_impacts(keep_c, impact->confidentiality);
      keep_i = combine_impacts(keep_i, impact->integrity);
    }
  }
  m.availability = 1.0 - keep_a;
  m.confidentiality = 1.0 - keep_c;
  m.integrity = 1.0 - keep_i;
  return m;
}

}  // namespace sonarr
