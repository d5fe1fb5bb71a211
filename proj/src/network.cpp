#include "sonarr/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_set>

namespace sonarr {
namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out = "network validation failed:";
  for (const auto& line : lines) {
    out += "\n  ";
    out += line;
  }
  return out;
}

bool in_unit_range(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

class Validator {
 public:
  explicit Validator(const Network& net) : net_(net) {}

  std::vector<std::string> run() {
    collect_ids();
    check_entities();
    check_rules();
    check_omitted();
    return std::move(out_);
  }

 private:
  template <typename... Args>
  void report(Args&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    out_.push_back(os.str());
  }

  void collect_ids() {
    for (const auto& p : net_.common_properties) {
      check_id("common property", p.id);
      if (!properties_.insert(p.id).second) report("common property ", p.id, ": duplicate ID");
    }
    for (const auto& c : net_.containers) {
      check_id("container", c.id);
      if (!containers_.insert(c.id).second) report("container ", c.id, ": duplicate ID");
    }
    for (const auto& l : net_.links) {
      check_id("link", l.id);
      if (!links_.insert(l.id).second) report("link ", l.id, ": duplicate ID");
    }
    for (const auto& a : net_.actions) {
      check_id("action", a.id);
      if (!actions_.insert(a.id).second) report("action ", a.id, ": duplicate ID");
    }
    for (const auto& r : net_.normal_rules) {
      check_id("rule", r.id);
      if (!rules_.insert(r.id).second) report("rule ", r.id, ": duplicate ID");
    }
    for (const auto& r : net_.generic_rules) {
      check_id("rule", r.id);
      if (!rules_.insert(r.id).second) report("rule ", r.id, ": duplicate ID");
    }
    auto add_facts = [this](const std::vector<Fact>& facts) {
      for (const auto& f : facts) {
        check_id("fact", f.id);
        if (!facts_.insert(f.id).second) report("fact ", f.id, ": duplicate ID");
      }
    };
    for (const auto& c : net_.containers) add_facts(c.facts);
    for (const auto& l : net_.links) add_facts(l.facts);
    add_facts(net_.environment_facts);
  }

  void check_id(const char* kind, Id id) {
    if (id < 0) report(kind, " ", id, ": negative ID");
  }

  void check_facts(const char* owner, Id owner_id, const std::vector<Fact>& facts,
                   bool unique_properties) {
    std::unordered_set<Id> seen;
    for (const auto& f : facts) {
      if (!f.common_property) continue;
      const Id prop = *f.common_property;
      if (!properties_.contains(prop)) {
        report("fact ", f.id, ": references undeclared common property ", prop);
        continue;
      }
      if (unique_properties && !seen.insert(prop).second) {
        report(owner, " ", owner_id, ": more than one fact with common property ", prop);
      }
    }
  }

  void check_entities() {
    for (const auto& c : net_.containers) check_facts("container", c.id, c.facts, true);
    for (const auto& l : net_.links) {
      check_facts("link", l.id, l.facts, true);
      if (!containers_.contains(l.endpoint_a)) {
        report("link ", l.id, ": endpoint references unknown container ", l.endpoint_a);
      }
      if (!containers_.contains(l.endpoint_b)) {
        report("link ", l.id, ": endpoint references unknown container ", l.endpoint_b);
      }
      if (l.endpoint_a == l.endpoint_b) {
        report("link ", l.id, ": both endpoints are container ", l.endpoint_a);
      }
      const auto chance = traversal_chance(l);
      if (!chance || !in_unit_range(*chance)) {
        report("link ", l.id, ": traversal_chance must be a number in [0, 1]");
      }
    }
    check_facts("environment", 0, net_.environment_facts, false);
  }

  void check_impact(Id rule, const RuleImpact& impact) {
    if (!in_unit_range(impact.availability) || !in_unit_range(impact.confidentiality) ||
        !in_unit_range(impact.integrity)) {
      report("rule ", rule, ": impact annotations must lie in [0, 1]");
    }
  }

  void check_actions(Id rule, const std::vector<Id>& actions) {
    for (Id a : actions) {
      if (!actions_.contains(a)) report("rule ", rule, ": references unknown action ", a);
    }
  }

  void check_rules() {
    for (const auto& r : net_.generic_rules) {
      if (r.preconditions.empty()) report("rule ", r.id, ": no preconditions");
      auto check = [&](const std::vector<PropertyCondition>& conds) {
        for (const auto& c : conds) {
          if (!properties_.contains(c.common_property)) {
            report("rule ", r.id, ": references undeclared common property ", c.common_property);
          }
        }
      };
      check(r.preconditions);
      check(r.postconditions);
      check_actions(r.id, r.actions);
      check_impact(r.id, r.impact);
    }
    for (const auto& r : net_.normal_rules) {
      if (r.preconditions.empty()) report("rule ", r.id, ": no preconditions");
      for (const auto& c : r.preconditions) {
        if (!facts_.contains(c.fact)) report("rule ", r.id, ": references unknown fact ", c.fact);
      }
      for (const auto& post : r.postconditions) {
        if (const auto* fc = std::get_if<FactCondition>(&post)) {
          if (!facts_.contains(fc->fact)) {
            report("rule ", r.id, ": references unknown fact ", fc->fact);
          }
        } else {
          const auto& pa = std::get<PropertyAssignment>(post);
          if (!properties_.contains(pa.common_property)) {
            report("rule ", r.id, ": references undeclared common property ", pa.common_property);
          }
        }
      }
      check_actions(r.id, r.actions);
      check_impact(r.id, r.impact);
    }
  }

  void check_omitted() {
    for (Id r : net_.omitted_rules) {
      if (!rules_.contains(r)) report("rule ", r, ": omitted but not declared");
    }
  }

  const Network& net_;
  std::vector<std::string> out_;
  std::unordered_set<Id> properties_, containers_, links_, actions_, rules_, facts_;
};

Fact* find_fact_mut(Network& net, Id id) {
  auto scan = [id](std::vector<Fact>& facts) -> Fact* {
    auto it = std::find_if(facts.begin(), facts.end(), [id](const Fact& f) { return f.id == id; });
    return it == facts.end() ? nullptr : &*it;
  };
  for (auto& c : net.containers) {
    if (auto* f = scan(c.facts)) return f;
  }
  for (auto& l : net.links) {
    if (auto* f = scan(l.facts)) return f;
  }
  return scan(net.environment_facts);
}

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  out += '"';
  return out;
}

template <typename T>
std::vector<const T*> sorted_by_id(const std::vector<T>& items) {
  std::vector<const T*> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(&item);
  std::sort(out.begin(), out.end(), [](const T* a, const T* b) { return a->id < b->id; });
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : ModelError(join_lines(violations)), violations_(std::move(violations)) {}

std::vector<std::string> validate_network(const Network& net) { return Validator(net).run(); }

Network apply_fact_override(const Network& net, Id fact, bool value) {
  Network out = net;
  Fact* f = find_fact_mut(out, fact);
  if (f == nullptr) throw UnknownIdError("unknown fact ID " + std::to_string(fact));
  f->value = value;
  return out;
}

Network omit_rule(const Network& net, Id rule) {
  const bool known =
      std::any_of(net.normal_rules.begin(), net.normal_rules.end(),
                  [rule](const NormalRule& r) { return r.id == rule; }) ||
      std::any_of(net.generic_rules.begin(), net.generic_rules.end(),
                  [rule](const GenericRule& r) { return r.id == rule; });
  if (!known) throw UnknownIdError("unknown rule ID " + std::to_string(rule));
  Network out = net;
  out.omitted_rules.insert(rule);
  return out;
}

std::string export_dot(const Network& net) {
  const bool any_directed =
      std::any_of(net.links.begin(), net.links.end(), [](const Link& l) { return l.directed; });
  std::ostringstream os;
  os << (any_directed ? "digraph" : "graph") << " network {\n";
  for (const Container* c : sorted_by_id(net.containers)) {
    os << "  c" << c->id << " [label=" << dot_quote(c->name) << "];\n";
  }
  for (const Link* l : sorted_by_id(net.links)) {
    os << "  c" << l->endpoint_a << (any_directed ? " -> " : " -- ") << "c" << l->endpoint_b
       << " [label=" << dot_quote(l->name);
    if (any_directed && !l->directed) os << ", dir=none";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::optional<double> traversal_chance(const Link& link) {
  for (const auto& cp : link.custom_properties) {
    if (cp.key != "traversal_chance") continue;
    double v = 0.0;
    const char* first = cp.value.data();
    const char* last = first + cp.value.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return v;
  }
  return 1.0;
}

IndexedNetwork::IndexedNetwork(Network net) : net_(std::move(net)) {
  if (auto violations = validate_network(net_); !violations.empty()) {
    throw ValidationError(std::move(violations));
  }

  container_props_.resize(net_.containers.size());
  incident_.resize(net_.containers.size());
  for (std::size_t i = 0; i < net_.containers.size(); ++i) {
    const auto& c = net_.containers[i];
    container_index_.emplace(c.id, i);
    for (std::size_t s = 0; s < c.facts.size(); ++s) {
      const auto& f = c.facts[s];
      facts_.emplace(f.id, FactLocation{FactOwner::Container, i, s});
      if (f.common_property) container_props_[i].emplace_back(*f.common_property, s);
    }
  }
  link_props_.resize(net_.links.size());
  link_chance_.resize(net_.links.size());
  for (std::size_t i = 0; i < net_.links.size(); ++i) {
    const auto& l = net_.links[i];
    link_index_.emplace(l.id, i);
    link_chance_[i] = *traversal_chance(l);
    for (std::size_t s = 0; s < l.facts.size(); ++s) {
      const auto& f = l.facts[s];
      facts_.emplace(f.id, FactLocation{FactOwner::Link, i, s});
      if (f.common_property) link_props_[i].emplace_back(*f.common_property, s);
    }
    incident_[container_index_.at(l.endpoint_a)].push_back(i);
    incident_[container_index_.at(l.endpoint_b)].push_back(i);
  }
  for (auto& links : incident_) {
    std::sort(links.begin(), links.end(), [this](std::size_t a, std::size_t b) {
      return net_.links[a].id < net_.links[b].id;
    });
  }
  for (std::size_t s = 0; s < net_.environment_facts.size(); ++s) {
    facts_.emplace(net_.environment_facts[s].id, FactLocation{FactOwner::Environment, 0, s});
  }

  // Property membership, in a stable order: containers, links, environment.
  auto collect = [this](const std::vector<Fact>& facts) {
    for (const auto& f : facts) {
      if (f.common_property) property_facts_[*f.common_property].push_back(f.id);
    }
  };
  for (const auto& c : net_.containers) collect(c.facts);
  for (const auto& l : net_.links) collect(l.facts);
  collect(net_.environment_facts);

  for (const auto& r : net_.normal_rules) {
    if (net_.omitted_rules.contains(r.id)) continue;
    normal_by_id_.emplace(r.id, &r);
    normal_rules_.push_back(&r);
  }
  for (const auto& r : net_.generic_rules) {
    if (net_.omitted_rules.contains(r.id)) continue;
    generic_by_id_.emplace(r.id, &r);
    generic_rules_.push_back(&r);
  }
  std::sort(normal_rules_.begin(), normal_rules_.end(),
            [](const NormalRule* a, const NormalRule* b) { return a->id < b->id; });
  std::sort(generic_rules_.begin(), generic_rules_.end(),
            [](const GenericRule* a, const GenericRule* b) { return a->id < b->id; });
  for (const auto& a : net_.actions) actions_.emplace(a.id, &a);
}

std::optional<std::size_t> IndexedNetwork::container_index(Id id) const {
  auto it = container_index_.find(id);
  if (it == container_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> IndexedNetwork::link_index(Id id) const {
  auto it = link_index_.find(id);
  if (it == link_index_.end()) return std::nullopt;
  return it->second;
}

const Container& IndexedNetwork::container_by_id(Id id) const {
  auto idx = container_index(id);
  if (!idx) throw UnknownIdError("unknown container ID " + std::to_string(id));
  return net_.containers[*idx];
}

const Link& IndexedNetwork::link_by_id(Id id) const {
  auto idx = link_index(id);
  if (!idx) throw UnknownIdError("unknown link ID " + std::to_string(id));
  return net_.links[*idx];
}

const FactLocation* IndexedNetwork::find_fact(Id fact) const {
  auto it = facts_.find(fact);
  return it == facts_.end() ? nullptr : &it->second;
}

bool IndexedNetwork::base_fact_value(const FactLocation& loc) const {
  switch (loc.owner) {
    case FactOwner::Container:
      return net_.containers[loc.owner_index].facts[loc.slot].value;
    case FactOwner::Link:
      return net_.links[loc.owner_index].facts[loc.slot].value;
    case FactOwner::Environment:
      return net_.environment_facts[loc.slot].value;
  }
  return false;
}

std::optional<std::size_t> IndexedNetwork::property_slot(EntityKind kind, std::size_t index,
                                                         Id property) const {
  const auto& props = kind == EntityKind::Container ? container_props_[index] : link_props_[index];
  for (const auto& [prop, slot] : props) {
    if (prop == property) return slot;
  }
  return std::nullopt;
}

const std::vector<Id>& IndexedNetwork::facts_with_property(Id property) const {
  static const std::vector<Id> kEmpty;
  auto it = property_facts_.find(property);
  return it == property_facts_.end() ? kEmpty : it->second;
}

const NormalRule* IndexedNetwork::find_normal_rule(Id id) const {
  auto it = normal_by_id_.find(id);
  return it == normal_by_id_.end() ? nullptr : it->second;
}

const GenericRule* IndexedNetwork::find_generic_rule(Id id) const {
  auto it = generic_by_id_.find(id);
  return it == generic_by_id_.end() ? nullptr : it->second;
}

const Action* IndexedNetwork::find_action(Id id) const {
  auto it = actions_.find(id);
  return it == actions_.end() ? nullptr : it->second;
}

bool IndexedNetwork::is_environment_fact(Id fact) const {
  const auto* loc = find_fact(fact);
  return loc != nullptr && loc->owner == FactOwner::Environment;
}

}  // namespace sonarr
