#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace sonarr {

// Object identifier. Each object class has its own ID space; -1 is reserved
// as the null marker in the binary path format.
using Id = std::int32_t;

inline constexpr Id kNullId = -1;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed model document (syntax or schema).
class ParseError : public ModelError {
 public:
  using ModelError::ModelError;
};

class ValidationError : public ModelError {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class UnknownIdError : public ModelError {
 public:
  using ModelError::ModelError;
};

// Free-form description data. Stored and round-tripped, never evaluated,
// except for the numeric "traversal_chance" annotation on links which feeds
// the traversability metric.
struct CustomProperty {
  std::string key;
  std::string value;

  bool operator==(const CustomProperty&) const = default;
};

struct CommonProperty {
  Id id = 0;
  std::string name;

  bool operator==(const CommonProperty&) const = default;
};

struct Fact {
  Id id = 0;
  std::string name;
  bool value = false;
  std::optional<Id> common_property;
  std::vector<CustomProperty> custom_properties;

  bool operator==(const Fact&) const = default;
};

struct Container {
  Id id = 0;
  std::string name;
  std::vector<Fact> facts;
  std::vector<CustomProperty> custom_properties;

  bool operator==(const Container&) const = default;
};

struct Link {
  Id id = 0;
  std::string name;
  Id endpoint_a = 0;
  Id endpoint_b = 0;
  // A directed link may only be crossed from endpoint_a to endpoint_b.
  bool directed = false;
  std::vector<Fact> facts;
  std::vector<CustomProperty> custom_properties;

  bool operator==(const Link&) const = default;
};

enum class Position { StartContainer, EndContainer, Link };

struct PropertyCondition {
  Position position = Position::StartContainer;
  Id common_property = 0;
  bool value = false;

  bool operator==(const PropertyCondition&) const = default;
};

struct FactCondition {
  Id fact = 0;
  bool value = false;

  bool operator==(const FactCondition&) const = default;
};

// Normal-rule postcondition that sets every fact carrying the property.
struct PropertyAssignment {
  Id common_property = 0;
  bool value = false;

  bool operator==(const PropertyAssignment&) const = default;
};

using NormalPostcondition = std::variant<FactCondition, PropertyAssignment>;

// Optional per-rule annotation feeding the availability / confidentiality /
// integrity metrics. Each component lies in [0, 1].
struct RuleImpact {
  double availability = 0.0;
  double confidentiality = 0.0;
  double integrity = 0.0;

  bool operator==(const RuleImpact&) const = default;
};

struct GenericRule {
  Id id = 0;
  std::string name;
  std::vector<PropertyCondition> preconditions;
  std::vector<PropertyCondition> postconditions;
  std::vector<Id> actions;
  RuleImpact impact;

  bool operator==(const GenericRule&) const = default;
};

struct NormalRule {
  Id id = 0;
  std::string name;
  std::vector<FactCondition> preconditions;
  std::vector<NormalPostcondition> postconditions;
  std::vector<Id> actions;
  RuleImpact impact;

  bool operator==(const NormalRule&) const = default;
};

struct Action {
  Id id = 0;
  std::string command;
  bool enabled = true;

  bool operator==(const Action&) const = default;
};

// The base model. A plain value: pre-run edits return modified copies and
// traversal only ever reads it (through IndexedNetwork).
struct Network {
  std::vector<CommonProperty> common_properties;
  std::vector<Container> containers;
  std::vector<Link> links;
  std::vector<Fact> environment_facts;
  std::vector<NormalRule> normal_rules;
  std::vector<GenericRule> generic_rules;
  std::vector<Action> actions;
  // Rules that stay in the model but are excluded from evaluation.
  std::set<Id> omitted_rules;

  bool operator==(const Network&) const = default;
};

// Every invariant violation, each naming the offending object. Empty when the
// network is valid.
std::vector<std::string> validate_network(const Network& net);

// Returns a copy with one fact's value replaced. Throws UnknownIdError.
Network apply_fact_override(const Network& net, Id fact, bool value);

// Returns a copy with the rule (normal or generic) excluded from evaluation.
// Idempotent. Throws UnknownIdError.
Network omit_rule(const Network& net, Id rule);

// Graphviz text: one node per container, one edge per link, ordered by ID.
std::string export_dot(const Network& net);

// Parses the `traversal_chance` annotation of a link, 1.0 when absent.
// Returns nullopt when present but not a number.
std::optional<double> traversal_chance(const Link& link);

enum class EntityKind : std::uint8_t { Container, Link };

enum class FactOwner : std::uint8_t { Container, Link, Environment };

struct FactLocation {
  FactOwner owner = FactOwner::Container;
  // Index into containers / links / environment_facts.
  std::size_t owner_index = 0;
  // Index into that owner's fact list.
  std::size_t slot = 0;
};

// Validated, indexed read-only view of a Network. Built once per run and
// shared by every worker.
class IndexedNetwork {
 public:
  // Throws ValidationError when validate_network reports anything.
  explicit IndexedNetwork(Network net);
  IndexedNetwork(const IndexedNetwork&) = delete;
  IndexedNetwork& operator=(const IndexedNetwork&) = delete;

  const Network& network() const noexcept { return net_; }

  std::optional<std::size_t> container_index(Id id) const;
  std::optional<std::size_t> link_index(Id id) const;
  const Container& container(std::size_t index) const { return net_.containers[index]; }
  const Link& link(std::size_t index) const { return net_.links[index]; }
  const Container& container_by_id(Id id) const;
  const Link& link_by_id(Id id) const;

  const FactLocation* find_fact(Id fact) const;
  bool base_fact_value(const FactLocation& loc) const;

  // Slot of the fact carrying `property` on an entity, if any.
  std::optional<std::size_t> property_slot(EntityKind kind, std::size_t index, Id property) const;

  // Every fact in the network (entities and environment) bound to `property`.
  const std::vector<Id>& facts_with_property(Id property) const;

  // Links touching a container, ascending by link ID.
  const std::vector<std::size_t>& incident_links(std::size_t container) const {
    return incident_[container];
  }

  // Non-omitted rules, ascending by ID.
  const std::vector<const NormalRule*>& normal_rules() const noexcept { return normal_rules_; }
  const std::vector<const GenericRule*>& generic_rules() const noexcept { return generic_rules_; }

  // Lookups see non-omitted rules only.
  const NormalRule* find_normal_rule(Id id) const;
  const GenericRule* find_generic_rule(Id id) const;
  const Action* find_action(Id id) const;

  double link_traversal_chance(std::size_t link) const { return link_chance_[link]; }

  bool is_environment_fact(Id fact) const;

 private:
  Network net_;
  std::unordered_map<Id, std::size_t> container_index_;
  std::unordered_map<Id, std::size_t> link_index_;
  std::unordered_map<Id, FactLocation> facts_;
  std::vector<std::vector<std::pair<Id, std::size_t>>> container_props_;
  std::vector<std::vector<std::pair<Id, std::size_t>>> link_props_;
  std::unordered_map<Id, std::vector<Id>> property_facts_;
  std::vector<std::vector<std::size_t>> incident_;
  std::vector<const NormalRule*> normal_rules_;
  std::vector<const GenericRule*> generic_rules_;
  std::unordered_map<Id, const NormalRule*> normal_by_id_;
  std::unordered_map<Id, const GenericRule*> generic_by_id_;
  std::unordered_map<Id, const Action*> actions_;
  std::vector<double> link_chance_;
};

}  // namespace sonarr
