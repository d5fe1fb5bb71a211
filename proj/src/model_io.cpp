#include "sonarr/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sonarr {
namespace {

using nlohmann::json;

// Schema reader that reports the JSON path of whatever is malformed.
class Reader {
 public:
  explicit Reader(std::string where) : where_(std::move(where)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(where_ + ": " + what);
  }

  const json& field(const json& obj, const char* key) const {
    if (!obj.is_object()) fail("expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing field '") + key + "'");
    return *it;
  }

  Id id(const json& obj, const char* key = "id") const {
    const auto& v = field(obj, key);
    if (!v.is_number_integer()) fail(std::string("field '") + key + "' must be an integer");
    const auto raw = v.get<std::int64_t>();
    if (raw < INT32_MIN || raw > INT32_MAX) fail(std::string("field '") + key + "' out of range");
    return static_cast<Id>(raw);
  }

  std::string text(const json& obj, const char* key, bool required = true) const {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail(std::string("missing field '") + key + "'");
      return {};
    }
    if (!it->is_string()) fail(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
  }

  bool boolean(const json& obj, const char* key, std::optional<bool> fallback = {}) const {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (!fallback) fail(std::string("missing field '") + key + "'");
      return *fallback;
    }
    if (!it->is_boolean()) fail(std::string("field '") + key + "' must be true or false");
    return it->get<bool>();
  }

  double number(const json& obj, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) return 0.0;
    if (!it->is_number()) fail(std::string("field '") + key + "' must be a number");
    return it->get<double>();
  }

  const json& array(const json& obj, const char* key, bool required = false) const {
    static const json kEmpty = json::array();
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail(std::string("missing field '") + key + "'");
      return kEmpty;
    }
    if (!it->is_array()) fail(std::string("field '") + key + "' must be an array");
    return *it;
  }

  Reader at(const std::string& key) const { return Reader(where_ + "." + key); }
  Reader at(const std::string& key, std::size_t index) const {
    return Reader(where_ + "." + key + "[" + std::to_string(index) + "]");
  }

 private:
  std::string where_;
};

std::vector<CustomProperty> read_custom(const Reader& r, const json& obj) {
  std::vector<CustomProperty> out;
  const auto& arr = r.array(obj, "custom_properties");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Reader cr = r.at("custom_properties", i);
    out.push_back({cr.text(arr[i], "key"), cr.text(arr[i], "value")});
  }
  return out;
}

Fact read_fact(const Reader& r, const json& obj) {
  Fact f;
  f.id = r.id(obj);
  f.name = r.text(obj, "name", false);
  f.value = r.boolean(obj, "value");
  if (auto it = obj.find("common_property"); it != obj.end() && !it->is_null()) {
    f.common_property = r.id(obj, "common_property");
  }
  f.custom_properties = read_custom(r, obj);
  return f;
}

std::vector<Fact> read_facts(const Reader& r, const json& obj, const char* key) {
  std::vector<Fact> out;
  const auto& arr = r.array(obj, key);
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(read_fact(r.at(key, i), arr[i]));
  return out;
}

std::vector<Id> read_ids(const Reader& r, const json& obj, const char* key) {
  std::vector<Id> out;
  const auto& arr = r.array(obj, key);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number_integer()) r.at(key, i).fail("expected an integer ID");
    out.push_back(arr[i].get<Id>());
  }
  return out;
}

Position read_position(const Reader& r, const json& obj) {
  const auto pos = r.text(obj, "position");
  if (pos == "start") return Position::StartContainer;
  if (pos == "end") return Position::EndContainer;
  if (pos == "link") return Position::Link;
  r.fail("position must be one of start, end, link (got '" + pos + "')");
}

const char* position_name(Position p) {
  switch (p) {
    case Position::StartContainer: return "start";
    case Position::EndContainer: return "end";
    case Position::Link: return "link";
  }
  return "start";
}

RuleImpact read_impact(const Reader& r, const json& obj) {
  RuleImpact impact;
  auto it = obj.find("impact");
  if (it == obj.end()) return impact;
  Reader ir = r.at("impact");
  if (!it->is_object()) ir.fail("expected an object");
  impact.availability = ir.number(*it, "availability");
  impact.confidentiality = ir.number(*it, "confidentiality");
  impact.integrity = ir.number(*it, "integrity");
  return impact;
}

std::vector<PropertyCondition> read_property_conditions(const Reader& r, const json& obj,
                                                        const char* key) {
  std::vector<PropertyCondition> out;
  const auto& arr = r.array(obj, key);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Reader cr = r.at(key, i);
    out.push_back({read_position(cr, arr[i]), cr.id(arr[i], "property"),
                   cr.boolean(arr[i], "value")});
  }
  return out;
}

Network from_json(const json& doc) {
  Reader root("model");
  if (!doc.is_object()) root.fail("expected an object at top level");
  Network net;

  const auto& props = root.array(doc, "common_properties");
  for (std::size_t i = 0; i < props.size(); ++i) {
    Reader r = root.at("common_properties", i);
    net.common_properties.push_back({r.id(props[i]), r.text(props[i], "name", false)});
  }

  const auto& containers = root.array(doc, "containers");
  for (std::size_t i = 0; i < containers.size(); ++i) {
    Reader r = root.at("containers", i);
    const auto& obj = containers[i];
    Container c;
    c.id = r.id(obj);
    c.name = r.text(obj, "name", false);
    c.facts = read_facts(r, obj, "facts");
    c.custom_properties = read_custom(r, obj);
    net.containers.push_back(std::move(c));
  }

  const auto& links = root.array(doc, "links");
  for (std::size_t i = 0; i < links.size(); ++i) {
    Reader r = root.at("links", i);
    const auto& obj = links[i];
    Link l;
    l.id = r.id(obj);
    l.name = r.text(obj, "name", false);
    l.endpoint_a = r.id(obj, "from");
    l.endpoint_b = r.id(obj, "to");
    l.directed = r.boolean(obj, "directed", false);
    l.facts = read_facts(r, obj, "facts");
    l.custom_properties = read_custom(r, obj);
    net.links.push_back(std::move(l));
  }

  net.environment_facts = read_facts(root, doc, "environment_facts");

  const auto& normal = root.array(doc, "normal_rules");
  for (std::size_t i = 0; i < normal.size(); ++i) {
    Reader r = root.at("normal_rules", i);
    const auto& obj = normal[i];
    NormalRule rule;
    rule.id = r.id(obj);
    rule.name = r.text(obj, "name", false);
    const auto& pre = r.array(obj, "preconditions");
    for (std::size_t k = 0; k < pre.size(); ++k) {
      Reader cr = r.at("preconditions", k);
      rule.preconditions.push_back({cr.id(pre[k], "fact"), cr.boolean(pre[k], "value")});
    }
    const auto& post = r.array(obj, "postconditions");
    for (std::size_t k = 0; k < post.size(); ++k) {
      Reader cr = r.at("postconditions", k);
      const bool has_fact = post[k].is_object() && post[k].contains("fact");
      const bool has_prop = post[k].is_object() && post[k].contains("property");
      if (has_fact == has_prop) cr.fail("expected exactly one of 'fact' or 'property'");
      if (has_fact) {
        rule.postconditions.emplace_back(
            FactCondition{cr.id(post[k], "fact"), cr.boolean(post[k], "value")});
      } else {
        rule.postconditions.emplace_back(
            PropertyAssignment{cr.id(post[k], "property"), cr.boolean(post[k], "value")});
      }
    }
    rule.actions = read_ids(r, obj, "actions");
    rule.impact = read_impact(r, obj);
    net.normal_rules.push_back(std::move(rule));
  }

  const auto& generic = root.array(doc, "generic_rules");
  for (std::size_t i = 0; i < generic.size(); ++i) {
    Reader r = root.at("generic_rules", i);
    const auto& obj = generic[i];
    GenericRule rule;
    rule.id = r.id(obj);
    rule.name = r.text(obj, "name", false);
    rule.preconditions = read_property_conditions(r, obj, "preconditions");
    rule.postconditions = read_property_conditions(r, obj, "postconditions");
    rule.actions = read_ids(r, obj, "actions");
    rule.impact = read_impact(r, obj);
    net.generic_rules.push_back(std::move(rule));
  }

  const auto& actions = root.array(doc, "actions");
  for (std::size_t i = 0; i < actions.size(); ++i) {
    Reader r = root.at("actions", i);
    net.actions.push_back(
        {r.id(actions[i]), r.text(actions[i], "command"), r.boolean(actions[i], "enabled", true)});
  }

  for (Id rule : read_ids(root, doc, "omitted_rules")) net.omitted_rules.insert(rule);
  return net;
}

json custom_json(const std::vector<CustomProperty>& props) {
  json arr = json::array();
  for (const auto& p : props) arr.push_back({{"key", p.key}, {"value", p.value}});
  return arr;
}

json fact_json(const Fact& f) {
  json j = {{"id", f.id}, {"name", f.name}, {"value", f.value}};
  if (f.common_property) j["common_property"] = *f.common_property;
  if (!f.custom_properties.empty()) j["custom_properties"] = custom_json(f.custom_properties);
  return j;
}

json facts_json(const std::vector<Fact>& facts) {
  json arr = json::array();
  for (const auto& f : facts) arr.push_back(fact_json(f));
  return arr;
}

json impact_json(const RuleImpact& impact) {
  return {{"availability", impact.availability},
          {"confidentiality", impact.confidentiality},
          {"integrity", impact.integrity}};
}

json conditions_json(const std::vector<PropertyCondition>& conds) {
  json arr = json::array();
  for (const auto& c : conds) {
    arr.push_back(
        {{"position", position_name(c.position)}, {"property", c.common_property}, {"value", c.value}});
  }
  return arr;
}

}  // namespace

Network parse_network(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
  try {
    return from_json(doc);
  } catch (const json::exception& e) {
    throw ParseError(e.what());
  }
}

Network load_network(std::string_view document) {
  Network net = parse_network(document);
  if (auto violations = validate_network(net); !violations.empty()) {
    throw ValidationError(std::move(violations));
  }
  return net;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Network load_network_file(const std::filesystem::path& path) {
  return load_network(read_text_file(path));
}

std::string render_network(const Network& net) {
  json doc = json::object();
  json props = json::array();
  for (const auto& p : net.common_properties) props.push_back({{"id", p.id}, {"name", p.name}});
  doc["common_properties"] = std::move(props);

  json containers = json::array();
  for (const auto& c : net.containers) {
    json j = {{"id", c.id}, {"name", c.name}, {"facts", facts_json(c.facts)}};
    if (!c.custom_properties.empty()) j["custom_properties"] = custom_json(c.custom_properties);
    containers.push_back(std::move(j));
  }
  doc["containers"] = std::move(containers);

  json links = json::array();
  for (const auto& l : net.links) {
    json j = {{"id", l.id},
              {"name", l.name},
              {"from", l.endpoint_a},
              {"to", l.endpoint_b},
              {"directed", l.directed},
              {"facts", facts_json(l.facts)}};
    if (!l.custom_properties.empty()) j["custom_properties"] = custom_json(l.custom_properties);
    links.push_back(std::move(j));
  }
  doc["links"] = std::move(links);
  doc["environment_facts"] = facts_json(net.environment_facts);

  json normal = json::array();
  for (const auto& r : net.normal_rules) {
    json pre = json::array();
    for (const auto& c : r.preconditions) pre.push_back({{"fact", c.fact}, {"value", c.value}});
    json post = json::array();
    for (const auto& p : r.postconditions) {
      if (const auto* fc = std::get_if<FactCondition>(&p)) {
        post.push_back({{"fact", fc->fact}, {"value", fc->value}});
      } else {
        const auto& pa = std::get<PropertyAssignment>(p);
        post.push_back({{"property", pa.common_property}, {"value", pa.value}});
      }
    }
    normal.push_back({{"id", r.id},
                      {"name", r.name},
                      {"preconditions", std::move(pre)},
                      {"postconditions", std::move(post)},
                      {"actions", r.actions},
                      {"impact", impact_json(r.impact)}});
  }
  doc["normal_rules"] = std::move(normal);

  json generic = json::array();
  for (const auto& r : net.generic_rules) {
    generic.push_back({{"id", r.id},
                       {"name", r.name},
                       {"preconditions", conditions_json(r.preconditions)},
                       {"postconditions", conditions_json(r.postconditions)},
                       {"actions", r.actions},
                       {"impact", impact_json(r.impact)}});
  }
  doc["generic_rules"] = std::move(generic);

  json actions = json::array();
  for (const auto& a : net.actions) {
    actions.push_back({{"id", a.id}, {"command", a.command}, {"enabled", a.enabled}});
  }
  doc["actions"] = std::move(actions);
  if (!net.omitted_rules.empty()) {
    doc["omitted_rules"] = std::vector<Id>(net.omitted_rules.begin(), net.omitted_rules.end());
  }
  return doc.dump(2) + "\n";
}

}  // namespace sonarr
