#include "sonarr/synth.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <string>

namespace sonarr {
namespace {

// Property IDs shared by every generated model.
constexpr Id kTrav = 0;
constexpr Id kFresh = 1;
constexpr Id kVisited = 2;

class Builder {
 public:
  explicit Builder(std::uint64_t seed) : rng_(seed) {}

  std::mt19937_64& rng() { return rng_; }

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  void property(Id id, std::string name) { net.common_properties.push_back({id, std::move(name)}); }

  Fact fact(std::optional<Id> property, bool value) {
    const Id id = next_fact_++;
    return Fact{id, "F" + std::to_string(id), value, property, {}};
  }

  Id container(std::vector<Fact> facts) {
    const Id id = static_cast<Id>(net.containers.size());
    net.containers.push_back({id, "C" + std::to_string(id), std::move(facts), {}});
    return id;
  }

  Link& link(Id a, Id b, bool directed, std::vector<Fact> facts) {
    const Id id = static_cast<Id>(net.links.size());
    net.links.push_back({id, "L" + std::to_string(id), a, b, directed, std::move(facts), {}});
    return net.links.back();
  }

  void annotate_chance(Link& l) {
    static constexpr double kChances[] = {0.25, 0.5, 0.75, 0.9, 1.0};
    const double c = kChances[uniform(0, 4)];
    l.custom_properties.push_back({"traversal_chance", std::to_string(c)});
  }

  RuleImpact impact() {
    static constexpr double kLevels[] = {0.0, 0.0, 0.1, 0.25, 0.5, 1.0};
    return {kLevels[uniform(0, 5)], kLevels[uniform(0, 5)], kLevels[uniform(0, 5)]};
  }

  GenericRule& generic(std::vector<PropertyCondition> pre, std::vector<PropertyCondition> post) {
    const Id id = next_rule_++;
    net.generic_rules.push_back({id, "R" + std::to_string(id), std::move(pre), std::move(post), {}, {}});
    return net.generic_rules.back();
  }

  NormalRule& normal(std::vector<FactCondition> pre, std::vector<NormalPostcondition> post) {
    const Id id = next_rule_++;
    net.normal_rules.push_back({id, "N" + std::to_string(id), std::move(pre), std::move(post), {}, {}});
    return net.normal_rules.back();
  }

  Network net;

 private:
  std::mt19937_64 rng_;
  Id next_fact_ = 0;
  Id next_rule_ = 0;
};

void declare_template_properties(Builder& b, RuleTemplate t) {
  switch (t) {
    case RuleTemplate::PassThrough: b.property(kTrav, "traversable"); break;
    case RuleTemplate::NoLinkRetraversal: b.property(kFresh, "fresh"); break;
    case RuleTemplate::NodeSimple:
      b.property(kTrav, "traversable");
      b.property(kVisited, "visited");
      break;
  }
}

std::vector<Fact> template_container_facts(Builder& b, RuleTemplate t) {
  if (t == RuleTemplate::NodeSimple) return {b.fact(kVisited, false)};
  return {};
}

std::vector<Fact> template_link_facts(Builder& b, RuleTemplate t) {
  if (t == RuleTemplate::NoLinkRetraversal) return {b.fact(kFresh, true)};
  return {b.fact(kTrav, true)};
}

void add_template_rules(Builder& b, RuleTemplate t) {
  using P = Position;
  switch (t) {
    case RuleTemplate::PassThrough:
      b.generic({{P::Link, kTrav, true}}, {{P::Link, kTrav, true}}).impact = b.impact();
      break;
    case RuleTemplate::NoLinkRetraversal:
      b.generic({{P::Link, kFresh, true}}, {{P::Link, kFresh, false}}).impact = b.impact();
      break;
    case RuleTemplate::NodeSimple:
      b.generic({{P::Link, kTrav, true}, {P::EndContainer, kVisited, false}},
                {{P::StartContainer, kVisited, true}, {P::EndContainer, kVisited, true}})
          .impact = b.impact();
      break;
  }
}

void link_with_template(Builder& b, RuleTemplate t, Id a, Id c, bool directed) {
  Link& l = b.link(a, c, directed, template_link_facts(b, t));
  b.annotate_chance(l);
}

std::multimap<Id, std::pair<Id, Id>> adjacency(const Network& net) {
  std::multimap<Id, std::pair<Id, Id>> adj;
  for (const auto& l : net.links) {
    adj.emplace(l.endpoint_a, std::pair{l.id, l.endpoint_b});
    if (!l.directed) adj.emplace(l.endpoint_b, std::pair{l.id, l.endpoint_a});
  }
  return adj;
}

}  // namespace

std::optional<Topology> parse_topology(std::string_view name) {
  if (name == "chain") return Topology::Chain;
  if (name == "complete") return Topology::Complete;
  if (name == "layered") return Topology::Layered;
  return std::nullopt;
}

std::optional<RuleTemplate> parse_rule_template(std::string_view name) {
  if (name == "pass_through" || name == "pass-through") return RuleTemplate::PassThrough;
  if (name == "no_link_retraversal" || name == "no-link-retraversal") {
    return RuleTemplate::NoLinkRetraversal;
  }
  if (name == "node_simple" || name == "node-simple") return RuleTemplate::NodeSimple;
  return std::nullopt;
}

std::string_view topology_name(Topology t) {
  switch (t) {
    case Topology::Chain: return "chain";
    case Topology::Complete: return "complete";
    case Topology::Layered: return "layered";
  }
  return "chain";
}

std::string_view rule_template_name(RuleTemplate t) {
  switch (t) {
    case RuleTemplate::PassThrough: return "pass_through";
    case RuleTemplate::NoLinkRetraversal: return "no_link_retraversal";
    case RuleTemplate::NodeSimple: return "node_simple";
  }
  return "pass_through";
}

SyntheticModel chain(int n, RuleTemplate t, std::uint64_t seed) {
  if (n < 2) throw ModelError("chain needs at least 2 containers");
  Builder b(seed);
  declare_template_properties(b, t);
  for (int i = 0; i < n; ++i) b.container(template_container_facts(b, t));
  for (int i = 0; i + 1 < n; ++i) link_with_template(b, t, i, i + 1, false);
  add_template_rules(b, t);
  return {std::move(b.net), 0, n - 1};
}

SyntheticModel complete(int n, RuleTemplate t, std::uint64_t seed) {
  if (n < 2) throw ModelError("complete graph needs at least 2 containers");
  Builder b(seed);
  declare_template_properties(b, t);
  for (int i = 0; i < n; ++i) b.container(template_container_facts(b, t));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) link_with_template(b, t, i, j, false);
  }
  add_template_rules(b, t);
  return {std::move(b.net), 0, n - 1};
}

SyntheticModel layered(int width, int depth, RuleTemplate t, std::uint64_t seed) {
  if (width < 1 || depth < 1) throw ModelError("layered needs width and depth of at least 1");
  Builder b(seed);
  declare_template_properties(b, t);
  const Id start = b.container(template_container_facts(b, t));
  std::vector<Id> previous{start};
  for (int d = 0; d < depth; ++d) {
    std::vector<Id> layer;
    for (int w = 0; w < width; ++w) layer.push_back(b.container(template_container_facts(b, t)));
    for (Id from : previous) {
      for (Id to : layer) link_with_template(b, t, from, to, true);
    }
    previous = std::move(layer);
  }
  const Id end = b.container(template_container_facts(b, t));
  for (Id from : previous) link_with_template(b, t, from, end, true);
  add_template_rules(b, t);
  return {std::move(b.net), start, end};
}

SyntheticModel generate(const SyntheticSpec& spec) {
  switch (spec.topology) {
    case Topology::Chain: return chain(spec.n, spec.rule_template, spec.seed);
    case Topology::Complete: return complete(spec.n, spec.rule_template, spec.seed);
    case Topology::Layered: return layered(spec.width, spec.depth, spec.rule_template, spec.seed);
  }
  throw ModelError("unknown topology");
}

SyntheticModel random_network(std::uint64_t seed, const RandomModelLimits& limits) {
  if (limits.max_containers < 2 || limits.max_links < 1 || limits.max_generic_rules < 1) {
    throw ModelError("random model limits too small");
  }
  using P = Position;
  Builder b(seed);
  // kFresh is consumed by most rules and bounds the search; the other
  // properties carry the random rule logic.
  constexpr Id kExtra[] = {10, 11, 12};
  b.property(kFresh, "fresh");
  for (Id p : kExtra) b.property(p, "p" + std::to_string(p));

  const int nc = b.uniform(2, std::min(limits.max_containers, limits.max_links + 1));
  for (int i = 0; i < nc; ++i) {
    std::vector<Fact> facts;
    for (Id p : kExtra) {
      if (b.chance(0.6)) facts.push_back(b.fact(p, b.chance(0.5)));
    }
    b.container(std::move(facts));
  }

  auto link_facts = [&] {
    std::vector<Fact> facts{b.fact(kFresh, true)};
    for (Id p : kExtra) {
      if (b.chance(0.4)) facts.push_back(b.fact(p, b.chance(0.5)));
    }
    return facts;
  };
  // Random spanning tree keeps the end reachable.
  for (int i = 1; i < nc; ++i) b.annotate_chance(b.link(b.uniform(0, i - 1), i, false, link_facts()));
  const int min_links = limits.deliberate_cycles ? std::min(nc, limits.max_links) : nc - 1;
  const int nl = b.uniform(std::max(min_links, nc - 1), limits.max_links);
  while (static_cast<int>(b.net.links.size()) < nl) {
    const int a = b.uniform(0, nc - 1);
    int c = b.uniform(0, nc - 2);
    if (c >= a) ++c;
    b.annotate_chance(b.link(a, c, b.chance(0.25), link_facts()));
  }

  auto random_condition = [&] {
    const P pos = static_cast<P>(b.uniform(0, 2));
    return PropertyCondition{pos, kExtra[b.uniform(0, 2)], b.chance(0.5)};
  };

  // Rule layout: optional flip-flop pair, random rules, then a catch-all
  // rule that consumes the link. The catch-all has the highest ID so the
  // others get their turn first; it is what keeps path counts bounded.
  const int ng = b.uniform(1, limits.max_generic_rules);
  const bool catch_all = limits.deliberate_cycles || b.chance(0.7);
  int remaining = ng - (catch_all ? 1 : 0);
  if (limits.deliberate_cycles && remaining >= 2) {
    // Two rules that keep undoing each other on the start container.
    const Id p = kExtra[b.uniform(0, 2)];
    b.generic({{P::Link, kFresh, true}, {P::StartContainer, p, true}},
              {{P::StartContainer, p, false}}).impact = b.impact();
    b.generic({{P::Link, kFresh, true}, {P::StartContainer, p, false}},
              {{P::StartContainer, p, true}}).impact = b.impact();
    remaining -= 2;
  }
  for (; remaining > 0; --remaining) {
    std::vector<PropertyCondition> pre{{P::Link, kFresh, true}};
    std::vector<PropertyCondition> post;
    if (!catch_all || b.chance(0.5)) post.push_back({P::Link, kFresh, false});
    const int extra_pre = b.uniform(0, 2);
    for (int i = 0; i < extra_pre; ++i) pre.push_back(random_condition());
    const int extra_post = b.uniform(post.empty() ? 1 : 0, 2);
    for (int i = 0; i < extra_post; ++i) post.push_back(random_condition());
    b.generic(std::move(pre), std::move(post)).impact = b.impact();
  }
  if (catch_all) {
    b.generic({{P::Link, kFresh, true}}, {{P::Link, kFresh, false}}).impact = b.impact();
  }

  // A few environment facts and normal rules reading and writing them.
  const int ne = b.uniform(0, 2);
  std::vector<Id> env;
  for (int i = 0; i < ne; ++i) {
    Fact f = b.fact(std::nullopt, b.chance(0.5));
    env.push_back(f.id);
    b.net.environment_facts.push_back(std::move(f));
  }
  if (!env.empty()) {
    const int nn = b.uniform(0, 2);
    for (int i = 0; i < nn; ++i) {
      const Id read = env[static_cast<std::size_t>(b.uniform(0, ne - 1))];
      const Id write = env[static_cast<std::size_t>(b.uniform(0, ne - 1))];
      std::vector<NormalPostcondition> post{FactCondition{write, b.chance(0.5)}};
      if (b.chance(0.3)) post.emplace_back(PropertyAssignment{kExtra[b.uniform(0, 2)], b.chance(0.5)});
      b.normal({{read, b.chance(0.5)}}, std::move(post)).impact = b.impact();
    }
  }

  return {std::move(b.net), 0, nc - 1};
}

std::uint64_t count_simple_paths(const Network& net, Id s, Id t) {
  const auto adj = adjacency(net);
  std::vector<Id> on_path;
  std::function<std::uint64_t(Id)> walk = [&](Id at) -> std::uint64_t {
    if (at == t) return 1;
    on_path.push_back(at);
    std::uint64_t n = 0;
    auto [lo, hi] = adj.equal_range(at);
    for (auto it = lo; it != hi; ++it) {
      const Id next = it->second.second;
      if (std::find(on_path.begin(), on_path.end(), next) == on_path.end()) n += walk(next);
    }
    on_path.pop_back();
    return n;
  };
  return walk(s);
}

std::uint64_t count_trails(const Network& net, Id s, Id t) {
  const auto adj = adjacency(net);
  std::vector<Id> used;
  std::function<std::uint64_t(Id)> walk = [&](Id at) -> std::uint64_t {
    if (at == t) return 1;
    std::uint64_t n = 0;
    auto [lo, hi] = adj.equal_range(at);
    for (auto it = lo; it != hi; ++it) {
      const Id link = it->second.first;
      if (std::find(used.begin(), used.end(), link) != used.end()) continue;
      used.push_back(link);
      n += walk(it->second.second);
      used.pop_back();
    }
    return n;
  };
  return walk(s);
}

}  // namespace sonarr
