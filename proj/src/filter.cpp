#include "sonarr/filter.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace sonarr {
namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  FilterExpr parse() {
    FilterExpr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw FilterSyntaxError(what + " at position " + std::to_string(pos_), pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  // Consumes an operator keyword if one is next.
  bool take_operator(std::string_view word, std::string_view symbol) {
    skip_ws();
    if (text_.substr(pos_, symbol.size()) == symbol) {
      pos_ += symbol.size();
      return true;
    }
    std::size_t end = pos_;
    while (end < text_.size() && is_ident_char(text_[end])) ++end;
    if (end > pos_ && lower(text_.substr(pos_, end - pos_)) == word) {
      pos_ = end;
      return true;
    }
    return false;
  }

  FilterExpr expr() {
    FilterExpr lhs = term();
    while (take_operator("or", "||")) lhs = FilterExpr::any_of(std::move(lhs), term());
    return lhs;
  }

  FilterExpr term() {
    FilterExpr lhs = atom();
    while (take_operator("and", "&&")) lhs = FilterExpr::all_of(std::move(lhs), atom());
    return lhs;
  }

  FilterExpr atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("expected a condition");
    if (text_[pos_] == '(') {
      ++pos_;
      FilterExpr inner = expr();
      skip_ws();
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
      ++pos_;
      return inner;
    }
    std::string target = identifier();
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != ':') fail("expected ':' after '" + target + "'");
    ++pos_;
    skip_ws();
    std::size_t end = pos_;
    while (end < text_.size() && is_ident_char(text_[end])) ++end;
    const std::string value = lower(text_.substr(pos_, end - pos_));
    bool required = false;
    if (value == "t" || value == "true") {
      required = true;
    } else if (value != "f" && value != "false") {
      fail("expected T or F");
    }
    pos_ = end;
    return FilterExpr::atom(std::move(target), required);
  }

  std::string identifier() {
    if (text_[pos_] == '"') {
      const std::size_t close = text_.find('"', pos_ + 1);
      if (close == std::string_view::npos) fail("unterminated quoted name");
      std::string out(text_.substr(pos_ + 1, close - pos_ - 1));
      pos_ = close + 1;
      return out;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    if (pos_ == start) fail("expected a fact or property name");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool plain_identifier(const std::string& s) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), is_ident_char)) return false;
  const auto l = lower(s);
  return l != "and" && l != "or";
}

void print(const FilterExpr& e, std::string& out) {
  if (e.kind == FilterExpr::Kind::Atom) {
    out += plain_identifier(e.target) ? e.target : "\"" + e.target + "\"";
    out += e.required ? ":T" : ":F";
    return;
  }
  const auto& lhs = e.operands[0];
  const auto& rhs = e.operands[1];
  // Left-associative chains need no parentheses on the left; anything that
  // would re-associate or lose precedence is wrapped.
  const bool wrap_lhs = e.kind == FilterExpr::Kind::And && lhs.kind == FilterExpr::Kind::Or;
  const bool wrap_rhs = rhs.kind != FilterExpr::Kind::Atom &&
                        (rhs.kind == e.kind || e.kind == FilterExpr::Kind::And);
  auto emit = [&out](const FilterExpr& child, bool wrap) {
    if (wrap) out += '(';
    print(child, out);
    if (wrap) out += ')';
  };
  emit(lhs, wrap_lhs);
  out += e.kind == FilterExpr::Kind::And ? " and " : " or ";
  emit(rhs, wrap_rhs);
}

std::optional<Id> parse_id(const std::string& s) {
  Id v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::size_t> resolve(const std::string& target, const Container& end,
                                   const Network& net) {
  for (std::size_t s = 0; s < end.facts.size(); ++s) {
    if (end.facts[s].name == target) return s;
  }
  const auto numeric = parse_id(target);
  if (numeric) {
    for (std::size_t s = 0; s < end.facts.size(); ++s) {
      if (end.facts[s].id == *numeric) return s;
    }
  }
  std::optional<Id> property;
  for (const auto& p : net.common_properties) {
    if (p.name == target || (numeric && p.id == *numeric)) {
      property = p.id;
      break;
    }
  }
  if (property) {
    for (std::size_t s = 0; s < end.facts.size(); ++s) {
      if (end.facts[s].common_property == property) return s;
    }
  }
  return std::nullopt;
}

}  // namespace

FilterExpr FilterExpr::atom(std::string target, bool required) {
  FilterExpr e;
  e.kind = Kind::Atom;
  e.target = std::move(target);
  e.required = required;
  return e;
}

FilterExpr FilterExpr::all_of(FilterExpr lhs, FilterExpr rhs) {
  FilterExpr e;
  e.kind = Kind::And;
  e.operands.push_back(std::move(lhs));
  e.operands.push_back(std::move(rhs));
  return e;
}

FilterExpr FilterExpr::any_of(FilterExpr lhs, FilterExpr rhs) {
  FilterExpr e = all_of(std::move(lhs), std::move(rhs));
  e.kind = Kind::Or;
  return e;
}

FilterSyntaxError::FilterSyntaxError(const std::string& message, std::size_t position)
    : std::runtime_error("filter syntax error: " + message), position_(position) {}

FilterExpr parse_filter(std::string_view text) { return Parser(text).parse(); }

std::string print_filter(const FilterExpr& expr) {
  std::string out;
  print(expr, out);
  return out;
}

BoundFilter bind_filter(const FilterExpr& expr, const IndexedNetwork& net, Id end_container) {
  const auto end_index = net.container_index(end_container);
  if (!end_index) {
    throw FilterBindError("filter end container " + std::to_string(end_container) + " does not exist");
  }
  const Container& end = net.container(*end_index);
  BoundFilter bound;
  bound.end_id_ = end_container;
  bound.end_index_ = *end_index;

  auto build = [&](auto&& self, const FilterExpr& e) -> std::size_t {
    BoundFilter::Node node;
    node.kind = e.kind;
    if (e.kind == FilterExpr::Kind::Atom) {
      const auto slot = resolve(e.target, end, net.network());
      if (!slot) {
        throw FilterBindError("filter target '" + e.target + "' does not name a fact or " +
                              "common property on container " + std::to_string(end_container));
      }
      node.slot = *slot;
      node.required = e.required;
    } else {
      node.lhs = self(self, e.operands.at(0));
      node.rhs = self(self, e.operands.at(1));
    }
    bound.nodes_.push_back(node);
    return bound.nodes_.size() - 1;
  };
  bound.root_ = build(build, expr);
  return bound;
}

bool BoundFilter::eval(std::size_t node, const std::vector<FactValue>& facts) const {
  const Node& n = nodes_[node];
  switch (n.kind) {
    case FilterExpr::Kind::Atom:
      return facts[n.slot].value == n.required;
    case FilterExpr::Kind::And:
      return eval(n.lhs, facts) && eval(n.rhs, facts);
    case FilterExpr::Kind::Or:
      return eval(n.lhs, facts) || eval(n.rhs, facts);
  }
  return false;
}

bool BoundFilter::evaluate(const RealityPath& path, const IndexedNetwork& net) const {
  if (auto it = path.active_containers.find(end_id_); it != path.active_containers.end()) {
    return eval(root_, it->second.facts);
  }
  return eval(root_, clone_entity(net.container(end_index_)).facts);
}

bool evaluate_filter(const BoundFilter* filter, const RealityPath& path,
                     const IndexedNetwork& net) {
  return filter == nullptr || filter->evaluate(path, net);
}

}  // namespace sonarr
