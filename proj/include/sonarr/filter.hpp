#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sonarr/network.hpp"
#include "sonarr/path.hpp"

namespace sonarr {

// Completion filter over the end container's facts.
//
//   expr := term ("or" term)*
//   term := atom ("and" atom)*
//   atom := ident ":" ("T" | "F") | "(" expr ")"
//
// `ident` names a fact on the end container (by name or numeric ID) or a
// common property held by one of its facts. "&&" and "||" are accepted as
// operator spellings; keywords and truth values are case-insensitive.
struct FilterExpr {
  enum class Kind { Atom, And, Or };

  Kind kind = Kind::Atom;
  std::string target;
  bool required = true;
  // Two operands for And / Or, empty for an atom.
  std::vector<FilterExpr> operands;

  static FilterExpr atom(std::string target, bool required);
  static FilterExpr all_of(FilterExpr lhs, FilterExpr rhs);
  static FilterExpr any_of(FilterExpr lhs, FilterExpr rhs);

  bool operator==(const FilterExpr&) const = default;
};

class FilterSyntaxError : public std::runtime_error {
 public:
  FilterSyntaxError(const std::string& message, std::size_t position);
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class FilterBindError : public ModelError {
 public:
  using ModelError::ModelError;
};

FilterExpr parse_filter(std::string_view text);

// Emits the same grammar; parse_filter(print_filter(e)) == e.
std::string print_filter(const FilterExpr& expr);

// A filter with every atom resolved to a fact slot of the end container.
class BoundFilter {
 public:
  bool evaluate(const RealityPath& path, const IndexedNetwork& net) const;
  Id end_container() const noexcept { return end_id_; }

 private:
  friend BoundFilter bind_filter(const FilterExpr&, const IndexedNetwork&, Id);

  struct Node {
    FilterExpr::Kind kind = FilterExpr::Kind::Atom;
    std::size_t slot = 0;
    bool required = true;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
  };

  bool eval(std::size_t node, const std::vector<FactValue>& facts) const;

  Id end_id_ = 0;
  std::size_t end_index_ = 0;
  std::vector<Node> nodes_;
  std::size_t root_ = 0;
};

// Throws FilterBindError when an atom does not resolve on the end container.
BoundFilter bind_filter(const FilterExpr& expr, const IndexedNetwork& net, Id end_container);

// A missing filter is vacuously satisfied.
bool evaluate_filter(const BoundFilter* filter, const RealityPath& path, const IndexedNetwork& net);

}  // namespace sonarr
