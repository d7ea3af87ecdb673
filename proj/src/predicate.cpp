#include "anbranch/predicate.hpp"

namespace anb {

std::string_view to_string(Predicate p) noexcept {
  switch (p) {
    case Predicate::EQ: return "eq";
    case Predicate::NE: return "ne";
    case Predicate::LT: return "lt";
    case Predicate::LE: return "le";
    case Predicate::GT: return "gt";
    case Predicate::GE: return "ge";
  }
  return "?";
}

std::optional<Predicate> parse_predicate(std::string_view s) noexcept {
  for (Predicate p : kAllPredicates) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

}  // namespace anb
