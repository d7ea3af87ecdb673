#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace anb {

/// Unsigned comparison predicates.
enum class Predicate : std::uint8_t { EQ, NE, LT, LE, GT, GE };

inline constexpr std::array<Predicate, 6> kAllPredicates = {
    Predicate::EQ, Predicate::NE, Predicate::LT, Predicate::LE, Predicate::GT, Predicate::GE};

/// LT, LE, GT and GE share one arithmetic routine; EQ and NE share another.
enum class PredicateFamily : std::uint8_t { Ordering, Equality };

constexpr PredicateFamily family_of(Predicate p) noexcept {
  return (p == Predicate::EQ || p == Predicate::NE) ? PredicateFamily::Equality
                                                     : PredicateFamily::Ordering;
}

constexpr bool evaluate(Predicate p, std::uint32_t a, std::uint32_t b) noexcept {
  switch (p) {
    case Predicate::EQ: return a == b;
    case Predicate::NE: return a != b;
    case Predicate::LT: return a < b;
    case Predicate::LE: return a <= b;
    case Predicate::GT: return a > b;
    case Predicate::GE: return a >= b;
  }
  return false;
}

/// Lower-case mnemonic: eq ne lt le gt ge.
std::string_view to_string(Predicate p) noexcept;
std::optional<Predicate> parse_predicate(std::string_view s) noexcept;

}  // namespace anb
