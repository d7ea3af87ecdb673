#pragma once

// Comparisons of AN-coded operands that keep their redundancy.
//
// Instead of a 1-bit flag, a comparison yields one of two 32-bit condition
// symbols. The ordering routine subtracts, adds C and reduces modulo A; the
// wrap of a negative difference leaves residue R = 2^32 mod A, so the
// remainder lands on C or R + C. Equality runs the routine in both directions
// and adds the two remainders. A corrupted operand pushes the result off both
// valid symbols.

#include <compare>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "anbranch/ancode.hpp"
#include "anbranch/predicate.hpp"

namespace anb {

struct ConditionSymbol {
  std::uint32_t value = 0;

  friend auto operator<=>(const ConditionSymbol&, const ConditionSymbol&) = default;
};

struct SymbolPair {
  ConditionSymbol true_symbol;
  ConditionSymbol false_symbol;
};

/// Valid symbols of a predicate. LT/GT: (R + C_ord, C_ord); LE/GE swap them.
/// EQ: (2 C_eq, R + 2 C_eq); NE swaps them.
SymbolPair symbols_for(Predicate pred, const ANParams& p = {});

ConditionSymbol encoded_compare(Predicate pred, ANWord x, ANWord y, const ANParams& p = {});

enum class Truth : std::uint8_t { True, False, Invalid };

Truth classify_symbol(ConditionSymbol s, Predicate pred, const ANParams& p = {});

struct TraceStep {
  std::string_view name;
  std::uint32_t value = 0;
};

/// Intermediate words of one encoded comparison in execution order.
/// Ordering: operand_x, operand_y, diff, cond.
/// Equality: operand_x, operand_y, diff1, rem1, diff2, rem2, cond.
struct CompareTrace {
  Predicate pred = Predicate::EQ;
  std::vector<TraceStep> steps;

  ConditionSymbol result() const { return {steps.back().value}; }
  /// Throws std::out_of_range for an unknown step name.
  std::uint32_t at(std::string_view name) const;
};

/// Number of intermediate words: 4 for ordering, 7 for equality.
constexpr std::size_t trace_width(PredicateFamily f) noexcept {
  return f == PredicateFamily::Ordering ? 4 : 7;
}

std::span<const std::string_view> trace_step_names(PredicateFamily f) noexcept;

CompareTrace compare_trace(Predicate pred, ANWord x, ANWord y, const ANParams& p = {});

/// Same as compare_trace, but word i is XORed with word_masks[i] right after
/// it is produced and before anything consumes it; downstream steps see the
/// corrupted value. word_masks.size() must equal trace_width.
CompareTrace compare_trace(Predicate pred, ANWord x, ANWord y, const ANParams& p,
                           std::span<const std::uint32_t> word_masks);

/// Final word of the faulted trace without materializing the steps.
std::uint32_t compare_with_faults(Predicate pred, ANWord x, ANWord y, const ANParams& p,
                                  std::span<const std::uint32_t> word_masks);

struct SymbolConstant {
  std::uint32_t c = 0;
  int distance = 0;
};

/// Smallest additive constant C (with R + C < A) maximizing the Hamming
/// distance between the two symbols of a family for encoding constant a.
SymbolConstant search_symbol_constant(PredicateFamily family, std::uint32_t a);

}  // namespace anb
