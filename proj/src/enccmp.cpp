#include "anbranch/enccmp.hpp"

#include <array>
#include <bit>
#include <cassert>
#include <stdexcept>
#include <string>

namespace anb {

namespace {

constexpr std::array<std::string_view, 4> kOrderingSteps = {"operand_x", "operand_y", "diff",
                                                            "cond"};
constexpr std::array<std::string_view, 7> kEqualitySteps = {
    "operand_x", "operand_y", "diff1", "rem1", "diff2", "rem2", "cond"};

// GT and LE subtract the operands the other way round.
constexpr bool swaps_operands(Predicate pred) noexcept {
  return pred == Predicate::GT || pred == Predicate::LE;
}

// Runs the comparison step by step. `out`, when non-null, receives every
// intermediate word after its mask has been applied.
std::uint32_t run_compare(Predicate pred, std::uint32_t x, std::uint32_t y, const ANParams& p,
                          std::span<const std::uint32_t> masks, std::uint32_t* out) {
  auto emit = [&](std::size_t i, std::uint32_t v) {
    v ^= masks[i];
    if (out != nullptr) out[i] = v;
    return v;
  };

  x = emit(0, x);
  y = emit(1, y);
  const std::uint32_t a = p.a();

  if (family_of(pred) == PredicateFamily::Ordering) {
    const std::uint32_t lhs = swaps_operands(pred) ? y : x;
    const std::uint32_t rhs = swaps_operands(pred) ? x : y;
    const std::uint32_t diff = emit(2, lhs - rhs + p.c_ord());
    return emit(3, diff % a);
  }

  const std::uint32_t c = p.c_eq();
  const std::uint32_t diff1 = emit(2, x - y + c);
  const std::uint32_t rem1 = emit(3, diff1 % a);
  const std::uint32_t diff2 = emit(4, y - x + c);
  const std::uint32_t rem2 = emit(5, diff2 % a);
  return emit(6, rem1 + rem2);
}

constexpr std::array<std::uint32_t, 7> kNoMasks{};

}  // namespace

SymbolPair symbols_for(Predicate pred, const ANParams& p) {
  const std::uint32_t r = p.r();
  switch (pred) {
    case Predicate::LT:
    case Predicate::GT: return {{r + p.c_ord()}, {p.c_ord()}};
    case Predicate::LE:
    case Predicate::GE: return {{p.c_ord()}, {r + p.c_ord()}};
    case Predicate::EQ: return {{2 * p.c_eq()}, {r + 2 * p.c_eq()}};
    case Predicate::NE: return {{r + 2 * p.c_eq()}, {2 * p.c_eq()}};
  }
  return {};
}

ConditionSymbol encoded_compare(Predicate pred, ANWord x, ANWord y, const ANParams& p) {
  return {run_compare(pred, x.raw, y.raw, p, kNoMasks, nullptr)};
}

Truth classify_symbol(ConditionSymbol s, Predicate pred, const ANParams& p) {
  const SymbolPair pair = symbols_for(pred, p);
  if (s == pair.true_symbol) return Truth::True;
  if (s == pair.false_symbol) return Truth::False;
  return Truth::Invalid;
}

std::uint32_t CompareTrace::at(std::string_view name) const {
  for (const TraceStep& s : steps) {
    if (s.name == name) return s.value;
  }
  throw std::out_of_range("no trace step named " + std::string(name));
}

std::span<const std::string_view> trace_step_names(PredicateFamily f) noexcept {
  if (f == PredicateFamily::Ordering) return kOrderingSteps;
  return kEqualitySteps;
}

CompareTrace compare_trace(Predicate pred, ANWord x, ANWord y, const ANParams& p) {
  const std::size_t width = trace_width(family_of(pred));
  return compare_trace(pred, x, y, p, std::span(kNoMasks).first(width));
}

CompareTrace compare_trace(Predicate pred, ANWord x, ANWord y, const ANParams& p,
                           std::span<const std::uint32_t> word_masks) {
  const auto names = trace_step_names(family_of(pred));
  if (word_masks.size() != names.size()) {
    throw std::invalid_argument("one mask per trace word required");
  }
  std::array<std::uint32_t, 7> words{};
  run_compare(pred, x.raw, y.raw, p, word_masks, words.data());

  CompareTrace trace{pred, {}};
  trace.steps.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) trace.steps.push_back({names[i], words[i]});
  return trace;
}

std::uint32_t compare_with_faults(Predicate pred, ANWord x, ANWord y, const ANParams& p,
                                  std::span<const std::uint32_t> word_masks) {
  assert(word_masks.size() == trace_width(family_of(pred)));
  return run_compare(pred, x.raw, y.raw, p, word_masks, nullptr);
}

SymbolConstant search_symbol_constant(PredicateFamily family, std::uint32_t a) {
  const std::uint32_t r = wrap_residue(a);
  SymbolConstant best;
  for (std::uint32_t c = 1; std::uint64_t{c} + r < a; ++c) {
    const std::uint32_t lo = family == PredicateFamily::Ordering ? c : 2 * c;
    const int d = std::popcount(lo ^ (lo + r));
    if (d > best.distance) best = {c, d};
  }
  return best;
}

}  // namespace anb
