#pragma once

// Dataflow helpers shared by the validator and the AN coder.

#include <cstddef>
#include <set>
#include <vector>

#include "anbranch/mir.hpp"

namespace anb::mir {

struct InstrRef {
  std::size_t block = 0;
  std::size_t index = 0;

  friend auto operator<=>(const InstrRef&, const InstrRef&) = default;
};

/// Backward slice of the operands of every cbr in a function. The walk
/// continues through add, sub and mov and stops at constants and at every
/// other defining opcode (a slice boundary). Registers are not SSA, so every
/// definition of a slice register in the function belongs to the slice.
struct CompareSlice {
  std::set<Reg> regs;
  /// Definitions of slice registers, in program order.
  std::vector<InstrRef> defs;
  /// Definitions by and/or/xor, which have no AN-code counterpart.
  std::vector<InstrRef> unsupported;
  /// Slice registers that may be read before any definition (function inputs).
  std::set<Reg> inputs;
};

CompareSlice compare_slice(const Function& f);

/// For every block, the registers that may still hold their initial value on
/// entry to that block along some path from the function entry.
std::vector<std::set<Reg>> maybe_undefined_at_entry(const Function& f, const Cfg& cfg);

}  // namespace anb::mir
