#pragma once

// Deterministic interpreter for the mini IR with fault-injection hooks.
//
// Every fetched instruction slot gets a dynamic index (its step). Faults are
// keyed by step: register flips apply right before the instruction at that
// step executes, a forced branch overrides the successor chosen by the cbr or
// switch at that step, and a skip consumes the slot without executing it. A
// skipped terminator falls through to the next block in layout order.

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "anbranch/ancode.hpp"
#include "anbranch/mir.hpp"

namespace anb::vm {

struct Location {
  std::uint32_t block = 0;
  std::uint32_t index = 0;

  friend auto operator<=>(const Location&, const Location&) = default;
};

struct RegFlip {
  mir::Reg reg;
  std::uint32_t mask = 0;
  std::uint64_t at = 0;
};

struct BranchForce {
  std::uint64_t at = 0;
  /// Successor slot to take: 0 is the cbr true edge, 1 the false edge.
  std::uint32_t successor = 0;
};

struct InstrSkip {
  std::uint64_t at = 0;
};

using FaultSpec = std::variant<RegFlip, BranchForce, InstrSkip>;
using FaultPlan = std::vector<FaultSpec>;

std::uint64_t step_of(const FaultSpec& f) noexcept;
std::string describe(const FaultSpec& f);

struct VmInputs {
  std::map<std::uint32_t, std::uint32_t> registers;
  std::map<std::uint32_t, std::uint32_t> memory;
};

/// Before executing the instruction at `at`, every register in `regs` must
/// hold a valid code word; otherwise the run traps with AnIntegrity.
struct AnProbe {
  Location at;
  std::vector<mir::Reg> regs;
};

struct VmOptions {
  std::size_t memory_words = 4096;
  std::uint64_t fuel = 10'000'000;
  bool record_trace = true;
  ANParams params;
  std::vector<AnProbe> probes;
};

enum class HaltStatus : std::uint8_t { Running, Returned, Trapped };

enum class TrapKind : std::uint8_t {
  None,
  CfiViolation,
  AnIntegrity,
  DivByZero,
  BadMemory,
  Fuel,
  Explicit,  ///< a trap instruction
};

std::string_view to_string(HaltStatus s) noexcept;
std::string_view to_string(TrapKind k) noexcept;

struct TraceEntry {
  Location at;
  bool executed = true;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct BranchEvent {
  std::uint64_t step = 0;
  Location at;
  std::uint32_t successor = 0;

  friend bool operator==(const BranchEvent&, const BranchEvent&) = default;
};

struct ExecResult {
  HaltStatus status = HaltStatus::Running;
  TrapKind trap = TrapKind::None;
  std::uint32_t trap_code = 0;
  std::uint32_t return_value = 0;
  /// One entry per fetched slot; index = step.
  std::vector<TraceEntry> trace;
  std::vector<BranchEvent> branches;
  std::uint64_t steps = 0;
  std::uint64_t cycles = 0;
  std::uint64_t memory_digest = 0;
  std::uint32_t cfi_state = 0;

  friend bool operator==(const ExecResult&, const ExecResult&) = default;
};

/// Modelled cycles: single-cycle ALU, branch and cfi update/merge ops; 7 for
/// udiv/umod; 2 for load, store and cfi_check.
std::uint32_t cost_model(mir::Opcode op) noexcept;
inline std::uint32_t cost_model(const mir::Instr& i) noexcept { return cost_model(i.op); }

/// A function with its branch labels resolved, ready to run many times.
class Executable {
 public:
  /// Runs `function`, or the first function when empty. Throws ProgramError
  /// for unknown functions or undeclared labels.
  explicit Executable(mir::Program program, std::string_view function = {});

  const mir::Program& program() const noexcept { return program_; }
  const mir::Function& function() const noexcept { return program_.functions[index_]; }
  /// Resolved successors of block b's terminator.
  const std::vector<std::uint32_t>& successors(std::uint32_t b) const { return succ_[b]; }
  const mir::Instr& instr(Location l) const {
    return function().blocks[l.block].instrs[l.index];
  }
  std::uint32_t register_count() const noexcept { return registers_; }

 private:
  mir::Program program_;
  std::size_t index_ = 0;
  std::vector<std::vector<std::uint32_t>> succ_;
  std::uint32_t registers_ = 0;
};

ExecResult interpret(const Executable& exe, const VmInputs& inputs, const FaultPlan& faults = {},
                     const VmOptions& options = {});

ExecResult interpret(const mir::Program& program, const VmInputs& inputs,
                     const FaultPlan& faults = {}, const VmOptions& options = {});

}  // namespace anb::vm
