#pragma once

// Mini IR: functions made of basic blocks of register-machine instructions.
//
// Registers are unbounded 32-bit virtual registers, zero-initialized. Memory
// is a flat array of 32-bit words. Every block ends in exactly one
// terminator (cbr, switch, jmp, ret, trap). The cfi_* opcodes only appear in
// instrumented programs.

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "anbranch/predicate.hpp"

namespace anb::mir {

struct Reg {
  std::uint32_t id = 0;

  friend auto operator<=>(const Reg&, const Reg&) = default;
};

enum class Opcode : std::uint8_t {
  Const,
  Mov,
  Add,
  Sub,
  Mul,
  UDiv,
  UMod,
  And,
  Or,
  Xor,
  Load,
  Store,
  Select,
  Cbr,
  Switch,
  Jmp,
  Ret,
  Trap,
  CfiUpdate,
  CfiMerge,
  CfiCheck,
};

std::string_view to_string(Opcode op) noexcept;
std::optional<Opcode> parse_opcode(std::string_view s) noexcept;

constexpr bool is_terminator(Opcode op) noexcept {
  return op == Opcode::Cbr || op == Opcode::Switch || op == Opcode::Jmp || op == Opcode::Ret ||
         op == Opcode::Trap;
}

constexpr bool is_cfi(Opcode op) noexcept {
  return op == Opcode::CfiUpdate || op == Opcode::CfiMerge || op == Opcode::CfiCheck;
}

constexpr bool is_binary(Opcode op) noexcept {
  return op >= Opcode::Add && op <= Opcode::Xor;
}

/// Operand layout by opcode:
///   const      dst, imm
///   mov        dst, src[0]
///   binary     dst, src[0], src[1]
///   load       dst, address
///   store      address, src[1] (value)
///   select     dst, pred, src[0..3] = a, b, v1, v2
///   cbr        pred, src[0], src[1], targets = {true, false}
///   switch     src[0], cases[i] -> targets[i], targets.back() = default
///   jmp        targets = {label}
///   ret        src[0]
///   trap       imm
///   cfi_update imm; cfi_merge src[0], imm; cfi_check imm
/// Addresses are [base + imm] when has_base, otherwise [imm]; base is src[0].
struct Instr {
  Opcode op = Opcode::Trap;
  Reg dst;
  std::array<Reg, 4> src{};
  std::uint32_t imm = 0;
  bool has_base = false;
  Predicate pred = Predicate::EQ;
  std::vector<std::string> targets;
  std::vector<std::uint32_t> cases;

  static Instr constant(Reg dst, std::uint32_t value);
  static Instr mov(Reg dst, Reg src);
  static Instr binary(Opcode op, Reg dst, Reg a, Reg b);
  static Instr load(Reg dst, std::optional<Reg> base, std::uint32_t offset);
  static Instr store(std::optional<Reg> base, std::uint32_t offset, Reg value);
  static Instr select(Reg dst, Predicate pred, Reg a, Reg b, Reg v1, Reg v2);
  static Instr cbr(Predicate pred, Reg a, Reg b, std::string on_true, std::string on_false);
  static Instr switch_(Reg value, std::vector<std::pair<std::uint32_t, std::string>> cases,
                       std::string default_label);
  static Instr jmp(std::string label);
  static Instr ret(Reg value);
  static Instr trap(std::uint32_t code);
  static Instr cfi_update(std::uint32_t id);
  static Instr cfi_merge(Reg cond, std::uint32_t correction);
  static Instr cfi_check(std::uint32_t expected);

  /// Register written by this instruction, if any.
  std::optional<Reg> def() const;
  /// Registers read by this instruction, in operand order.
  std::vector<Reg> uses() const;

  friend bool operator==(const Instr&, const Instr&) = default;
};

struct Block {
  std::string label;
  std::vector<Instr> instrs;

  /// Requires a non-empty block.
  const Instr& terminator() const { return instrs.back(); }
  Instr& terminator() { return instrs.back(); }

  friend bool operator==(const Block&, const Block&) = default;
};

struct Function {
  std::string name;
  std::set<std::string> attrs;
  std::vector<Block> blocks;

  static constexpr std::string_view kProtectAttr = "protect";

  bool is_protected() const { return attrs.contains(std::string(kProtectAttr)); }
  /// Index of the block labelled `label`, or nullopt.
  std::optional<std::size_t> find_block(std::string_view label) const;
  /// One past the highest register id mentioned anywhere in the function.
  std::uint32_t register_count() const;
  /// A label based on `stem` that no block uses yet.
  std::string fresh_label(std::string_view stem) const;

  friend bool operator==(const Function&, const Function&) = default;
};

struct Program {
  std::vector<Function> functions;

  const Function* find(std::string_view name) const;
  Function* find(std::string_view name);

  friend bool operator==(const Program&, const Program&) = default;
};

/// Successor and predecessor lists by block index. Throws ProgramError on a
/// branch to an undeclared label or on a block without a terminator.
struct Cfg {
  std::vector<std::vector<std::size_t>> succ;
  std::vector<std::vector<std::size_t>> pred;

  static Cfg build(const Function& f);
  /// Blocks reachable from the entry block.
  std::vector<bool> reachable() const;
};

// Text form -----------------------------------------------------------------

/// Throws ParseError with line and column on malformed input.
Program parse(std::string_view text);
std::string print(const Program& program);
std::string print(const Function& function);
std::string print(const Instr& instr);

// Validation ----------------------------------------------------------------

enum class Severity : std::uint8_t { Warning, Error };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string function;
  std::string block;
  std::optional<std::size_t> index;
  std::string message;
};

std::string format(const Diagnostic& d);

struct ValidateOptions {
  /// Accept cfi_* opcodes (instrumented programs).
  bool allow_cfi = false;
  /// Largest functional constant that may feed a protected comparison.
  std::uint32_t n_max = 65535;
};

std::vector<Diagnostic> validate(const Program& program, const ValidateOptions& options = {});
bool has_errors(const std::vector<Diagnostic>& diags);

/// Throws ProgramError listing every error diagnostic.
void require_valid(const Program& program, const ValidateOptions& options = {});

}  // namespace anb::mir
