#pragma once

// Path-signature control-flow integrity.
//
// A running 32-bit signature is folded with an id before every instruction.
// Control-flow edges carry compile-time corrections so that every block is
// entered with a fixed, known signature. At a protected conditional branch the
// successor merges the redundant condition symbol into the signature, so
// taking an edge whose symbol was not computed leaves a residue of
// true_symbol ^ false_symbol that the next check catches.

#include <array>
#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anbranch/enccmp.hpp"
#include "anbranch/mir.hpp"

namespace anb::cfi {

struct CfiState {
  std::uint32_t value = 0;

  friend auto operator<=>(const CfiState&, const CfiState&) = default;
};

/// S' = rotl(S, 1) ^ id. A bijection of S for a fixed id.
constexpr CfiState state_update(CfiState s, std::uint32_t instr_id) noexcept {
  return {std::rotl(s.value, 1) ^ instr_id};
}

/// S' = S ^ cond ^ corr.
constexpr CfiState merge_condition(CfiState s, ConditionSymbol cond, std::uint32_t corr) noexcept {
  return {s.value ^ cond.value ^ corr};
}

enum class CheckResult : std::uint8_t { Ok, Violation };

constexpr CheckResult check(CfiState s, std::uint32_t expected) noexcept {
  return s.value == expected ? CheckResult::Ok : CheckResult::Violation;
}

enum class CheckPolicy : std::uint8_t {
  EveryBlock,    ///< check the exit signature at the end of every block
  FunctionExit,  ///< check only before ret
};

enum class EdgeKind : std::uint8_t {
  Start,   ///< function entry; correction applied first thing in the entry block
  Jump,    ///< single-successor edge; correction applied before the jmp
  Branch,  ///< multi-successor edge; correction applied first thing in the successor
  Merge,   ///< protected branch edge; successor merges the condition symbol
};

struct CfiEdge {
  std::string from;  ///< empty for the Start edge
  std::string to;
  std::uint32_t successor = 0;  ///< successor slot of `from`'s terminator
  EdgeKind kind = EdgeKind::Jump;
  std::optional<std::uint32_t> symbol;  ///< expected condition symbol (Merge only)
  std::uint32_t correction = 0;

  friend bool operator==(const CfiEdge&, const CfiEdge&) = default;
};

struct CfiBlock {
  std::string label;
  std::uint32_t entry = 0;  ///< signature after the incoming edge's correction
  std::uint32_t exit = 0;   ///< signature after the last instruction id
  std::vector<std::uint32_t> ids;  ///< one id per instruction group of the block
  bool checked = false;

  friend bool operator==(const CfiBlock&, const CfiBlock&) = default;
};

struct CfiFunctionMeta {
  std::string function;
  CheckPolicy policy = CheckPolicy::EveryBlock;
  std::vector<CfiBlock> blocks;
  std::vector<CfiEdge> edges;

  const CfiBlock* find_block(std::string_view label) const;

  friend bool operator==(const CfiFunctionMeta&, const CfiFunctionMeta&) = default;
};

struct CfiMeta {
  std::uint64_t seed = 0;
  std::vector<CfiFunctionMeta> functions;

  const CfiFunctionMeta* find(std::string_view function) const;

  friend bool operator==(const CfiMeta&, const CfiMeta&) = default;
};

/// A conditional branch whose successors merge a condition symbol.
/// edge_symbols[i] is the symbol expected on successor slot i.
struct ProtectedBranch {
  std::string function;
  std::string block;
  mir::Reg cond;
  std::array<std::uint32_t, 2> edge_symbols{};
};

/// Instruction groups of a block: entry i is the group of instruction i.
/// Groups number from 0 and grow by at most one per instruction. Every group
/// gets one id; instructions a pass expanded from a single source
/// instruction share its group.
using BlockGroups = std::map<std::string, std::vector<std::uint32_t>, std::less<>>;
/// Keyed by function name. Blocks without an entry use one group per instruction.
using GroupMap = std::map<std::string, BlockGroups, std::less<>>;

/// Group vector of `block` in `function`, defaulting to one group per instruction.
std::vector<std::uint32_t> groups_of(const GroupMap& groups, const mir::Function& function,
                                     const mir::Block& block);

/// Derives ids, block signatures and edge corrections for every protected
/// function of an uninstrumented program in edge-split form: every successor
/// of a multi-way terminator has exactly one incoming edge and the entry block
/// has none. Ids are nonzero and chosen so that skipping any single cfi
/// instruction changes the signature. Throws ProgramError for unreachable
/// blocks, cfi opcodes, malformed groups or programs not in edge-split form.
CfiMeta derive_meta(const mir::Program& program, std::uint64_t seed,
                    CheckPolicy policy = CheckPolicy::EveryBlock,
                    std::span<const ProtectedBranch> branches = {},
                    const GroupMap& groups = {});

/// True when every edge of `meta` maps its source exit signature onto its
/// target entry signature, and every exit is the fold of the block's ids.
bool consistent(const CfiFunctionMeta& meta);

}  // namespace anb::cfi
