#pragma once

// Compiler passes: select/switch lowering, AN coding of comparison slices,
// CFI instrumentation, the duplication baseline, and cost accounting.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "anbranch/ancode.hpp"
#include "anbranch/cfi.hpp"
#include "anbranch/mir.hpp"
#include "anbranch/vm.hpp"

namespace anb::inst {

/// Every select becomes a branch diamond joined in a fresh block; every
/// switch becomes a chain of eq compares ending in the default edge.
mir::Program lower_select_switch(const mir::Program& program);

enum class ModMode : std::uint8_t {
  Umod,  ///< one umod per reduction
  Mls,   ///< udiv, mul, sub per reduction
};

std::string_view to_string(ModMode m) noexcept;

struct AnCoderOptions {
  ANParams params;
  ModMode mod = ModMode::Umod;
  /// Branch on cond == true symbol; otherwise on cond == false symbol with
  /// the targets swapped.
  bool compare_true_symbol = true;
  /// Treat and/or/xor inside a slice as a boundary (encode their result)
  /// instead of rejecting the program.
  bool boundary_on_unsupported = false;
};

/// A value that enters the encoded domain through a runtime multiply by A.
/// Between its producer and the encode the value is unprotected.
struct UnprotectedWindow {
  std::string function;
  std::string block;
  mir::Reg reg;
  std::string source;  ///< "input" or the producing opcode

  friend bool operator==(const UnprotectedWindow&, const UnprotectedWindow&) = default;
};

/// One conditional branch rewritten into an encoded compare.
struct EncodedSite {
  std::string function;
  std::string block;
  Predicate pred = Predicate::EQ;
  mir::Reg x, y;   ///< encoded operands, in source order
  mir::Reg cond;   ///< condition symbol register
  /// Symbol the rewritten cbr compares against.
  std::uint32_t branch_symbol = 0;
  /// Symbol expected on successor slot 0 and slot 1 of the rewritten cbr.
  std::array<std::uint32_t, 2> edge_symbols{};
  /// First instruction of the compare sequence.
  mir::Instr first;
  std::map<std::string, int> mix;

  friend bool operator==(const EncodedSite&, const EncodedSite&) = default;
};

struct AnReport {
  std::vector<EncodedSite> sites;
  std::vector<UnprotectedWindow> windows;
  /// Instruction groups of the rewritten blocks: inserted instructions share
  /// the group of the source instruction they were expanded from.
  cfi::GroupMap groups;
};

struct AnCodeResult {
  mir::Program program;
  AnReport report;
};

/// Rewrites every cbr of every protected function into an encoded compare
/// followed by `cbr eq cond, symbol`. Throws ProgramError when a slice holds
/// an and/or/xor (unless allowed as a boundary) or a constant above n_max.
AnCodeResult an_code_pass(const mir::Program& program, const AnCoderOptions& options = {});

/// Probes asserting that the operands of every encoded compare are valid code
/// words when the compare starts. Locations refer to `program`, which must
/// contain the report's sites.
std::vector<vm::AnProbe> an_probes(const mir::Program& program, const AnReport& report,
                                   std::string_view function = {});

struct CfiResult {
  mir::Program program;
  cfi::CfiMeta meta;
};

/// Splits critical edges, derives the metadata and emits cfi_update before
/// every instruction group, the edge corrections, cfi_merge on the edges of
/// `branches`, and cfi_check per policy. Only protected functions change.
CfiResult cfi_pass(const mir::Program& program, std::uint64_t seed,
                   cfi::CheckPolicy policy = cfi::CheckPolicy::EveryBlock,
                   const std::vector<cfi::ProtectedBranch>& branches = {},
                   const cfi::GroupMap& groups = {});

/// Edge-split form: successors of a cbr or switch get one predecessor each
/// (through fresh jmp blocks) and the entry block gets none.
mir::Function split_edges(const mir::Function& f);

/// Follows every cbr of every protected function on each edge by k - 1
/// re-evaluations of the same comparison; a disagreement reaches `trap 2`.
mir::Program duplicate_branches(const mir::Program& program, int k = 6);

inline constexpr std::uint32_t kDuplicateTrapCode = 2;

/// Opcode histogram with a mul followed by a sub of its result counted as one
/// "mls". Keys are lower-case mnemonics.
std::map<std::string, int> opcode_mix(const std::vector<mir::Instr>& instrs);

struct CostReport {
  std::map<std::string, int> opcodes;  ///< static counts, plain mnemonics
  int instructions = 0;
  int bytes = 0;
  std::optional<std::uint64_t> cycles;
  std::optional<std::uint64_t> steps;

  friend bool operator==(const CostReport&, const CostReport&) = default;
};

/// Static counts over every function, 4 bytes per instruction; cycles and
/// steps from a fault-free run of `function` when inputs are given.
CostReport count_costs(const mir::Program& program, const std::optional<vm::VmInputs>& inputs = {},
                       std::string_view function = {});

// Pipelines ------------------------------------------------------------------

enum class PipelineKind : std::uint8_t {
  None,       ///< lowering only
  Cfi,        ///< lowering and CFI
  An,         ///< lowering and AN coding, no CFI
  AnCfi,      ///< lowering, AN coding and CFI with condition merges
  Duplicate,  ///< lowering, branch duplication and CFI
};

struct PipelineConfig {
  PipelineKind kind = PipelineKind::AnCfi;
  int dup_k = 6;
  std::uint64_t seed = 1;
  cfi::CheckPolicy checks = cfi::CheckPolicy::EveryBlock;
  AnCoderOptions an;
};

/// Accepts "none", "cfi", "an", "an+cfi" and "dup:K". Throws
/// std::invalid_argument otherwise.
PipelineConfig parse_pipeline(std::string_view text);
std::string pipeline_name(const PipelineConfig& c);

struct CompiledProgram {
  mir::Program source;
  mir::Program program;
  PipelineConfig config;
  std::optional<cfi::CfiMeta> cfi;
  std::optional<AnReport> an;
  /// Every branch whose successors merge a condition symbol.
  std::vector<cfi::ProtectedBranch> protected_branches;
  /// Blocks of the output holding a protected decision (cbr sites of the
  /// source in protected functions), by function.
  std::vector<std::pair<std::string, std::string>> decision_blocks;
  CostReport costs;
};

/// Validates the source, runs the pipeline and counts static costs. Throws
/// ProgramError with the diagnostics when the source is invalid.
CompiledProgram compile(const mir::Program& source, const PipelineConfig& config);

}  // namespace anb::inst
