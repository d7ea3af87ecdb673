#pragma once

// Fault campaigns over encoded-compare traces and over instrumented programs.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anbranch/enccmp.hpp"
#include "anbranch/instrument.hpp"
#include "anbranch/vm.hpp"

namespace anb::fault {

enum class Outcome : std::uint8_t {
  DetectedAN,
  DetectedCFI,
  DetectedOther,  ///< div by zero, bad memory, fuel, explicit trap
  Masked,
  SdcControl,     ///< undetected wrong decision at a protected branch
  SdcData,        ///< undetected wrong return value or memory
};

inline constexpr std::size_t kOutcomeCount = 6;
inline constexpr std::array<Outcome, kOutcomeCount> kAllOutcomes = {
    Outcome::DetectedAN, Outcome::DetectedCFI, Outcome::DetectedOther,
    Outcome::Masked,     Outcome::SdcControl,  Outcome::SdcData};

/// detected_an, detected_cfi, detected_other, masked, sdc_control, sdc_data
std::string_view to_string(Outcome o) noexcept;

struct OutcomeCounts {
  std::array<std::uint64_t, kOutcomeCount> n{};

  std::uint64_t& operator[](Outcome o) { return n[static_cast<std::size_t>(o)]; }
  std::uint64_t operator[](Outcome o) const { return n[static_cast<std::size_t>(o)]; }
  std::uint64_t total() const;
  OutcomeCounts& operator+=(const OutcomeCounts& o);

  friend bool operator==(const OutcomeCounts&, const OutcomeCounts&) = default;
};

// Trace level ----------------------------------------------------------------

/// Masked when `got` is the correct symbol, SdcControl when it is the other
/// valid symbol, DetectedAN otherwise.
Outcome classify_trace(Predicate pred, ConditionSymbol correct, ConditionSymbol got,
                       const ANParams& p = {});

struct SweepResult {
  OutcomeCounts total;
  std::vector<OutcomeCounts> per_word;      ///< indexed like the trace steps
  std::array<OutcomeCounts, 33> per_bits{};  ///< indexed by mask popcount
};

/// Every mask of popcount 1..max_bits on every trace word, one word at a time.
SweepResult single_word_fault_sweep(Predicate pred, ANWord x, ANWord y, const ANParams& p = {},
                                    int max_bits = 5);

inline constexpr std::uint64_t kDefaultEnumerationBound = 50'000'000;

/// Every placement of 1..k flips on distinct bit positions of the trace words
/// (32 per word). Throws ResourceError when the placement count exceeds
/// `bound`. `jobs` = 0 uses the hardware concurrency; results do not depend
/// on it.
OutcomeCounts spread_fault_enumeration(Predicate pred, ANWord x, ANWord y, const ANParams& p,
                                       int k, std::uint64_t bound = kDefaultEnumerationBound,
                                       unsigned jobs = 0);

/// Number of placements of 1..k flips over `positions` bit positions.
std::uint64_t placement_count(std::uint64_t positions, int k);

// Program level --------------------------------------------------------------

/// A compiled program with fixed inputs and its fault-free reference run.
struct ProgramTarget {
  vm::Executable exe;
  vm::VmInputs inputs;
  vm::VmOptions options;
  /// Block indices whose cbr decisions count for SdcControl.
  std::vector<std::uint32_t> decision_blocks;
  /// Condition symbol registers of the protected branches.
  std::vector<mir::Reg> cond_regs;
  vm::ExecResult reference;

  static ProgramTarget make(const inst::CompiledProgram& compiled, vm::VmInputs inputs,
                            vm::VmOptions options = {}, std::string_view function = {});
};

Outcome classify(const ProgramTarget& t, const vm::ExecResult& faulted);
Outcome inject_run(const ProgramTarget& t, const vm::FaultPlan& plan);

/// Classifies every plan, in parallel; the counts do not depend on `jobs`.
OutcomeCounts run_plans(const ProgramTarget& t, const std::vector<vm::FaultPlan>& plans,
                        unsigned jobs = 0);

/// Forcing the opposite successor at every dynamic decision of the reference.
std::vector<vm::FaultPlan> branch_force_plans(const ProgramTarget& t);

/// Single-bit flips of every condition register at every step from right
/// after the compare produces it up to and including the merge consuming it.
std::vector<vm::FaultPlan> cond_flip_plans(const ProgramTarget& t);

/// A skip of every dynamic cfi_update and cfi_merge of the reference.
std::vector<vm::FaultPlan> cfi_skip_plans(const ProgramTarget& t);

/// Forces `slot` at the decision executed at step `first` and at the next
/// `count - 1` conditional branches the faulted run reaches, the way an
/// attacker repeats one glitch. Returns the final plan.
vm::FaultPlan repeated_force(const ProgramTarget& t, std::uint64_t first, std::uint32_t slot,
                             int count);

// Monte Carlo ----------------------------------------------------------------

enum class TargetKind : std::uint8_t { Trace, Program };

struct CampaignConfig {
  TargetKind target = TargetKind::Trace;
  int bits = 4;
  std::uint64_t samples = 1000;
  std::uint64_t seed = 1;
  unsigned jobs = 0;
  /// Trace target: fixed predicate, or uniform over all six when unset.
  std::optional<Predicate> pred;
  /// Trace target: fixed functional operands, or uniform 16-bit when unset.
  std::optional<std::pair<std::uint32_t, std::uint32_t>> operands;
  /// Program target fault models; each sample picks one enabled model.
  bool regflip = true;
  bool branchforce = true;
  bool skip = true;
};

struct WilsonInterval {
  double lo = 0;
  double hi = 0;
};

/// 95% Wilson score interval of k successes in n trials.
WilsonInterval wilson_interval(std::uint64_t k, std::uint64_t n);

struct CampaignResult {
  CampaignConfig config;
  std::string label;  ///< what was attacked, echoed into reports
  OutcomeCounts counts;
  double sdc_rate = 0;  ///< sdc_control / total
  WilsonInterval ci;
};

/// Placements and operands derive from (seed, sample index) alone, so any
/// worker count gives the same result.
CampaignResult monte_carlo_trace(const CampaignConfig& c, const ANParams& p = {});
CampaignResult monte_carlo_program(const ProgramTarget& t, const CampaignConfig& c);

/// Exhaustive trace campaign: spread enumeration with c.bits for the fixed
/// predicate and operands (defaults lt and (3, 5)).
CampaignResult exhaustive_trace(const CampaignConfig& c, const ANParams& p = {});

}  // namespace anb::fault
