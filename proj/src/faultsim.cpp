#include "anbranch/faultsim.hpp"

#include <algorithm>
#include <bit>

#include "anbranch/errors.hpp"
#include "parallel.hpp"

namespace anb::fault {

using vm::BranchForce;
using vm::FaultPlan;

std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::DetectedAN: return "detected_an";
    case Outcome::DetectedCFI: return "detected_cfi";
    case Outcome::DetectedOther: return "detected_other";
    case Outcome::Masked: return "masked";
    case Outcome::SdcControl: return "sdc_control";
    case Outcome::SdcData: return "sdc_data";
  }
  return "?";
}

std::uint64_t OutcomeCounts::total() const {
  std::uint64_t t = 0;
  for (std::uint64_t v : n) t += v;
  return t;
}

OutcomeCounts& OutcomeCounts::operator+=(const OutcomeCounts& o) {
  for (std::size_t i = 0; i < kOutcomeCount; ++i) n[i] += o.n[i];
  return *this;
}

Outcome classify_trace(Predicate pred, ConditionSymbol correct, ConditionSymbol got,
                       const ANParams& p) {
  if (got == correct) return Outcome::Masked;
  if (classify_symbol(got, pred, p) != Truth::Invalid) return Outcome::SdcControl;
  return Outcome::DetectedAN;
}

SweepResult single_word_fault_sweep(Predicate pred, ANWord x, ANWord y, const ANParams& p,
                                    int max_bits) {
  const std::size_t width = trace_width(family_of(pred));
  const ConditionSymbol correct = encoded_compare(pred, x, y, p);
  SweepResult res;
  res.per_word.resize(width);
  std::array<std::uint32_t, 7> masks{};
  // Walk all 32-bit masks of popcount 1..max_bits in lexicographic order of
  // their bit sets.
  std::vector<std::uint32_t> all;
  for (int k = 1; k <= max_bits && k <= 32; ++k) {
    std::uint32_t m = (k == 32) ? ~0u : ((1u << k) - 1);
    for (;;) {
      all.push_back(m);
      // Gosper's hack: next integer with the same popcount.
      const std::uint32_t c = m & (~m + 1);
      const std::uint64_t r = static_cast<std::uint64_t>(m) + c;
      if (r >> 32) break;
      m = static_cast<std::uint32_t>(((static_cast<std::uint32_t>(r) ^ m) >> 2) / c) |
          static_cast<std::uint32_t>(r);
    }
  }
  for (std::size_t w = 0; w < width; ++w) {
    for (std::uint32_t m : all) {
      masks[w] = m;
      const ConditionSymbol got{compare_with_faults(pred, x, y, p, std::span(masks).first(width))};
      const Outcome o = classify_trace(pred, correct, got, p);
      ++res.per_word[w][o];
      ++res.per_bits[std::popcount(m)][o];
      ++res.total[o];
    }
    masks[w] = 0;
  }
  return res;
}

std::uint64_t placement_count(std::uint64_t positions, int k) {
  std::uint64_t total = 0;
  std::uint64_t c = 1;  // C(positions, j)
  for (int j = 1; j <= k; ++j) {
    if (positions < static_cast<std::uint64_t>(j)) break;
    c = c * (positions - j + 1) / j;
    total += c;
  }
  return total;
}

namespace {

struct SpreadWalker {
  Predicate pred;
  ANWord x, y;
  const ANParams& p;
  std::size_t width;
  ConditionSymbol correct;
  std::array<std::uint32_t, 7> masks{};
  OutcomeCounts counts;

  void eval() {
    const ConditionSymbol got{compare_with_faults(pred, x, y, p, std::span(masks).first(width))};
    ++counts[classify_trace(pred, correct, got, p)];
  }

  // Every set of up to `left` more positions above `from`, each evaluated.
  void extend(std::size_t from, int left) {
    if (left == 0) return;
    const std::size_t positions = width * 32;
    for (std::size_t q = from; q < positions; ++q) {
      masks[q / 32] ^= 1u << (q % 32);
      eval();
      extend(q + 1, left - 1);
      masks[q / 32] ^= 1u << (q % 32);
    }
  }
};

}  // namespace

OutcomeCounts spread_fault_enumeration(Predicate pred, ANWord x, ANWord y, const ANParams& p,
                                       int k, std::uint64_t bound, unsigned jobs) {
  const std::size_t width = trace_width(family_of(pred));
  const std::size_t positions = width * 32;
  if (k < 0) throw RangeError("negative bit budget");
  if (placement_count(positions, k) > bound) {
    throw ResourceError(std::to_string(placement_count(positions, k)) +
                        " placements exceed the enumeration bound of " + std::to_string(bound));
  }
  const ConditionSymbol correct = encoded_compare(pred, x, y, p);
  if (k == 0) return {};
  // Work item = lowest flipped position; its subtree holds every placement
  // starting there.
  return detail::parallel_sum<OutcomeCounts>(positions, jobs, [&](std::uint64_t q) {
    SpreadWalker w{pred, x, y, p, width, correct, {}, {}};
    w.masks[q / 32] ^= 1u << (q % 32);
    w.eval();
    w.extend(q + 1, k - 1);
    return w.counts;
  });
}

// Program level --------------------------------------------------------------

ProgramTarget ProgramTarget::make(const inst::CompiledProgram& compiled, vm::VmInputs inputs,
                                  vm::VmOptions options, std::string_view function) {
  ProgramTarget t{vm::Executable(compiled.program, function), std::move(inputs), std::move(options),
                  {}, {}, {}};
  const mir::Function& f = t.exe.function();
  for (const auto& [fn, label] : compiled.decision_blocks) {
    if (fn != f.name) continue;
    if (auto b = f.find_block(label)) t.decision_blocks.push_back(static_cast<std::uint32_t>(*b));
  }
  std::sort(t.decision_blocks.begin(), t.decision_blocks.end());
  for (const cfi::ProtectedBranch& b : compiled.protected_branches) {
    if (b.function == f.name) t.cond_regs.push_back(b.cond);
  }
  t.options.record_trace = true;
  t.reference = vm::interpret(t.exe, t.inputs, {}, t.options);
  return t;
}

namespace {

std::vector<std::pair<std::uint32_t, std::uint32_t>> decisions(const ProgramTarget& t,
                                                               const vm::ExecResult& r) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (const vm::BranchEvent& e : r.branches) {
    if (std::binary_search(t.decision_blocks.begin(), t.decision_blocks.end(), e.at.block)) {
      out.emplace_back(e.at.block, e.successor);
    }
  }
  return out;
}

}  // namespace

Outcome classify(const ProgramTarget& t, const vm::ExecResult& faulted) {
  const vm::ExecResult& ref = t.reference;
  const bool same_trap = ref.status == vm::HaltStatus::Trapped && ref.trap == faulted.trap &&
                         ref.trap_code == faulted.trap_code;
  if (faulted.status == vm::HaltStatus::Trapped && !same_trap) {
    switch (faulted.trap) {
      case vm::TrapKind::CfiViolation: return Outcome::DetectedCFI;
      case vm::TrapKind::AnIntegrity: return Outcome::DetectedAN;
      default: return Outcome::DetectedOther;
    }
  }
  if (decisions(t, faulted) != decisions(t, ref)) return Outcome::SdcControl;
  if (faulted.status != ref.status || faulted.return_value != ref.return_value ||
      faulted.memory_digest != ref.memory_digest) {
    return Outcome::SdcData;
  }
  return Outcome::Masked;
}

Outcome inject_run(const ProgramTarget& t, const FaultPlan& plan) {
  vm::VmOptions opt = t.options;
  opt.record_trace = false;
  return classify(t, vm::interpret(t.exe, t.inputs, plan, opt));
}

OutcomeCounts run_plans(const ProgramTarget& t, const std::vector<FaultPlan>& plans, unsigned jobs) {
  return detail::parallel_sum<OutcomeCounts>(plans.size(), jobs, [&](std::uint64_t i) {
    OutcomeCounts c;
    ++c[inject_run(t, plans[i])];
    return c;
  });
}

std::vector<FaultPlan> branch_force_plans(const ProgramTarget& t) {
  std::vector<FaultPlan> plans;
  for (const vm::BranchEvent& e : t.reference.branches) {
    if (!std::binary_search(t.decision_blocks.begin(), t.decision_blocks.end(), e.at.block)) continue;
    plans.push_back({BranchForce{e.step, 1 - e.successor}});
  }
  return plans;
}

std::vector<FaultPlan> cond_flip_plans(const ProgramTarget& t) {
  std::vector<FaultPlan> plans;
  const auto& trace = t.reference.trace;
  for (mir::Reg c : t.cond_regs) {
    std::optional<std::uint64_t> open;
    for (std::uint64_t s = 0; s < trace.size(); ++s) {
      const mir::Instr& in = t.exe.instr(trace[s].at);
      if (in.op == mir::Opcode::CfiMerge && in.src[0] == c && open) {
        for (std::uint64_t at = *open; at <= s; ++at) {
          for (std::uint32_t bit = 0; bit < 32; ++bit) plans.push_back({vm::RegFlip{c, 1u << bit, at}});
        }
        open.reset();
      }
      if (in.def() == c) open = s + 1;
    }
  }
  return plans;
}

std::vector<FaultPlan> cfi_skip_plans(const ProgramTarget& t) {
  std::vector<FaultPlan> plans;
  const auto& trace = t.reference.trace;
  for (std::uint64_t s = 0; s < trace.size(); ++s) {
    const mir::Opcode op = t.exe.instr(trace[s].at).op;
    if (op == mir::Opcode::CfiUpdate || op == mir::Opcode::CfiMerge) plans.push_back({vm::InstrSkip{s}});
  }
  return plans;
}

FaultPlan repeated_force(const ProgramTarget& t, std::uint64_t first, std::uint32_t slot, int count) {
  FaultPlan plan{BranchForce{first, slot}};
  vm::VmOptions opt = t.options;
  opt.record_trace = false;
  std::uint64_t last = first;
  for (int j = 1; j < count; ++j) {
    const vm::ExecResult r = vm::interpret(t.exe, t.inputs, plan, opt);
    auto next = std::find_if(r.branches.begin(), r.branches.end(),
                             [&](const vm::BranchEvent& e) { return e.step > last; });
    if (next == r.branches.end()) break;
    last = next->step;
    plan.push_back(BranchForce{last, slot});
  }
  return plan;
}

}  // namespace anb::fault
