#include "anbranch/vm.hpp"

#include <algorithm>
#include <stdexcept>

#include "anbranch/cfi.hpp"
#include "anbranch/errors.hpp"

namespace anb::vm {

using mir::Opcode;

std::uint64_t step_of(const FaultSpec& f) noexcept {
  return std::visit([](const auto& x) { return x.at; }, f);
}

std::string describe(const FaultSpec& f) {
  struct {
    std::string operator()(const RegFlip& x) const {
      return "regflip@" + std::to_string(x.at) + ":r" + std::to_string(x.reg.id) + "^" +
             std::to_string(x.mask);
    }
    std::string operator()(const BranchForce& x) const {
      return "branchforce@" + std::to_string(x.at) + "=" + std::to_string(x.successor);
    }
    std::string operator()(const InstrSkip& x) const { return "skip@" + std::to_string(x.at); }
  } v;
  return std::visit(v, f);
}

std::string_view to_string(HaltStatus s) noexcept {
  switch (s) {
    case HaltStatus::Running: return "running";
    case HaltStatus::Returned: return "returned";
    case HaltStatus::Trapped: return "trapped";
  }
  return "?";
}

std::string_view to_string(TrapKind k) noexcept {
  switch (k) {
    case TrapKind::None: return "none";
    case TrapKind::CfiViolation: return "cfi_violation";
    case TrapKind::AnIntegrity: return "an_integrity";
    case TrapKind::DivByZero: return "div_by_zero";
    case TrapKind::BadMemory: return "bad_memory";
    case TrapKind::Fuel: return "fuel";
    case TrapKind::Explicit: return "trap";
  }
  return "?";
}

std::uint32_t cost_model(Opcode op) noexcept {
  switch (op) {
    case Opcode::UDiv:
    case Opcode::UMod: return 7;
    case Opcode::Load:
    case Opcode::Store:
    case Opcode::CfiCheck: return 2;
    default: return 1;
  }
}

Executable::Executable(mir::Program program, std::string_view function)
    : program_(std::move(program)) {
  if (program_.functions.empty()) throw ProgramError("program has no functions");
  if (!function.empty()) {
    const mir::Function* f = program_.find(function);
    if (f == nullptr) throw ProgramError("no function @" + std::string(function));
    index_ = static_cast<std::size_t>(f - program_.functions.data());
  }
  const mir::Cfg cfg = mir::Cfg::build(this->function());
  for (const auto& s : cfg.succ) succ_.emplace_back(s.begin(), s.end());
  registers_ = this->function().register_count();
}

namespace {

std::uint64_t digest(const std::vector<std::uint32_t>& mem) {
  // FNV-1a over the little-endian bytes of every word.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint32_t w : mem) {
    for (int i = 0; i < 4; ++i) {
      h ^= (w >> (8 * i)) & 0xFFu;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

class Machine {
 public:
  Machine(const Executable& exe, const VmInputs& inputs, const FaultPlan& faults,
          const VmOptions& options)
      : exe_(exe), fn_(exe.function()), opt_(options), mem_(options.memory_words, 0) {
    std::uint32_t nregs = std::max(exe.register_count(), 1u);
    for (const auto& [r, v] : inputs.registers) nregs = std::max(nregs, r + 1);
    for (const FaultSpec& f : faults) {
      if (const auto* flip = std::get_if<RegFlip>(&f)) nregs = std::max(nregs, flip->reg.id + 1);
    }
    regs_.assign(nregs, 0);
    for (const auto& [r, v] : inputs.registers) regs_[r] = v;
    for (const auto& [addr, v] : inputs.memory) {
      if (addr >= mem_.size()) throw std::out_of_range("input address outside memory");
      mem_[addr] = v;
    }
    for (const FaultSpec& f : faults) faults_.push_back(&f);
    std::stable_sort(faults_.begin(), faults_.end(),
                     [](const FaultSpec* a, const FaultSpec* b) { return step_of(*a) < step_of(*b); });
  }

  ExecResult run() {
    if (opt_.record_trace) res_.trace.reserve(256);
    while (res_.status == HaltStatus::Running) step();
    res_.memory_digest = digest(mem_);
    res_.cfi_state = cfi_.value;
    return std::move(res_);
  }

 private:
  void trap(TrapKind kind, std::uint32_t code = 0) {
    res_.status = HaltStatus::Trapped;
    res_.trap = kind;
    res_.trap_code = code;
  }

  bool address(const mir::Instr& in, std::uint32_t& out) {
    out = (in.has_base ? regs_[in.src[0].id] : 0) + in.imm;
    if (out >= mem_.size()) {
      trap(TrapKind::BadMemory, out);
      return false;
    }
    return true;
  }

  void jump_to(std::uint32_t block) { pc_ = {block, 0}; }

  void step() {
    if (res_.steps >= opt_.fuel) {
      trap(TrapKind::Fuel);
      return;
    }
    const std::uint64_t now = res_.steps++;

    bool skip = false;
    std::optional<std::uint32_t> forced;
    while (next_fault_ < faults_.size() && step_of(*faults_[next_fault_]) <= now) {
      const FaultSpec& f = *faults_[next_fault_++];
      if (step_of(f) != now) continue;
      if (const auto* flip = std::get_if<RegFlip>(&f)) {
        regs_[flip->reg.id] ^= flip->mask;
      } else if (const auto* force = std::get_if<BranchForce>(&f)) {
        forced = force->successor;
      } else {
        skip = true;
      }
    }

    const mir::Instr& in = exe_.instr(pc_);
    if (opt_.record_trace) res_.trace.push_back({pc_, !skip});

    if (skip) {
      if (mir::is_terminator(in.op)) {
        if (pc_.block + 1 >= fn_.blocks.size()) {
          trap(TrapKind::BadMemory);
          return;
        }
        jump_to(pc_.block + 1);
      } else {
        ++pc_.index;
      }
      return;
    }

    if (!opt_.probes.empty()) {
      for (const AnProbe& p : opt_.probes) {
        if (p.at != pc_) continue;
        for (mir::Reg r : p.regs) {
          if (!is_valid(ANWord{regs_[r.id]}, opt_.params)) {
            trap(TrapKind::AnIntegrity, r.id);
            return;
          }
        }
      }
    }

    res_.cycles += cost_model(in.op);
    auto& d = regs_[in.dst.id];
    const std::uint32_t a = regs_[in.src[0].id];
    const std::uint32_t b = regs_[in.src[1].id];

    switch (in.op) {
      case Opcode::Const: d = in.imm; break;
      case Opcode::Mov: d = a; break;
      case Opcode::Add: d = a + b; break;
      case Opcode::Sub: d = a - b; break;
      case Opcode::Mul: d = a * b; break;
      case Opcode::And: d = a & b; break;
      case Opcode::Or: d = a | b; break;
      case Opcode::Xor: d = a ^ b; break;
      case Opcode::UDiv:
      case Opcode::UMod:
        if (b == 0) {
          trap(TrapKind::DivByZero);
          return;
        }
        d = in.op == Opcode::UDiv ? a / b : a % b;
        break;
      case Opcode::Load: {
        std::uint32_t addr = 0;
        if (!address(in, addr)) return;
        d = mem_[addr];
        break;
      }
      case Opcode::Store: {
        std::uint32_t addr = 0;
        if (!address(in, addr)) return;
        mem_[addr] = b;
        break;
      }
      case Opcode::Select:
        d = evaluate(in.pred, a, b) ? regs_[in.src[2].id] : regs_[in.src[3].id];
        break;
      case Opcode::Cbr:
      case Opcode::Switch: {
        const auto& succ = exe_.successors(pc_.block);
        std::uint32_t slot = 0;
        if (in.op == Opcode::Cbr) {
          slot = evaluate(in.pred, a, b) ? 0 : 1;
        } else {
          slot = static_cast<std::uint32_t>(in.cases.size());
          for (std::size_t c = 0; c < in.cases.size(); ++c) {
            if (in.cases[c] == a) {
              slot = static_cast<std::uint32_t>(c);
              break;
            }
          }
        }
        if (forced && *forced < succ.size()) slot = *forced;
        res_.branches.push_back({now, pc_, slot});
        jump_to(succ[slot]);
        return;
      }
      case Opcode::Jmp: jump_to(exe_.successors(pc_.block)[0]); return;
      case Opcode::Ret:
        res_.status = HaltStatus::Returned;
        res_.return_value = a;
        return;
      case Opcode::Trap: trap(TrapKind::Explicit, in.imm); return;
      case Opcode::CfiUpdate: cfi_ = cfi::state_update(cfi_, in.imm); break;
      case Opcode::CfiMerge: cfi_ = cfi::merge_condition(cfi_, {a}, in.imm); break;
      case Opcode::CfiCheck:
        if (cfi::check(cfi_, in.imm) == cfi::CheckResult::Violation) {
          trap(TrapKind::CfiViolation, cfi_.value);
          return;
        }
        break;
    }
    ++pc_.index;
  }

  const Executable& exe_;
  const mir::Function& fn_;
  const VmOptions& opt_;
  std::vector<std::uint32_t> regs_;
  std::vector<std::uint32_t> mem_;
  std::vector<const FaultSpec*> faults_;
  std::size_t next_fault_ = 0;
  Location pc_;
  cfi::CfiState cfi_;
  ExecResult res_;
};

}  // namespace

ExecResult interpret(const Executable& exe, const VmInputs& inputs, const FaultPlan& faults,
                     const VmOptions& options) {
  return Machine(exe, inputs, faults, options).run();
}

ExecResult interpret(const mir::Program& program, const VmInputs& inputs, const FaultPlan& faults,
                     const VmOptions& options) {
  return interpret(Executable(program), inputs, faults, options);
}

}  // namespace anb::vm
