#include <algorithm>
#include <array>
#include <deque>
#include <map>

#include "anbranch/errors.hpp"
#include "anbranch/mir.hpp"
#include "anbranch/mir_analysis.hpp"

namespace anb::mir {

namespace {

struct OpName {
  Opcode op;
  std::string_view name;
};

constexpr std::array<OpName, 21> kOpNames = {{
    {Opcode::Const, "const"},         {Opcode::Mov, "mov"},
    {Opcode::Add, "add"},             {Opcode::Sub, "sub"},
    {Opcode::Mul, "mul"},             {Opcode::UDiv, "udiv"},
    {Opcode::UMod, "umod"},           {Opcode::And, "and"},
    {Opcode::Or, "or"},               {Opcode::Xor, "xor"},
    {Opcode::Load, "load"},           {Opcode::Store, "store"},
    {Opcode::Select, "select"},       {Opcode::Cbr, "cbr"},
    {Opcode::Switch, "switch"},       {Opcode::Jmp, "jmp"},
    {Opcode::Ret, "ret"},             {Opcode::Trap, "trap"},
    {Opcode::CfiUpdate, "cfi_update"}, {Opcode::CfiMerge, "cfi_merge"},
    {Opcode::CfiCheck, "cfi_check"},
}};

}  // namespace

std::string_view to_string(Opcode op) noexcept {
  for (const auto& e : kOpNames) {
    if (e.op == op) return e.name;
  }
  return "?";
}

std::optional<Opcode> parse_opcode(std::string_view s) noexcept {
  for (const auto& e : kOpNames) {
    if (e.name == s) return e.op;
  }
  return std::nullopt;
}

// Instr -----------------------------------------------------------------------

Instr Instr::constant(Reg dst, std::uint32_t value) {
  Instr i;
  i.op = Opcode::Const;
  i.dst = dst;
  i.imm = value;
  return i;
}

Instr Instr::mov(Reg dst, Reg src) {
  Instr i;
  i.op = Opcode::Mov;
  i.dst = dst;
  i.src[0] = src;
  return i;
}

Instr Instr::binary(Opcode op, Reg dst, Reg a, Reg b) {
  Instr i;
  i.op = op;
  i.dst = dst;
  i.src[0] = a;
  i.src[1] = b;
  return i;
}

Instr Instr::load(Reg dst, std::optional<Reg> base, std::uint32_t offset) {
  Instr i;
  i.op = Opcode::Load;
  i.dst = dst;
  i.has_base = base.has_value();
  if (base) i.src[0] = *base;
  i.imm = offset;
  return i;
}

Instr Instr::store(std::optional<Reg> base, std::uint32_t offset, Reg value) {
  Instr i;
  i.op = Opcode::Store;
  i.has_base = base.has_value();
  if (base) i.src[0] = *base;
  i.src[1] = value;
  i.imm = offset;
  return i;
}

Instr Instr::select(Reg dst, Predicate pred, Reg a, Reg b, Reg v1, Reg v2) {
  Instr i;
  i.op = Opcode::Select;
  i.dst = dst;
  i.pred = pred;
  i.src = {a, b, v1, v2};
  return i;
}

Instr Instr::cbr(Predicate pred, Reg a, Reg b, std::string on_true, std::string on_false) {
  Instr i;
  i.op = Opcode::Cbr;
  i.pred = pred;
  i.src[0] = a;
  i.src[1] = b;
  i.targets = {std::move(on_true), std::move(on_false)};
  return i;
}

Instr Instr::switch_(Reg value, std::vector<std::pair<std::uint32_t, std::string>> cases,
                     std::string default_label) {
  Instr i;
  i.op = Opcode::Switch;
  i.src[0] = value;
  for (auto& [v, label] : cases) {
    i.cases.push_back(v);
    i.targets.push_back(std::move(label));
  }
  i.targets.push_back(std::move(default_label));
  return i;
}

Instr Instr::jmp(std::string label) {
  Instr i;
  i.op = Opcode::Jmp;
  i.targets = {std::move(label)};
  return i;
}

Instr Instr::ret(Reg value) {
  Instr i;
  i.op = Opcode::Ret;
  i.src[0] = value;
  return i;
}

Instr Instr::trap(std::uint32_t code) {
  Instr i;
  i.op = Opcode::Trap;
  i.imm = code;
  return i;
}

Instr Instr::cfi_update(std::uint32_t id) {
  Instr i;
  i.op = Opcode::CfiUpdate;
  i.imm = id;
  return i;
}

Instr Instr::cfi_merge(Reg cond, std::uint32_t correction) {
  Instr i;
  i.op = Opcode::CfiMerge;
  i.src[0] = cond;
  i.imm = correction;
  return i;
}

Instr Instr::cfi_check(std::uint32_t expected) {
  Instr i;
  i.op = Opcode::CfiCheck;
  i.imm = expected;
  return i;
}

std::optional<Reg> Instr::def() const {
  switch (op) {
    case Opcode::Const:
    case Opcode::Mov:
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
    case Opcode::UDiv:
    case Opcode::UMod:
    case Opcode::And:
    case Opcode::Or:
    case Opcode::Xor:
    case Opcode::Load:
    case Opcode::Select: return dst;
    default: return std::nullopt;
  }
}

std::vector<Reg> Instr::uses() const {
  switch (op) {
    case Opcode::Mov:
    case Opcode::Ret:
    case Opcode::Switch:
    case Opcode::CfiMerge: return {src[0]};
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
    case Opcode::UDiv:
    case Opcode::UMod:
    case Opcode::And:
    case Opcode::Or:
    case Opcode::Xor:
    case Opcode::Cbr: return {src[0], src[1]};
    case Opcode::Load:
      if (has_base) return {src[0]};
      return {};
    case Opcode::Store:
      if (has_base) return {src[0], src[1]};
      return {src[1]};
    case Opcode::Select: return {src[0], src[1], src[2], src[3]};
    default: return {};
  }
}

// Function / Program ----------------------------------------------------------

std::optional<std::size_t> Function::find_block(std::string_view label) const {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].label == label) return i;
  }
  return std::nullopt;
}

std::uint32_t Function::register_count() const {
  std::uint32_t n = 0;
  for (const Block& b : blocks) {
    for (const Instr& i : b.instrs) {
      if (auto d = i.def()) n = std::max(n, d->id + 1);
      for (Reg r : i.uses()) n = std::max(n, r.id + 1);
    }
  }
  return n;
}

std::string Function::fresh_label(std::string_view stem) const {
  std::string base(stem);
  if (!find_block(base)) return base;
  for (int n = 1;; ++n) {
    std::string candidate = base + "." + std::to_string(n);
    if (!find_block(candidate)) return candidate;
  }
}

const Function* Program::find(std::string_view name) const {
  for (const Function& f : functions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

Function* Program::find(std::string_view name) {
  for (Function& f : functions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

// Cfg ---------------------------------------------------------------------------

Cfg Cfg::build(const Function& f) {
  Cfg cfg;
  cfg.succ.resize(f.blocks.size());
  cfg.pred.resize(f.blocks.size());
  for (std::size_t b = 0; b < f.blocks.size(); ++b) {
    const Block& block = f.blocks[b];
    if (block.instrs.empty() || !is_terminator(block.terminator().op)) {
      throw ProgramError("@" + f.name + " %" + block.label + ": block has no terminator");
    }
    for (const std::string& t : block.terminator().targets) {
      auto target = f.find_block(t);
      if (!target) {
        throw ProgramError("@" + f.name + " %" + block.label + ": branch to undeclared block %" + t);
      }
      cfg.succ[b].push_back(*target);
      cfg.pred[*target].push_back(b);
    }
  }
  return cfg;
}

std::vector<bool> Cfg::reachable() const {
  std::vector<bool> seen(succ.size(), false);
  if (succ.empty()) return seen;
  std::deque<std::size_t> work{0};
  seen[0] = true;
  while (!work.empty()) {
    std::size_t b = work.front();
    work.pop_front();
    for (std::size_t s : succ[b]) {
      if (!seen[s]) {
        seen[s] = true;
        work.push_back(s);
      }
    }
  }
  return seen;
}

// Analyses ----------------------------------------------------------------------

std::vector<std::set<Reg>> maybe_undefined_at_entry(const Function& f, const Cfg& cfg) {
  std::set<Reg> all;
  for (std::uint32_t r = 0; r < f.register_count(); ++r) all.insert(Reg{r});

  std::vector<std::set<Reg>> defined_in(f.blocks.size());
  for (std::size_t b = 0; b < f.blocks.size(); ++b) {
    for (const Instr& i : f.blocks[b].instrs) {
      if (auto d = i.def()) defined_in[b].insert(*d);
    }
  }

  std::vector<std::set<Reg>> in(f.blocks.size());
  if (f.blocks.empty()) return in;
  in[0] = all;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t b = 0; b < f.blocks.size(); ++b) {
      std::set<Reg> out;
      std::set_difference(in[b].begin(), in[b].end(), defined_in[b].begin(), defined_in[b].end(),
                          std::inserter(out, out.end()));
      for (std::size_t s : cfg.succ[b]) {
        const std::size_t before = in[s].size();
        in[s].insert(out.begin(), out.end());
        if (in[s].size() != before) changed = true;
      }
    }
  }
  return in;
}

CompareSlice compare_slice(const Function& f) {
  CompareSlice slice;
  const Cfg cfg = Cfg::build(f);

  std::map<Reg, std::vector<InstrRef>> defs_of;
  std::deque<Reg> work;
  for (std::size_t b = 0; b < f.blocks.size(); ++b) {
    const auto& instrs = f.blocks[b].instrs;
    for (std::size_t i = 0; i < instrs.size(); ++i) {
      if (auto d = instrs[i].def()) defs_of[*d].push_back({b, i});
      if (instrs[i].op == Opcode::Cbr) {
        work.push_back(instrs[i].src[0]);
        work.push_back(instrs[i].src[1]);
      }
    }
  }

  std::set<InstrRef> defs;
  std::set<InstrRef> unsupported;
  while (!work.empty()) {
    Reg r = work.front();
    work.pop_front();
    if (!slice.regs.insert(r).second) continue;
    for (const InstrRef& ref : defs_of[r]) {
      defs.insert(ref);
      const Instr& d = f.blocks[ref.block].instrs[ref.index];
      switch (d.op) {
        case Opcode::Add:
        case Opcode::Sub:
          work.push_back(d.src[0]);
          work.push_back(d.src[1]);
          break;
        case Opcode::Mov: work.push_back(d.src[0]); break;
        case Opcode::And:
        case Opcode::Or:
        case Opcode::Xor: unsupported.insert(ref); break;
        default: break;
      }
    }
  }
  slice.defs.assign(defs.begin(), defs.end());
  slice.unsupported.assign(unsupported.begin(), unsupported.end());

  // A slice register is a function input when some read of it inside the
  // slice (or by a cbr) can see its initial value.
  const auto undef_in = maybe_undefined_at_entry(f, cfg);
  for (std::size_t b = 0; b < f.blocks.size(); ++b) {
    std::set<Reg> undef = undef_in[b];
    for (const Instr& i : f.blocks[b].instrs) {
      const bool slice_reader =
          i.op == Opcode::Cbr ||
          ((i.op == Opcode::Add || i.op == Opcode::Sub || i.op == Opcode::Mov) &&
           slice.regs.contains(i.dst));
      if (slice_reader) {
        for (Reg u : i.uses()) {
          if (slice.regs.contains(u) && undef.contains(u)) slice.inputs.insert(u);
        }
      }
      if (auto d = i.def()) undef.erase(*d);
    }
  }
  return slice;
}

}  // namespace anb::mir
