#include <set>
#include <sstream>

#include "anbranch/errors.hpp"
#include "anbranch/mir.hpp"
#include "anbranch/mir_analysis.hpp"

namespace anb::mir {

namespace {

constexpr std::uint32_t kMaxRegisters = 1u << 20;

class Checker {
 public:
  Checker(const Program& p, const ValidateOptions& o) : program_(p), options_(o) {}

  std::vector<Diagnostic> run() {
    if (program_.functions.empty()) error({}, {}, {}, "program has no functions");
    std::set<std::string> names;
    for (const Function& f : program_.functions) {
      if (!names.insert(f.name).second) error(f.name, {}, {}, "duplicate function name");
      function(f);
    }
    return std::move(diags_);
  }

 private:
  void add(Severity s, const std::string& fn, const std::string& block,
           std::optional<std::size_t> index, std::string msg) {
    diags_.push_back({s, fn, block, index, std::move(msg)});
  }
  void error(const std::string& fn, const std::string& block, std::optional<std::size_t> index,
             std::string msg) {
    add(Severity::Error, fn, block, index, std::move(msg));
  }
  void warning(const std::string& fn, const std::string& block, std::optional<std::size_t> index,
               std::string msg) {
    add(Severity::Warning, fn, block, index, std::move(msg));
  }

  void function(const Function& f) {
    if (f.blocks.empty()) {
      error(f.name, {}, {}, "function has no blocks");
      return;
    }
    std::set<std::string> labels;
    for (const Block& b : f.blocks) {
      if (!labels.insert(b.label).second) error(f.name, b.label, {}, "duplicate block label");
    }

    bool structurally_sound = true;
    for (const Block& b : f.blocks) structurally_sound &= block(f, b, labels);
    if (!structurally_sound) return;

    const Cfg cfg = Cfg::build(f);
    const auto live = cfg.reachable();
    for (std::size_t b = 0; b < f.blocks.size(); ++b) {
      if (!live[b]) warning(f.name, f.blocks[b].label, {}, "block is unreachable from the entry");
    }
    if (f.is_protected()) protected_checks(f);
  }

  bool block(const Function& f, const Block& b, const std::set<std::string>& labels) {
    if (b.instrs.empty()) {
      error(f.name, b.label, {}, "block has no terminator");
      return false;
    }
    bool ok = true;
    for (std::size_t i = 0; i < b.instrs.size(); ++i) {
      const Instr& in = b.instrs[i];
      const bool last = i + 1 == b.instrs.size();
      if (is_terminator(in.op) && !last) {
        error(f.name, b.label, i, "terminator '" + print(in) + "' is not the last instruction");
        ok = false;
      }
      if (last && !is_terminator(in.op)) {
        error(f.name, b.label, i, "block does not end in a terminator");
        ok = false;
      }
      if (is_cfi(in.op) && !options_.allow_cfi) {
        error(f.name, b.label, i, "cfi opcode in an uninstrumented program");
      }
      for (const std::string& t : in.targets) {
        if (!labels.contains(t)) {
          error(f.name, b.label, i, "branch to undeclared block %" + t);
          ok = false;
        }
      }
      if (in.op == Opcode::Switch) {
        std::set<std::uint32_t> seen;
        for (std::uint32_t v : in.cases) {
          if (!seen.insert(v).second) error(f.name, b.label, i, "duplicate switch case " + std::to_string(v));
        }
      }
      auto reg_ok = [&](Reg r) {
        if (r.id >= kMaxRegisters) error(f.name, b.label, i, "register r" + std::to_string(r.id) + " out of range");
      };
      if (auto d = in.def()) reg_ok(*d);
      for (Reg r : in.uses()) reg_ok(r);
    }
    return ok;
  }

  void protected_checks(const Function& f) {
    const CompareSlice slice = compare_slice(f);
    for (const InstrRef& ref : slice.defs) {
      const Instr& d = f.blocks[ref.block].instrs[ref.index];
      if (d.op == Opcode::Const && d.imm > options_.n_max) {
        warning(f.name, f.blocks[ref.block].label, ref.index,
                "constant " + std::to_string(d.imm) + " feeds a protected comparison but exceeds " +
                    std::to_string(options_.n_max));
      }
    }
    for (const InstrRef& ref : slice.unsupported) {
      warning(f.name, f.blocks[ref.block].label, ref.index,
              "'" + print(f.blocks[ref.block].instrs[ref.index]) +
                  "' feeds a protected comparison but has no AN-coded form");
    }

    std::set<Reg> compared;
    for (const Block& b : f.blocks) {
      if (b.terminator().op == Opcode::Cbr) {
        compared.insert(b.terminator().src[0]);
        compared.insert(b.terminator().src[1]);
      }
    }
    for (const Block& b : f.blocks) {
      for (std::size_t i = 0; i < b.instrs.size(); ++i) {
        const Instr& in = b.instrs[i];
        if ((in.op == Opcode::Load || in.op == Opcode::Store) && in.has_base &&
            compared.contains(in.src[0])) {
          warning(f.name, b.label, i,
                  "r" + std::to_string(in.src[0].id) +
                      " is both compared and used as an address; decouple the induction variable");
        }
      }
    }
  }

  const Program& program_;
  const ValidateOptions& options_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

std::string format(const Diagnostic& d) {
  std::ostringstream out;
  out << (d.severity == Severity::Error ? "error" : "warning");
  if (!d.function.empty()) out << ": @" << d.function;
  if (!d.block.empty()) out << " %" << d.block;
  if (d.index) out << " #" << *d.index;
  out << ": " << d.message;
  return out.str();
}

std::vector<Diagnostic> validate(const Program& program, const ValidateOptions& options) {
  return Checker(program, options).run();
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const Diagnostic& d : diags) {
    if (d.severity == Severity::Error) return true;
  }
  return false;
}

void require_valid(const Program& program, const ValidateOptions& options) {
  const auto diags = validate(program, options);
  if (!has_errors(diags)) return;
  std::string msg = "invalid program";
  for (const Diagnostic& d : diags) {
    if (d.severity == Severity::Error) msg += "\n  " + format(d);
  }
  throw ProgramError(msg);
}

}  // namespace anb::mir
