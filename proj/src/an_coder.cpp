#include <map>
#include <set>

#include "anbranch/enccmp.hpp"
#include "anbranch/errors.hpp"
#include "anbranch/instrument.hpp"
#include "anbranch/mir_analysis.hpp"

namespace anb::inst {

using mir::Block;
using mir::Function;
using mir::Instr;
using mir::InstrRef;
using mir::Opcode;
using mir::Reg;

std::string_view to_string(ModMode m) noexcept { return m == ModMode::Mls ? "mls" : "umod"; }

namespace {

bool is_slice_op(Opcode op) { return op == Opcode::Add || op == Opcode::Sub || op == Opcode::Mov; }

class Coder {
 public:
  Coder(Function& f, const AnCoderOptions& o, AnReport& report)
      : f_(f), opt_(o), p_(o.params), report_(report), slice_(mir::compare_slice(f)) {}

  void run() {
    bool any_cbr = false;
    for (const Block& b : f_.blocks) {
      for (const Instr& in : b.instrs) {
        if (in.op == Opcode::Select || in.op == Opcode::Switch) {
          throw ProgramError("@" + f_.name + " %" + b.label + ": lower select/switch before AN coding");
        }
        any_cbr |= in.op == Opcode::Cbr;
      }
    }
    if (!any_cbr) return;
    reject_unsupported();
    choose_shadows();
    allocate();
    rewrite();
  }

 private:
  [[noreturn]] void fail(std::size_t b, std::size_t i, const std::string& msg) const {
    throw ProgramError("@" + f_.name + " %" + f_.blocks[b].label + " #" + std::to_string(i) + " '" +
                       mir::print(f_.blocks[b].instrs[i]) + "': " + msg);
  }

  void reject_unsupported() const {
    if (opt_.boundary_on_unsupported || slice_.unsupported.empty()) return;
    const InstrRef& r = slice_.unsupported.front();
    fail(r.block, r.index,
         "feeds a protected comparison but has no AN-coded form; restructure the code or allow a "
         "boundary encode");
  }

  // A slice register keeps its plain value (and gets an encoded shadow) when
  // something outside the encoded computation reads it. Plain copies are
  // computed from plain operands, so shadowing spreads backwards.
  void choose_shadows() {
    for (const Block& b : f_.blocks) {
      for (const Instr& in : b.instrs) {
        const bool internal = in.op == Opcode::Cbr || (is_slice_op(in.op) && slice_.regs.contains(in.dst));
        if (internal) continue;
        for (Reg u : in.uses()) {
          if (slice_.regs.contains(u)) shadow_.insert(u);
        }
      }
    }
    for (bool changed = true; changed;) {
      changed = false;
      for (const InstrRef& ref : slice_.defs) {
        const Instr& d = f_.blocks[ref.block].instrs[ref.index];
        if (!is_slice_op(d.op) || !shadow_.contains(d.dst)) continue;
        for (Reg u : d.uses()) changed |= shadow_.insert(u).second;
      }
    }
  }

  Reg fresh() { return Reg{next_++}; }

  void allocate() {
    next_ = f_.register_count();
    for (Reg r : slice_.regs) enc_[r] = shadow_.contains(r) ? fresh() : r;
    a_ = fresh();
    pool_.push_back(Instr::constant(a_, p_.a()));
  }

  Reg constant(std::uint32_t value) {
    auto [it, inserted] = consts_.try_emplace(value);
    if (inserted) {
      it->second = fresh();
      pool_.push_back(Instr::constant(it->second, value));
    }
    return it->second;
  }

  Reg enc(Reg r) const { return enc_.at(r); }

  void emit(std::vector<Instr>& out, std::vector<std::uint32_t>& groups, std::uint32_t group,
            Instr in) {
    out.push_back(std::move(in));
    groups.push_back(group);
  }

  // Remainder modulo A of `value`, appended to `region`.
  Reg reduce(std::vector<Instr>& region, Reg value) {
    const Reg rem = fresh();
    if (opt_.mod == ModMode::Umod) {
      region.push_back(Instr::binary(Opcode::UMod, rem, value, a_));
    } else {
      const Reg q = fresh();
      const Reg prod = fresh();
      region.push_back(Instr::binary(Opcode::UDiv, q, value, a_));
      region.push_back(Instr::binary(Opcode::Mul, prod, q, a_));
      region.push_back(Instr::binary(Opcode::Sub, rem, value, prod));
    }
    return rem;
  }

  // diff = x - y + C; rem = diff mod A.
  Reg routine(std::vector<Instr>& region, Reg x, Reg y, Reg c) {
    const Reg d = fresh();
    const Reg e = fresh();
    region.push_back(Instr::binary(Opcode::Sub, d, x, y));
    region.push_back(Instr::binary(Opcode::Add, e, d, c));
    return reduce(region, e);
  }

  std::vector<Instr> encoded_branch(const Block& b, const Instr& cbr) {
    EncodedSite site;
    site.function = f_.name;
    site.block = b.label;
    site.pred = cbr.pred;
    site.x = enc(cbr.src[0]);
    site.y = enc(cbr.src[1]);

    std::vector<Instr> region;
    if (family_of(cbr.pred) == PredicateFamily::Ordering) {
      const bool swap = cbr.pred == Predicate::GT || cbr.pred == Predicate::LE;
      const Reg c = constant(p_.c_ord());
      site.cond = swap ? routine(region, site.y, site.x, c) : routine(region, site.x, site.y, c);
    } else {
      const Reg c = constant(p_.c_eq());
      const Reg r1 = routine(region, site.x, site.y, c);
      const Reg r2 = routine(region, site.y, site.x, c);
      site.cond = fresh();
      region.push_back(Instr::binary(Opcode::Add, site.cond, r1, r2));
    }
    site.first = region.front();
    site.mix = opcode_mix(region);

    const SymbolPair sym = symbols_for(cbr.pred, p_);
    const std::string& on_true = cbr.targets[0];
    const std::string& on_false = cbr.targets[1];
    if (opt_.compare_true_symbol) {
      site.branch_symbol = sym.true_symbol.value;
      site.edge_symbols = {sym.true_symbol.value, sym.false_symbol.value};
      region.push_back(Instr::cbr(Predicate::EQ, site.cond, constant(site.branch_symbol), on_true, on_false));
    } else {
      site.branch_symbol = sym.false_symbol.value;
      site.edge_symbols = {sym.false_symbol.value, sym.true_symbol.value};
      region.push_back(Instr::cbr(Predicate::EQ, site.cond, constant(site.branch_symbol), on_false, on_true));
    }
    report_.sites.push_back(std::move(site));
    return region;
  }

  void rewrite() {
    std::set<InstrRef> slice_defs(slice_.defs.begin(), slice_.defs.end());
    std::vector<Block> blocks;
    std::vector<std::vector<std::uint32_t>> groups;

    for (std::size_t b = 0; b < f_.blocks.size(); ++b) {
      const Block& src = f_.blocks[b];
      Block out{src.label, {}};
      std::vector<std::uint32_t> g;
      for (std::size_t i = 0; i < src.instrs.size(); ++i) {
        const Instr& in = src.instrs[i];
        const auto group = static_cast<std::uint32_t>(i);
        if (in.op == Opcode::Cbr) {
          for (Instr& e : encoded_branch(src, in)) emit(out.instrs, g, group, std::move(e));
          continue;
        }
        if (!slice_defs.contains({b, i})) {
          emit(out.instrs, g, group, in);
          continue;
        }
        const Reg r = in.dst;
        const bool shadowed = shadow_.contains(r);
        if (shadowed) emit(out.instrs, g, group, in);
        switch (in.op) {
          case Opcode::Const:
            if (in.imm > p_.n_max()) {
              fail(b, i, "constant exceeds the largest encodable value " + std::to_string(p_.n_max()));
            }
            emit(out.instrs, g, group, Instr::constant(enc(r), in.imm * p_.a()));
            break;
          case Opcode::Add:
          case Opcode::Sub:
            emit(out.instrs, g, group, Instr::binary(in.op, enc(r), enc(in.src[0]), enc(in.src[1])));
            break;
          case Opcode::Mov: emit(out.instrs, g, group, Instr::mov(enc(r), enc(in.src[0]))); break;
          default:
            if (!shadowed) emit(out.instrs, g, group, in);
            emit(out.instrs, g, group, Instr::binary(Opcode::Mul, enc(r), r, a_));
            report_.windows.push_back({f_.name, src.label, r, std::string(mir::to_string(in.op))});
            break;
        }
      }
      blocks.push_back(std::move(out));
      groups.push_back(std::move(g));
    }

    // Constant pool and input encodes open the entry block, grouped with its
    // first instruction.
    std::vector<Instr> head = pool_;
    for (Reg r : slice_.inputs) {
      head.push_back(Instr::binary(Opcode::Mul, enc(r), r, a_));
      report_.windows.push_back({f_.name, blocks[0].label, r, "input"});
    }
    blocks[0].instrs.insert(blocks[0].instrs.begin(), head.begin(), head.end());
    groups[0].insert(groups[0].begin(), head.size(), 0);

    f_.blocks = std::move(blocks);
    auto& fg = report_.groups[f_.name];
    for (std::size_t b = 0; b < f_.blocks.size(); ++b) fg[f_.blocks[b].label] = std::move(groups[b]);
  }

  Function& f_;
  const AnCoderOptions& opt_;
  const ANParams& p_;
  AnReport& report_;
  mir::CompareSlice slice_;
  std::set<Reg> shadow_;
  std::map<Reg, Reg> enc_;
  std::map<std::uint32_t, Reg> consts_;
  std::vector<Instr> pool_;
  Reg a_;
  std::uint32_t next_ = 0;
};

}  // namespace

AnCodeResult an_code_pass(const mir::Program& program, const AnCoderOptions& options) {
  AnCodeResult res{program, {}};
  for (Function& f : res.program.functions) {
    if (f.is_protected()) Coder(f, options, res.report).run();
  }
  return res;
}

std::vector<vm::AnProbe> an_probes(const mir::Program& program, const AnReport& report,
                                   std::string_view function) {
  const Function* f = function.empty() ? &program.functions.front() : program.find(function);
  if (f == nullptr) throw ProgramError("no function @" + std::string(function));
  std::vector<vm::AnProbe> probes;
  for (const EncodedSite& s : report.sites) {
    if (s.function != f->name) continue;
    const auto b = f->find_block(s.block);
    if (!b) throw ProgramError("encoded site %" + s.block + " not found");
    const auto& instrs = f->blocks[*b].instrs;
    bool found = false;
    for (std::size_t i = 0; i < instrs.size() && !found; ++i) {
      if (instrs[i] == s.first) {
        probes.push_back({{static_cast<std::uint32_t>(*b), static_cast<std::uint32_t>(i)}, {s.x, s.y}});
        found = true;
      }
    }
    if (!found) throw ProgramError("encoded compare of %" + s.block + " not found");
  }
  return probes;
}

}  // namespace anb::inst
