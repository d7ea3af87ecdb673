#include "anbranch/instrument.hpp"

namespace anb::inst {

using mir::Block;
using mir::Function;
using mir::Instr;
using mir::Opcode;
using mir::Reg;

namespace {

struct Lowerer {
  Function& f;
  std::uint32_t next_reg;

  void run() {
    for (std::size_t b = 0; b < f.blocks.size(); ++b) {
      for (std::size_t i = 0; i < f.blocks[b].instrs.size(); ++i) {
        const Opcode op = f.blocks[b].instrs[i].op;
        if (op == Opcode::Select) {
          lower_select(b, i);
          break;  // the rest of the block moved into the join block
        }
        if (op == Opcode::Switch) {
          lower_switch(b);
          break;
        }
      }
    }
  }

  void lower_select(std::size_t b, std::size_t i) {
    const Instr sel = f.blocks[b].instrs[i];
    const std::string stem = f.blocks[b].label;
    Block on_true{f.fresh_label(stem + ".sel_t"), {}};
    f.blocks.insert(f.blocks.begin() + static_cast<std::ptrdiff_t>(b) + 1, on_true);
    Block on_false{f.fresh_label(stem + ".sel_f"), {}};
    f.blocks.insert(f.blocks.begin() + static_cast<std::ptrdiff_t>(b) + 2, on_false);
    Block join{f.fresh_label(stem + ".join"), {}};

    auto& src = f.blocks[b].instrs;
    join.instrs.assign(src.begin() + static_cast<std::ptrdiff_t>(i) + 1, src.end());
    src.resize(i);
    src.push_back(Instr::cbr(sel.pred, sel.src[0], sel.src[1], f.blocks[b + 1].label,
                             f.blocks[b + 2].label));
    f.blocks[b + 1].instrs = {Instr::mov(sel.dst, sel.src[2]), Instr::jmp(join.label)};
    f.blocks[b + 2].instrs = {Instr::mov(sel.dst, sel.src[3]), Instr::jmp(join.label)};
    f.blocks.insert(f.blocks.begin() + static_cast<std::ptrdiff_t>(b) + 3, std::move(join));
  }

  void lower_switch(std::size_t b) {
    const Instr sw = f.blocks[b].terminator();
    f.blocks[b].instrs.pop_back();
    const std::string def = sw.targets.back();
    if (sw.cases.empty()) {
      f.blocks[b].instrs.push_back(Instr::jmp(def));
      return;
    }
    const std::string stem = f.blocks[b].label;
    std::size_t at = b;
    for (std::size_t c = 0; c < sw.cases.size(); ++c) {
      const bool last = c + 1 == sw.cases.size();
      std::string next = def;
      if (!last) {
        Block link{f.fresh_label(stem + ".sw"), {}};
        next = link.label;
        f.blocks.insert(f.blocks.begin() + static_cast<std::ptrdiff_t>(at) + 1, std::move(link));
      }
      const Reg k{next_reg++};
      f.blocks[at].instrs.push_back(Instr::constant(k, sw.cases[c]));
      f.blocks[at].instrs.push_back(Instr::cbr(Predicate::EQ, sw.src[0], k, sw.targets[c], next));
      ++at;
    }
  }
};

}  // namespace

mir::Program lower_select_switch(const mir::Program& program) {
  mir::Program out = program;
  for (Function& f : out.functions) Lowerer{f, f.register_count()}.run();
  return out;
}

}  // namespace anb::inst
