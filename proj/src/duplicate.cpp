#include <array>
#include <stdexcept>

#include "anbranch/instrument.hpp"

namespace anb::inst {

using mir::Block;
using mir::Function;
using mir::Instr;
using mir::Opcode;

namespace {

void duplicate(Function& f, int k) {
  std::vector<std::size_t> sites;
  for (std::size_t b = 0; b < f.blocks.size(); ++b) {
    if (f.blocks[b].terminator().op == Opcode::Cbr) sites.push_back(b);
  }
  if (sites.empty()) return;

  const std::string trap = f.fresh_label("dup_trap");
  f.blocks.push_back({trap, {Instr::trap(kDuplicateTrapCode)}});

  for (std::size_t b : sites) {
    const Instr cbr = f.blocks[b].terminator();
    const std::string stem = f.blocks[b].label;
    std::array<std::string, 2> head;
    for (int side = 0; side < 2; ++side) {
      // Re-checks on the true edge must stay true, on the false edge false.
      std::string next = cbr.targets[side];
      for (int j = k - 1; j >= 1; --j) {
        Block check{f.fresh_label(stem + (side == 0 ? ".t" : ".f") + std::to_string(j)), {}};
        check.instrs.push_back(side == 0 ? Instr::cbr(cbr.pred, cbr.src[0], cbr.src[1], next, trap)
                                         : Instr::cbr(cbr.pred, cbr.src[0], cbr.src[1], trap, next));
        next = check.label;
        f.blocks.push_back(std::move(check));
      }
      head[side] = next;
    }
    f.blocks[b].terminator().targets = {head[0], head[1]};
  }
}

}  // namespace

mir::Program duplicate_branches(const mir::Program& program, int k) {
  if (k < 1) throw std::invalid_argument("duplication factor must be at least 1");
  mir::Program out = program;
  if (k == 1) return out;
  for (Function& f : out.functions) {
    if (f.is_protected()) duplicate(f, k);
  }
  return out;
}

}  // namespace anb::inst
