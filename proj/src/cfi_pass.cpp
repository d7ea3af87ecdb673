#include <map>

#include "anbranch/errors.hpp"
#include "anbranch/instrument.hpp"

namespace anb::inst {

using cfi::CfiEdge;
using cfi::EdgeKind;
using mir::Block;
using mir::Function;
using mir::Instr;
using mir::Opcode;

Function split_edges(const Function& f) {
  Function out = f;
  if (out.blocks.empty()) return out;
  mir::Cfg cfg = mir::Cfg::build(out);
  if (!cfg.pred[0].empty()) {
    Block entry{out.fresh_label("entry"), {Instr::jmp(out.blocks[0].label)}};
    out.blocks.insert(out.blocks.begin(), std::move(entry));
    cfg = mir::Cfg::build(out);
  }
  const std::size_t original = out.blocks.size();
  for (std::size_t b = 0; b < original; ++b) {
    const Opcode op = out.blocks[b].terminator().op;
    if (op != Opcode::Cbr && op != Opcode::Switch) continue;
    for (std::size_t slot = 0; slot < cfg.succ[b].size(); ++slot) {
      const std::size_t s = cfg.succ[b][slot];
      if (cfg.pred[s].size() == 1 && s != 0) continue;
      const std::string target = out.blocks[s].label;
      Block edge{out.fresh_label(out.blocks[b].label + ".to." + target), {Instr::jmp(target)}};
      out.blocks[b].terminator().targets[slot] = edge.label;
      out.blocks.push_back(std::move(edge));
    }
  }
  return out;
}

CfiResult cfi_pass(const mir::Program& program, std::uint64_t seed, cfi::CheckPolicy policy,
                   const std::vector<cfi::ProtectedBranch>& branches, const cfi::GroupMap& groups) {
  CfiResult res{program, {}};
  for (Function& f : res.program.functions) {
    if (f.is_protected()) f = split_edges(f);
  }
  res.meta = cfi::derive_meta(res.program, seed, policy, branches, groups);

  std::map<std::pair<std::string, std::string>, mir::Reg> cond_of;
  for (const cfi::ProtectedBranch& b : branches) cond_of[{b.function, b.block}] = b.cond;

  for (Function& f : res.program.functions) {
    if (!f.is_protected()) continue;
    const cfi::CfiFunctionMeta& meta = *res.meta.find(f.name);
    std::map<std::string, const CfiEdge*> incoming;
    std::map<std::string, const CfiEdge*> jump_out;
    for (const CfiEdge& e : meta.edges) {
      if (e.kind == EdgeKind::Jump) {
        jump_out[e.from] = &e;
      } else {
        incoming[e.to] = &e;
      }
    }

    for (std::size_t b = 0; b < f.blocks.size(); ++b) {
      Block& block = f.blocks[b];
      const cfi::CfiBlock& cb = meta.blocks[b];
      const auto g = cfi::groups_of(groups, f, block);
      std::vector<Instr> out;

      if (auto it = incoming.find(block.label); it != incoming.end()) {
        const CfiEdge& e = *it->second;
        if (e.kind == EdgeKind::Merge) {
          out.push_back(Instr::cfi_merge(cond_of.at({f.name, e.from}), e.correction));
        } else {
          out.push_back(Instr::cfi_update(e.correction));
        }
      }
      for (std::size_t i = 0; i < block.instrs.size(); ++i) {
        if (i == 0 || g[i] != g[i - 1]) out.push_back(Instr::cfi_update(cb.ids[g[i]]));
        if (i + 1 < block.instrs.size()) out.push_back(block.instrs[i]);
      }
      if (cb.checked) out.push_back(Instr::cfi_check(cb.exit));
      if (block.terminator().op == Opcode::Jmp) {
        out.push_back(Instr::cfi_update(jump_out.at(block.label)->correction));
      }
      out.push_back(block.terminator());
      block.instrs = std::move(out);
    }
  }
  return res;
}

}  // namespace anb::inst
