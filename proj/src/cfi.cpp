#include "anbranch/cfi.hpp"

#include <map>
#include <random>

#include "anbranch/errors.hpp"

namespace anb::cfi {

namespace {

using mir::Function;
using mir::Opcode;

std::uint32_t jump_correction(std::uint32_t exit, std::uint32_t entry) {
  return entry ^ std::rotl(exit, 1);
}

class Deriver {
 public:
  Deriver(const Function& f, std::uint64_t seed, CheckPolicy policy,
          std::span<const ProtectedBranch> branches, const GroupMap& groups)
      : f_(f), cfg_(mir::Cfg::build(f)), rng_(seed), policy_(policy) {
    for (const ProtectedBranch& b : branches) {
      if (b.function == f.name) protected_[b.block] = &b;
    }
    check_form();
    for (const mir::Block& b : f.blocks) {
      auto g = groups_of(groups, f, b);
      if (g.size() != b.instrs.size() || g.front() != 0) fail("bad instruction groups for %" + b.label);
      for (std::size_t i = 1; i < g.size(); ++i) {
        if (g[i] != g[i - 1] && g[i] != g[i - 1] + 1) fail("bad instruction groups for %" + b.label);
      }
      group_count_.push_back(g.back() + 1);
    }
  }

  CfiFunctionMeta derive() {
    for (;;) {
      CfiFunctionMeta meta = attempt();
      if (skips_visible(meta)) return meta;
    }
  }

 private:
  void fail(const std::string& msg) const { throw ProgramError("@" + f_.name + ": " + msg); }

  void check_form() const {
    const auto live = cfg_.reachable();
    for (std::size_t b = 0; b < f_.blocks.size(); ++b) {
      const auto& block = f_.blocks[b];
      if (!live[b]) fail("block %" + block.label + " is unreachable");
      for (const auto& in : block.instrs) {
        if (mir::is_cfi(in.op)) fail("program already carries cfi instructions");
      }
      const auto& term = block.terminator();
      if (protected_.contains(block.label) && term.op != Opcode::Cbr) {
        fail("protected branch %" + block.label + " does not end in cbr");
      }
      if (cfg_.succ[b].size() > 1 || term.op == Opcode::Cbr || term.op == Opcode::Switch) {
        for (std::size_t s : cfg_.succ[b]) {
          if (cfg_.pred[s].size() != 1 || s == 0) {
            fail("edge %" + block.label + " -> %" + f_.blocks[s].label + " is not split");
          }
        }
      }
    }
    if (!cfg_.pred[0].empty()) fail("entry block has predecessors");
  }

  std::uint32_t draw_nonzero() {
    for (;;) {
      auto v = static_cast<std::uint32_t>(rng_());
      if (v != 0) return v;
    }
  }

  CfiFunctionMeta attempt() {
    CfiFunctionMeta meta;
    meta.function = f_.name;
    meta.policy = policy_;
    meta.blocks.resize(f_.blocks.size());
    for (std::size_t b = 0; b < f_.blocks.size(); ++b) {
      CfiBlock& cb = meta.blocks[b];
      cb.label = f_.blocks[b].label;
      cb.entry = draw_nonzero();
    }
    for (std::size_t b = 0; b < f_.blocks.size(); ++b) {
      CfiBlock& cb = meta.blocks[b];
      CfiState s{cb.entry};
      for (std::size_t i = 0; i < group_count_[b]; ++i) {
        // An id equal to rotl(S) ^ S would make skipping its update invisible.
        std::uint32_t id = draw_nonzero();
        while (id == (std::rotl(s.value, 1) ^ s.value)) id = draw_nonzero();
        cb.ids.push_back(id);
        s = state_update(s, id);
      }
      cb.exit = s.value;
      const Opcode term = f_.blocks[b].terminator().op;
      cb.checked = policy_ == CheckPolicy::EveryBlock ? term != Opcode::Trap : term == Opcode::Ret;
    }

    meta.edges.push_back({"", meta.blocks[0].label, 0, EdgeKind::Start, std::nullopt,
                          jump_correction(0, meta.blocks[0].entry)});
    for (std::size_t b = 0; b < f_.blocks.size(); ++b) {
      const auto& term = f_.blocks[b].terminator();
      const bool multi = term.op == Opcode::Cbr || term.op == Opcode::Switch;
      const auto it = protected_.find(f_.blocks[b].label);
      for (std::size_t slot = 0; slot < cfg_.succ[b].size(); ++slot) {
        const std::size_t s = cfg_.succ[b][slot];
        CfiEdge e;
        e.from = meta.blocks[b].label;
        e.to = meta.blocks[s].label;
        e.successor = static_cast<std::uint32_t>(slot);
        const std::uint32_t exit = meta.blocks[b].exit;
        const std::uint32_t entry = meta.blocks[s].entry;
        if (it != protected_.end()) {
          e.kind = EdgeKind::Merge;
          e.symbol = it->second->edge_symbols[slot];
          e.correction = entry ^ exit ^ *e.symbol;
        } else {
          e.kind = multi ? EdgeKind::Branch : EdgeKind::Jump;
          e.correction = jump_correction(exit, entry);
        }
        meta.edges.push_back(std::move(e));
      }
    }
    return meta;
  }

  // Skipping an edge correction leaves the source exit signature (or zero at
  // the function start) in place of the target entry signature.
  bool skips_visible(const CfiFunctionMeta& meta) const {
    std::map<std::string, std::uint32_t> exit_of;
    for (const CfiBlock& b : meta.blocks) exit_of[b.label] = b.exit;
    for (const CfiEdge& e : meta.edges) {
      const std::uint32_t entry = meta.find_block(e.to)->entry;
      const std::uint32_t before = e.kind == EdgeKind::Start ? 0 : exit_of[e.from];
      if (entry == before) return false;
    }
    return true;
  }

  const Function& f_;
  mir::Cfg cfg_;
  std::mt19937_64 rng_;
  CheckPolicy policy_;
  std::map<std::string, const ProtectedBranch*> protected_;
  std::vector<std::uint32_t> group_count_;
};

}  // namespace

const CfiBlock* CfiFunctionMeta::find_block(std::string_view label) const {
  for (const CfiBlock& b : blocks) {
    if (b.label == label) return &b;
  }
  return nullptr;
}

const CfiFunctionMeta* CfiMeta::find(std::string_view function) const {
  for (const CfiFunctionMeta& f : functions) {
    if (f.function == function) return &f;
  }
  return nullptr;
}

std::vector<std::uint32_t> groups_of(const GroupMap& groups, const mir::Function& function,
                                     const mir::Block& block) {
  if (auto f = groups.find(function.name); f != groups.end()) {
    if (auto b = f->second.find(block.label); b != f->second.end()) return b->second;
  }
  std::vector<std::uint32_t> g(block.instrs.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<std::uint32_t>(i);
  return g;
}

CfiMeta derive_meta(const mir::Program& program, std::uint64_t seed, CheckPolicy policy,
                    std::span<const ProtectedBranch> branches, const GroupMap& groups) {
  CfiMeta meta;
  meta.seed = seed;
  std::uint64_t index = 0;
  for (const Function& f : program.functions) {
    ++index;
    if (!f.is_protected()) continue;
    // Each function draws from its own stream so adding a function elsewhere
    // does not reshuffle the others.
    const std::uint64_t stream = seed ^ (index * 0x9E3779B97F4A7C15ull);
    meta.functions.push_back(Deriver(f, stream, policy, branches, groups).derive());
  }
  return meta;
}

bool consistent(const CfiFunctionMeta& meta) {
  for (const CfiBlock& b : meta.blocks) {
    CfiState s{b.entry};
    for (std::uint32_t id : b.ids) s = state_update(s, id);
    if (s.value != b.exit) return false;
  }
  for (const CfiEdge& e : meta.edges) {
    const CfiBlock* to = meta.find_block(e.to);
    if (to == nullptr) return false;
    std::uint32_t arrived = 0;
    switch (e.kind) {
      case EdgeKind::Start: arrived = state_update({0}, e.correction).value; break;
      case EdgeKind::Jump:
      case EdgeKind::Branch: {
        const CfiBlock* from = meta.find_block(e.from);
        if (from == nullptr) return false;
        arrived = state_update({from->exit}, e.correction).value;
        break;
      }
      case EdgeKind::Merge: {
        const CfiBlock* from = meta.find_block(e.from);
        if (from == nullptr || !e.symbol) return false;
        arrived = merge_condition({from->exit}, {*e.symbol}, e.correction).value;
        break;
      }
    }
    if (arrived != to->entry) return false;
  }
  return true;
}

}  // namespace anb::cfi
