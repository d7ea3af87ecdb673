#include <doctest.h>

#include "anbranch/cfi.hpp"
#include "anbranch/errors.hpp"
#include "anbranch/instrument.hpp"
#include "anbranch/vm.hpp"

using namespace anb;
using namespace anb::cfi;

namespace {

// Edge-split diamond with a protected branch in %entry.
constexpr const char* kDiamond = R"(
func @f protect {
block %entry:
  r1 = const 3
  cbr lt r0, r1, %t, %e
block %t:
  r2 = const 1
  jmp %join
block %e:
  r2 = const 2
  jmp %join
block %join:
  ret r2
}
)";

}  // namespace

TEST_CASE("primitives") {
  CHECK(state_update({0x80000001u}, 0).value == 0x00000003u);
  CHECK(state_update({0}, 0x1234).value == 0x1234u);
  CHECK(state_update({1}, 1).value == 3u);
  CHECK(merge_condition({0xF0F0F0F0u}, {35552}, 0x0F0F0F0Fu).value == (0xFFFFFFFFu ^ 35552u));
  CHECK(check({42}, 42) == CheckResult::Ok);
  CHECK(check({42}, 43) == CheckResult::Violation);
}

TEST_CASE("derived metadata is consistent") {
  const mir::Program p = mir::parse(kDiamond);
  const ProtectedBranch pb{"f", "entry", mir::Reg{9}, {35552, 29982}};
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    const CfiMeta m = derive_meta(p, seed, CheckPolicy::EveryBlock, std::span(&pb, 1));
    REQUIRE(m.functions.size() == 1);
    const CfiFunctionMeta& f = m.functions[0];
    CHECK(consistent(f));
    CHECK(f.blocks.size() == 4);
    CHECK(f.edges.size() == 5);
    CHECK(f.edges[0].kind == EdgeKind::Start);
    int merges = 0;
    for (const CfiEdge& e : f.edges) {
      if (e.kind == EdgeKind::Merge) {
        ++merges;
        CHECK(e.from == "entry");
        CHECK(*e.symbol == pb.edge_symbols[e.successor]);
      }
    }
    CHECK(merges == 2);
    for (std::size_t b = 0; b < f.blocks.size(); ++b) {
      CHECK(f.blocks[b].checked);
      CHECK(f.blocks[b].ids.size() == p.functions[0].blocks[b].instrs.size());
    }
    CfiFunctionMeta broken = f;
    broken.blocks[2].ids[0] ^= 1;
    CHECK_FALSE(consistent(broken));
    broken = f;
    broken.edges[1].correction ^= 0x100;
    CHECK_FALSE(consistent(broken));
  }
}

TEST_CASE("seeds are reproducible and independent") {
  const mir::Program p = mir::parse(kDiamond);
  CHECK(derive_meta(p, 5) == derive_meta(p, 5));
  CHECK_FALSE(derive_meta(p, 5) == derive_meta(p, 6));
}

TEST_CASE("exit policy checks only returning blocks") {
  const CfiMeta m = derive_meta(mir::parse(kDiamond), 1, CheckPolicy::FunctionExit);
  for (const CfiBlock& b : m.functions[0].blocks) CHECK(b.checked == (b.label == "join"));
}

TEST_CASE("instruction groups") {
  const mir::Program p = mir::parse(kDiamond);
  GroupMap groups;
  groups["f"]["entry"] = {0, 0};
  const CfiMeta m = derive_meta(p, 1, CheckPolicy::EveryBlock, {}, groups);
  CHECK(m.functions[0].blocks[0].ids.size() == 1);
  CHECK(m.functions[0].blocks[1].ids.size() == 2);
  CHECK(consistent(m.functions[0]));
  CHECK(groups_of(groups, p.functions[0], p.functions[0].blocks[1]) == std::vector<std::uint32_t>{0, 1});

  groups["f"]["entry"] = {0, 2};
  CHECK_THROWS_AS(derive_meta(p, 1, CheckPolicy::EveryBlock, {}, groups), ProgramError);
  groups["f"]["entry"] = {1, 1};
  CHECK_THROWS_AS(derive_meta(p, 1, CheckPolicy::EveryBlock, {}, groups), ProgramError);
  groups["f"]["entry"] = {0};
  CHECK_THROWS_AS(derive_meta(p, 1, CheckPolicy::EveryBlock, {}, groups), ProgramError);
}

TEST_CASE("derivation rejects programs it cannot sign") {
  // %join is reached from a cbr and a jmp: the cbr edge is not split.
  const mir::Program unsplit = mir::parse(R"(
func @f protect {
block %entry:
  r1 = const 3
  cbr lt r0, r1, %join, %e
block %e:
  jmp %join
block %join:
  ret r1
}
)");
  CHECK_THROWS_AS(derive_meta(unsplit, 1), ProgramError);
  CHECK_NOTHROW(derive_meta(mir::Program{{inst::split_edges(unsplit.functions[0])}}, 1));

  const mir::Program signed_twice = mir::parse("func @f protect {\nblock %a:\n  cfi_update 1\n  ret r0\n}\n");
  CHECK_THROWS_AS(derive_meta(signed_twice, 1), ProgramError);

  const mir::Program unprotected = mir::parse("func @f {\nblock %a:\n  ret r0\n}\n");
  CHECK(derive_meta(unprotected, 1).functions.empty());
}

TEST_CASE("signed program runs clean") {
  const auto r = inst::cfi_pass(mir::parse(kDiamond), 3);
  CHECK(consistent(r.meta.functions[0]));
  for (std::uint32_t in : {0u, 2u, 3u, 10u}) {
    const vm::ExecResult ok = vm::interpret(r.program, {{{0, in}}, {}});
    CHECK(ok.status == vm::HaltStatus::Returned);
    CHECK(ok.return_value == (in < 3 ? 1u : 2u));
    // The final state is the exit signature of the returning block.
    CHECK(ok.cfi_state == r.meta.functions[0].find_block("join")->exit);

    // Without a condition merge either successor is a legal edge.
    const vm::ExecResult other = vm::interpret(
        r.program, {{{0, in}}, {}}, {vm::BranchForce{ok.branches[0].step, 1 - ok.branches[0].successor}});
    CHECK(other.status == vm::HaltStatus::Returned);
    CHECK(other.return_value == (in < 3 ? 2u : 1u));
    // Skipping a signature update is caught at the block's check.
    std::uint64_t at = 0;
    while (r.program.functions[0].blocks[ok.trace[at].at.block].instrs[ok.trace[at].at.index].op !=
           mir::Opcode::CfiUpdate) {
      ++at;
    }
    const vm::ExecResult skipped = vm::interpret(r.program, {{{0, in}}, {}}, {vm::InstrSkip{at}});
    CHECK(skipped.trap == vm::TrapKind::CfiViolation);
  }
}

TEST_CASE("condition merges reject the wrong edge") {
  const mir::Program p = mir::parse(kDiamond);
  // r9 plays the condition register: 35552 on the taken edge, 29982 otherwise.
  const ProtectedBranch pb{"f", "entry", mir::Reg{9}, {35552, 29982}};
  const auto r = inst::cfi_pass(p, 3, CheckPolicy::EveryBlock, {pb});
  for (std::uint32_t in : {0u, 10u}) {
    const vm::VmInputs inputs{{{0, in}, {9, in < 3 ? 35552u : 29982u}}, {}};
    const vm::ExecResult ok = vm::interpret(r.program, inputs);
    CHECK(ok.status == vm::HaltStatus::Returned);
    const vm::ExecResult bad =
        vm::interpret(r.program, inputs, {vm::BranchForce{ok.branches[0].step, 1 - ok.branches[0].successor}});
    CHECK(bad.trap == vm::TrapKind::CfiViolation);
  }
}
