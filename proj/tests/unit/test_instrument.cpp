#include <doctest.h>

#include <algorithm>
#include <random>

#include "anbranch/errors.hpp"
#include "anbranch/instrument.hpp"
#include "anbranch/vm.hpp"
#include "corpus.hpp"

using namespace anb;
using namespace anb::inst;
using mir::Opcode;
using testing::corpus;

namespace {

constexpr const char* kSelectSwitch = R"(
func @f protect {
block %a:
  r2 = const 10
  r3 = const 100
  r4 = const 200
  r5 = select lt r0, r2, r3, r4
  r6 = select eq r1, r2, r5, r0
  switch r1, 3: %three, 10: %ten, 7: %seven, default: %other
block %three:
  r7 = add r6, r5
  ret r7
block %ten:
  ret r6
block %seven:
  switch r0, default: %other
block %other:
  cbr ge r6, r1, %three, %ten
}
)";

int count(const mir::Program& p, Opcode op) {
  int n = 0;
  for (const auto& f : p.functions) {
    for (const auto& b : f.blocks) {
      n += static_cast<int>(std::count_if(b.instrs.begin(), b.instrs.end(),
                                          [&](const mir::Instr& i) { return i.op == op; }));
    }
  }
  return n;
}

std::uint32_t ret_of(const mir::Program& p, vm::VmInputs in) {
  const vm::ExecResult r = vm::interpret(p, in);
  REQUIRE(r.status == vm::HaltStatus::Returned);
  return r.return_value;
}

vm::VmInputs random_inputs(const std::string& name, std::mt19937& rng) {
  vm::VmInputs in;
  std::uniform_int_distribution<std::uint32_t> v(0, 65535);
  if (name == "integer_compare.mir") {
    in.registers[0] = (rng() % 4 == 0) ? 4711 : v(rng);
  } else if (name == "memcmp128.mir") {
    for (std::uint32_t i = 0; i < 128; ++i) in.memory[i] = in.memory[128 + i] = v(rng);
    if (rng() % 2) in.memory[128 + rng() % 128] ^= 1 + rng() % 255;
  } else {
    std::uint32_t h = 0;
    for (std::uint32_t i = 0; i < 16; ++i) {
      in.memory[i] = v(rng);
      h = (h * 31 + in.memory[i]) % 65521;
    }
    in.memory[256] = rng() % 2 ? h : v(rng);
  }
  return in;
}

}  // namespace

TEST_CASE("lowering removes select and switch without changing results") {
  const mir::Program src = mir::parse(kSelectSwitch);
  const mir::Program low = lower_select_switch(src);
  CHECK(count(low, Opcode::Select) == 0);
  CHECK(count(low, Opcode::Switch) == 0);
  CHECK_FALSE(mir::has_errors(mir::validate(low)));
  for (std::uint32_t x : {0u, 5u, 9u, 10u, 11u, 500u}) {
    for (std::uint32_t y : {0u, 3u, 7u, 10u, 12u}) {
      CAPTURE(x);
      CAPTURE(y);
      CHECK(ret_of(low, {{{0, x}, {1, y}}, {}}) == ret_of(src, {{{0, x}, {1, y}}, {}}));
    }
  }
}

TEST_CASE("AN coding keeps results and emits one encoded compare per branch") {
  for (const char* name : {"integer_compare.mir", "memcmp128.mir", "loader.mir"}) {
    CAPTURE(name);
    const mir::Program src = corpus(name);
    const AnCodeResult an = an_code_pass(src);
    CHECK(an.report.sites.size() == static_cast<std::size_t>(count(src, Opcode::Cbr)));
    CHECK(count(an.program, Opcode::UMod) >= count(src, Opcode::Cbr));
    std::mt19937 rng(11);
    for (int i = 0; i < 30; ++i) {
      const vm::VmInputs in = random_inputs(name, rng);
      CHECK(ret_of(an.program, in) == ret_of(src, in));
    }
  }
}

TEST_CASE("encoded compare site details") {
  const AnCodeResult an = an_code_pass(corpus("integer_compare.mir"));
  REQUIRE(an.report.sites.size() == 1);
  const EncodedSite& s = an.report.sites[0];
  CHECK(s.pred == Predicate::EQ);
  CHECK(s.branch_symbol == 29982);
  CHECK(s.edge_symbols == std::array<std::uint32_t, 2>{29982, 35552});
  CHECK(s.mix == std::map<std::string, int>{{"add", 3}, {"sub", 2}, {"umod", 2}});
  // The input is encoded at function entry and reported.
  REQUIRE(an.report.windows.size() == 1);
  CHECK(an.report.windows[0].source == "input");
  CHECK(an.report.windows[0].reg == mir::Reg{0});
  // The constant is folded to its code word.
  bool saw = false;
  for (const auto& in : an.program.functions[0].blocks[0].instrs) saw |= in.op == Opcode::Const && in.imm == 4711u * 63877u;
  CHECK(saw);
}

TEST_CASE("mls mode instruction mix") {
  AnCoderOptions o;
  o.mod = ModMode::Mls;
  const mir::Program lt = mir::parse(
      "func @f protect {\nblock %a:\n  cbr lt r0, r1, %b, %c\nblock %b:\n  ret r0\nblock %c:\n  ret r1\n}\n");
  const AnCodeResult ord = an_code_pass(lt, o);
  CHECK(ord.report.sites[0].mix == std::map<std::string, int>{{"add", 1}, {"sub", 1}, {"udiv", 1}, {"mls", 1}});
  const AnCodeResult eq = an_code_pass(corpus("integer_compare.mir"), o);
  CHECK(eq.report.sites[0].mix == std::map<std::string, int>{{"add", 3}, {"sub", 2}, {"udiv", 2}, {"mls", 2}});
  CHECK(count(eq.program, Opcode::UMod) == 0);
  for (std::uint32_t x : {0u, 4711u, 65535u}) CHECK(ret_of(eq.program, {{{0, x}}, {}}) == (x == 4711 ? 1u : 0u));
  for (std::uint32_t x : {0u, 7u, 9u}) CHECK(ret_of(ord.program, {{{0, x}, {1, 7}}, {}}) == std::min(x, 7u));
  CHECK(opcode_mix({mir::Instr::binary(Opcode::Mul, mir::Reg{1}, mir::Reg{2}, mir::Reg{3}),
                    mir::Instr::binary(Opcode::Sub, mir::Reg{4}, mir::Reg{5}, mir::Reg{6})}) ==
        std::map<std::string, int>{{"mul", 1}, {"sub", 1}});
}

TEST_CASE("branching on the false symbol") {
  AnCoderOptions o;
  o.compare_true_symbol = false;
  const AnCodeResult an = an_code_pass(corpus("integer_compare.mir"), o);
  CHECK(an.report.sites[0].branch_symbol == 35552);
  CHECK(an.report.sites[0].edge_symbols == std::array<std::uint32_t, 2>{35552, 29982});
  CHECK(ret_of(an.program, {{{0, 4711}}, {}}) == 1);
  CHECK(ret_of(an.program, {{{0, 1}}, {}}) == 0);
}

TEST_CASE("unsupported operations") {
  const mir::Program p = mir::parse(R"(
func @f protect {
block %a:
  r2 = const 255
  r3 = and r0, r2
  cbr eq r3, r1, %b, %c
block %b:
  ret r3
block %c:
  ret r1
}
)");
  CHECK_THROWS_AS(an_code_pass(p), ProgramError);
  AnCoderOptions o;
  o.boundary_on_unsupported = true;
  const AnCodeResult an = an_code_pass(p, o);
  CHECK(std::any_of(an.report.windows.begin(), an.report.windows.end(),
                    [](const UnprotectedWindow& w) { return w.source == "and"; }));
  CHECK(ret_of(an.program, {{{0, 0x1234}, {1, 0x34}}, {}}) == 0x34);
  CHECK(ret_of(an.program, {{{0, 0x1234}, {1, 0x35}}, {}}) == 0x35);
  CHECK_THROWS_AS(an_code_pass(mir::parse(kSelectSwitch)), ProgramError);
  CHECK_THROWS_AS(an_code_pass(mir::parse("func @f protect {\nblock %a:\n  r1 = const 70000\n  cbr eq r0, r1, "
                                          "%b, %b2\nblock %b:\n  ret r0\nblock %b2:\n  ret r1\n}\n")),
                  ProgramError);
}

TEST_CASE("shadowed registers keep their plain value") {
  const AnCodeResult an = an_code_pass(corpus("loader.mir"));
  // h feeds both the final compare and the next hash round.
  const auto& ws = an.report.windows;
  CHECK(std::any_of(ws.begin(), ws.end(), [](const UnprotectedWindow& w) { return w.source == "umod"; }));
  CHECK(std::any_of(ws.begin(), ws.end(), [](const UnprotectedWindow& w) { return w.source == "load"; }));
}

TEST_CASE("edge splitting") {
  const mir::Function f = mir::parse(R"(
func @f {
block %a:
  cbr lt r0, r1, %a, %b
block %b:
  cbr eq r0, r1, %c, %c
block %c:
  ret r0
}
)").functions[0];
  const mir::Function s = split_edges(f);
  const mir::Cfg cfg = mir::Cfg::build(s);
  CHECK(cfg.pred[0].empty());
  for (std::size_t b = 0; b < s.blocks.size(); ++b) {
    if (cfg.succ[b].size() < 2) continue;
    for (std::size_t t : cfg.succ[b]) CHECK(cfg.pred[t].size() == 1);
  }
  for (std::uint32_t x : {0u, 5u, 9u}) {
    const vm::VmInputs in{{{0, x}, {1, 5}}, {}};
    vm::VmOptions opt;
    opt.fuel = 1000;
    const auto a = vm::interpret(mir::Program{{f}}, in, {}, opt);
    const auto b = vm::interpret(mir::Program{{s}}, in, {}, opt);
    CHECK(a.status == b.status);
    CHECK(a.return_value == b.return_value);
  }
}

TEST_CASE("duplication") {
  const mir::Program src = corpus("integer_compare.mir");
  const mir::Program d = duplicate_branches(src, 6);
  CHECK(count(d, Opcode::Cbr) == 1 + 2 * 5);
  CHECK(count(d, Opcode::Trap) == 1);
  CHECK(duplicate_branches(src, 1) == src);
  CHECK_THROWS_AS(duplicate_branches(src, 0), std::invalid_argument);
  for (std::uint32_t x : {0u, 4711u}) {
    const vm::ExecResult r = vm::interpret(d, {{{0, x}}, {}});
    CHECK(r.return_value == (x == 4711 ? 1u : 0u));
    // Six consecutive conditional branches on every path.
    CHECK(r.branches.size() == 6);
  }
  // Forcing only the first copy lands in the trap.
  const vm::ExecResult once = vm::interpret(d, {{{0, 4711}}, {}}, {vm::BranchForce{1, 1}});
  CHECK(once.trap == vm::TrapKind::Explicit);
  CHECK(once.trap_code == kDuplicateTrapCode);
}

TEST_CASE("pipeline parsing") {
  CHECK(parse_pipeline("an+cfi").kind == PipelineKind::AnCfi);
  CHECK(parse_pipeline("cfi").kind == PipelineKind::Cfi);
  CHECK(parse_pipeline("an").kind == PipelineKind::An);
  CHECK(parse_pipeline("none").kind == PipelineKind::None);
  CHECK(parse_pipeline("dup:6").kind == PipelineKind::Duplicate);
  CHECK(parse_pipeline("dup:3").dup_k == 3);
  CHECK(pipeline_name(parse_pipeline("dup:4")) == "dup:4");
  CHECK(pipeline_name(parse_pipeline("an+cfi")) == "an+cfi");
  CHECK_THROWS_AS(parse_pipeline("dup:0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_pipeline("dup:x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_pipeline("cfi+an"), std::invalid_argument);
}

TEST_CASE("every pipeline is transparent and signature-clean") {
  for (const char* name : {"integer_compare.mir", "memcmp128.mir", "loader.mir"}) {
    const mir::Program src = corpus(name);
    for (const char* pipe : {"none", "cfi", "an", "an+cfi", "dup:6"}) {
      for (auto checks : {cfi::CheckPolicy::EveryBlock, cfi::CheckPolicy::FunctionExit}) {
        for (auto mod : {ModMode::Umod, ModMode::Mls}) {
          CAPTURE(name);
          CAPTURE(pipe);
          PipelineConfig cfg = parse_pipeline(pipe);
          cfg.checks = checks;
          cfg.an.mod = mod;
          const CompiledProgram c = compile(src, cfg);
          if (c.cfi) {
            for (const auto& f : c.cfi->functions) CHECK(cfi::consistent(f));
          }
          std::mt19937 rng(5);
          for (int i = 0; i < 10; ++i) {
            const vm::VmInputs in = random_inputs(name, rng);
            const vm::ExecResult a = vm::interpret(src, in);
            const vm::ExecResult b = vm::interpret(c.program, in);
            REQUIRE(b.status == vm::HaltStatus::Returned);
            CHECK(a.return_value == b.return_value);
            CHECK(a.memory_digest == b.memory_digest);
          }
        }
      }
    }
  }
}

TEST_CASE("compiled structure per pipeline") {
  const mir::Program src = corpus("integer_compare.mir");
  const CompiledProgram none = compile(src, parse_pipeline("none"));
  CHECK_FALSE(none.cfi);
  CHECK(none.program == lower_select_switch(src));
  const CompiledProgram c = compile(src, parse_pipeline("cfi"));
  CHECK(c.cfi);
  CHECK_FALSE(c.an);
  CHECK(count(c.program, Opcode::UMod) == 0);
  CHECK(count(c.program, Opcode::CfiMerge) == 0);
  const CompiledProgram ac = compile(src, parse_pipeline("an+cfi"));
  REQUIRE(ac.an);
  CHECK(ac.protected_branches.size() == 1);
  CHECK(count(ac.program, Opcode::CfiMerge) == 2);
  CHECK(ac.decision_blocks == std::vector<std::pair<std::string, std::string>>{{"integer_compare", "entry"}});
  int total = 0;
  for (const auto& b : ac.program.functions[0].blocks) total += static_cast<int>(b.instrs.size());
  CHECK(ac.costs.instructions == total);
  CHECK(ac.costs.bytes == 4 * ac.costs.instructions);
  const CompiledProgram d = compile(src, parse_pipeline("dup:6"));
  CHECK(count(d.program, Opcode::Cbr) == 11);
  CHECK(d.cfi);

  const CostReport withrun = count_costs(ac.program, vm::VmInputs{{{0, 4711}}, {}});
  REQUIRE(withrun.cycles);
  CHECK(*withrun.cycles == vm::interpret(ac.program, {{{0, 4711}}, {}}).cycles);
}

TEST_CASE("forcing a protected branch trips the signature check") {
  for (const char* name : {"integer_compare.mir", "memcmp128.mir"}) {
    const CompiledProgram c = compile(corpus(name), parse_pipeline("an+cfi"));
    std::mt19937 rng(2);
    const vm::VmInputs in = random_inputs(name, rng);
    const vm::ExecResult ref = vm::interpret(c.program, in);
    REQUIRE(!ref.branches.empty());
    for (const vm::BranchEvent& e : ref.branches) {
      const vm::ExecResult r = vm::interpret(c.program, in, {vm::BranchForce{e.step, 1 - e.successor}});
      CHECK(r.trap == vm::TrapKind::CfiViolation);
    }
  }
}

TEST_CASE("probes catch a corrupted encoded operand") {
  const CompiledProgram c = compile(corpus("integer_compare.mir"), parse_pipeline("an+cfi"));
  const auto probes = an_probes(c.program, *c.an);
  REQUIRE(probes.size() == 1);
  vm::VmOptions opt;
  opt.probes = probes;
  const vm::VmInputs in{{{0, 4711}}, {}};
  CHECK(vm::interpret(c.program, in, {}, opt).status == vm::HaltStatus::Returned);
  const vm::ExecResult ref = vm::interpret(c.program, in, {}, opt);
  std::uint64_t at = 0;
  while (ref.trace[at].at != probes[0].at) ++at;
  const vm::ExecResult r = vm::interpret(c.program, in, {vm::RegFlip{c.an->sites[0].x, 1u << 7, at}}, opt);
  CHECK(r.trap == vm::TrapKind::AnIntegrity);
}
