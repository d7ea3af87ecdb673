#include <doctest.h>

#include <algorithm>
#include <random>

#include "anbranch/errors.hpp"
#include "anbranch/mir.hpp"
#include "anbranch/mir_analysis.hpp"
#include "anbranch/vm.hpp"
#include "corpus.hpp"

using namespace anb;
using namespace anb::mir;
using testing::corpus;

namespace {

vm::ExecResult run(const std::string& text, vm::VmInputs in = {}, vm::FaultPlan faults = {},
                   vm::VmOptions opt = {}) {
  return vm::interpret(parse(text), in, faults, opt);
}

bool has_message(const std::vector<Diagnostic>& ds, Severity s, const std::string& needle) {
  return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) {
    return d.severity == s && d.message.find(needle) != std::string::npos;
  });
}

std::uint32_t loader_hash(const std::vector<std::uint32_t>& image) {
  std::uint32_t h = 0;
  for (std::uint32_t w : image) h = (h * 31 + w) % 65521;
  return h;
}

}  // namespace

TEST_CASE("print and parse round trip") {
  for (const char* name : {"integer_compare.mir", "memcmp128.mir", "loader.mir"}) {
    CAPTURE(name);
    const Program p = corpus(name);
    CHECK(parse(print(p)) == p);
    CHECK(print(parse(print(p))) == print(p));
  }
  const Program all = parse(R"(
func @g protect extra {
block %b0:
  r0 = const 0xFF
  r1 = mov r0
  r2 = add r0, r1
  r3 = sub r2, r1
  r4 = mul r3, r3
  r5 = udiv r4, r1
  r6 = umod r4, r1
  r7 = and r6, r5
  r8 = or r7, r5
  r9 = xor r8, r5
  r10 = load [r9 + 4]
  r11 = load [12]
  store [r9 + 2], r10
  store [7], r11
  r12 = select ge r0, r1, r2, r3
  cfi_update 17
  cfi_merge r12, 5
  cfi_check 9
  switch r12, 1: %b1, 7: %b2, default: %b3
block %b1:
  jmp %b2
block %b2:
  trap 4
block %b3:
  cbr ne r0, r1, %b1, %b2
block %b4.x_y-z:
  ret r0
}
)");
  CHECK(parse(print(all)) == all);
  CHECK(all.functions[0].attrs.size() == 2);
  CHECK(all.functions[0].register_count() == 13);
  CHECK(all.functions[0].blocks[0].instrs[0].imm == 255);
}

TEST_CASE("parse errors carry a position") {
  try {
    parse("func @f {\nblock %a:\n  r0 = frob r1, r2\n}\n");
    FAIL("no error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(e.column() == 8);
  }
  CHECK_THROWS_AS(parse("func @f {\nblock %a:\n  r0 = const 4294967296\n"), ParseError);
  CHECK_THROWS_AS(parse("func @f {\nblock %a:\n  ret r0\n"), ParseError);
  CHECK_THROWS_AS(parse("func f {}"), ParseError);
  CHECK_THROWS_AS(parse("func @f {\nblock %a:\n  cbr foo r0, r1, %a, %a\n}"), ParseError);
  CHECK_THROWS_AS(parse("func @f {\nblock %a:\n  store [r0], 5\n}"), ParseError);
}

TEST_CASE("validation") {
  CHECK(validate(corpus("integer_compare.mir")).empty());
  CHECK_FALSE(has_errors(validate(corpus("memcmp128.mir"))));
  CHECK_FALSE(has_errors(validate(corpus("loader.mir"))));

  auto ds = validate(parse("func @f {\nblock %a:\n  jmp %nowhere\n}\n"));
  CHECK(has_message(ds, Severity::Error, "undeclared"));
  ds = validate(parse("func @f {\nblock %a:\n  ret r0\n  r1 = const 1\n}\n"));
  CHECK(has_errors(ds));
  ds = validate(parse("func @f {\nblock %a:\n  ret r0\nblock %a:\n  ret r0\n}\n"));
  CHECK(has_message(ds, Severity::Error, "duplicate block"));
  ds = validate(parse("func @f {\nblock %a:\n  ret r0\nblock %b:\n  ret r0\n}\n"));
  CHECK(has_message(ds, Severity::Warning, "unreachable"));
  ds = validate(parse("func @f {\nblock %a:\n  cfi_update 3\n  ret r0\n}\n"));
  CHECK(has_message(ds, Severity::Error, "cfi"));
  CHECK_FALSE(has_errors(validate(parse("func @f {\nblock %a:\n  cfi_update 3\n  ret r0\n}\n"), {.allow_cfi = true})));
  ds = validate(parse("func @f {\nblock %a:\n  switch r0, 1: %a, 1: %a, default: %a\n}\n"));
  CHECK(has_message(ds, Severity::Error, "duplicate switch case"));

  // Protected-function warnings.
  ds = validate(parse(R"(
func @f protect {
block %a:
  r1 = const 70000
  r2 = and r0, r1
  cbr lt r2, r1, %b, %c
block %b:
  r3 = load [r2]
  ret r3
block %c:
  ret r0
}
)"));
  CHECK_FALSE(has_errors(ds));
  CHECK(has_message(ds, Severity::Warning, "exceeds 65535"));
  CHECK(has_message(ds, Severity::Warning, "no AN-coded form"));
  CHECK(has_message(ds, Severity::Warning, "decouple"));
  CHECK_THROWS_AS(require_valid(parse("func @f {\nblock %a:\n  jmp %x\n}\n")), ProgramError);
}

TEST_CASE("compare slice") {
  const Program p = corpus("memcmp128.mir");
  const CompareSlice s = compare_slice(p.functions[0]);
  CHECK(s.regs.contains(Reg{1}));
  CHECK(s.regs.contains(Reg{2}));
  CHECK(s.regs.contains(Reg{4}));
  CHECK(s.regs.contains(Reg{5}));
  CHECK(s.regs.contains(Reg{6}));
  CHECK_FALSE(s.regs.contains(Reg{0}));
  CHECK_FALSE(s.regs.contains(Reg{3}));
  CHECK(s.unsupported.empty());
}

TEST_CASE("interpreter arithmetic wraps at 32 bits") {
  const auto r = run(R"(
func @f {
block %a:
  r1 = const 0xFFFFFFFF
  r2 = const 2
  r3 = add r1, r2
  r4 = mul r1, r2
  r5 = sub r3, r4
  r6 = udiv r1, r2
  r7 = umod r1, r2
  r8 = xor r6, r7
  r9 = add r8, r5
  ret r9
}
)");
  CHECK(r.status == vm::HaltStatus::Returned);
  // 1 - 0xFFFFFFFE = 3; (0x7FFFFFFF ^ 1) + 3
  CHECK(r.return_value == (0x7FFFFFFEu + 3u));
  CHECK(r.steps == 10);
  CHECK(r.cycles == 8 + 7 + 7);
}

TEST_CASE("select and switch") {
  const char* text = R"(
func @f {
block %a:
  r1 = const 10
  r2 = const 100
  r3 = const 200
  r4 = select lt r0, r1, r2, r3
  switch r0, 3: %three, 12: %twelve, default: %other
block %three:
  ret r4
block %twelve:
  r5 = add r4, r1
  ret r5
block %other:
  ret r0
}
)";
  CHECK(run(text, {{{0, 3}}, {}}).return_value == 100);
  CHECK(run(text, {{{0, 12}}, {}}).return_value == 210);
  CHECK(run(text, {{{0, 50}}, {}}).return_value == 50);
  const auto r = run(text, {{{0, 12}}, {}});
  REQUIRE(r.branches.size() == 1);
  CHECK(r.branches[0].successor == 1);
}

TEST_CASE("corpus behaviour") {
  CHECK(vm::interpret(corpus("integer_compare.mir"), {{{0, 4711}}, {}}).return_value == 1);
  CHECK(vm::interpret(corpus("integer_compare.mir"), {{{0, 4712}}, {}}).return_value == 0);

  vm::VmInputs same;
  for (std::uint32_t i = 0; i < 128; ++i) same.memory[i] = same.memory[128 + i] = i * 511;
  const auto eq = vm::interpret(corpus("memcmp128.mir"), same);
  CHECK(eq.return_value == 0);
  CHECK(eq.branches.size() == 256);
  vm::VmInputs diff = same;
  diff.memory[128 + 77] ^= 1;
  const auto ne = vm::interpret(corpus("memcmp128.mir"), diff);
  CHECK(ne.return_value == 1);
  CHECK(ne.branches.size() == 2 * 77 + 1);

  std::vector<std::uint32_t> image;
  for (std::uint32_t i = 1; i <= 16; ++i) image.push_back(i);
  CHECK(loader_hash(image) == 11816);
  vm::VmInputs boot;
  for (std::uint32_t i = 0; i < 16; ++i) boot.memory[i] = image[i];
  boot.memory[256] = 11816;
  const auto ok = vm::interpret(corpus("loader.mir"), boot);
  CHECK(ok.return_value == 1);
  boot.memory[256] = 11817;
  const auto rejected = vm::interpret(corpus("loader.mir"), boot);
  CHECK(rejected.return_value == 0);
  CHECK(ok.memory_digest != rejected.memory_digest);

  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    vm::VmInputs in;
    image.clear();
    for (std::uint32_t a = 0; a < 16; ++a) image.push_back(in.memory[a] = rng() & 0xFFFF);
    in.memory[256] = loader_hash(image);
    CHECK(vm::interpret(corpus("loader.mir"), in).return_value == 1);
  }
}

TEST_CASE("traps") {
  const auto div0 = run("func @f {\nblock %a:\n  r1 = const 0\n  r2 = udiv r0, r1\n  ret r2\n}\n");
  CHECK(div0.status == vm::HaltStatus::Trapped);
  CHECK(div0.trap == vm::TrapKind::DivByZero);
  const auto mem = run("func @f {\nblock %a:\n  r1 = load [5000]\n  ret r1\n}\n");
  CHECK(mem.trap == vm::TrapKind::BadMemory);
  vm::VmOptions short_fuel;
  short_fuel.fuel = 100;
  const auto loop = run("func @f {\nblock %a:\n  jmp %a\n}\n", {}, {}, short_fuel);
  CHECK(loop.trap == vm::TrapKind::Fuel);
  CHECK(loop.steps == 100);
  const auto explicit_trap = run("func @f {\nblock %a:\n  trap 9\n}\n");
  CHECK(explicit_trap.trap == vm::TrapKind::Explicit);
  CHECK(explicit_trap.trap_code == 9);
  const auto check = run("func @f {\nblock %a:\n  cfi_update 5\n  cfi_check 6\n  ret r0\n}\n");
  CHECK(check.trap == vm::TrapKind::CfiViolation);
  CHECK(check.trap_code == 5);
  CHECK_THROWS_AS(vm::interpret(parse("func @f {\nblock %a:\n  ret r0\n}\n"), {{}, {{99999, 1}}}),
                  std::out_of_range);
  CHECK_THROWS_AS(vm::Executable(parse("func @f {\nblock %a:\n  ret r0\n}\n"), "g"), ProgramError);
}

TEST_CASE("fault injection primitives") {
  const char* text = R"(
func @f {
block %a:
  r1 = const 1
  r2 = const 2
  cbr lt r1, r2, %t, %e
block %t:
  ret r1
block %e:
  ret r2
}
)";
  CHECK(run(text).return_value == 1);
  CHECK(run(text, {}, {vm::RegFlip{Reg{1}, 0x4, 1}}).return_value == 2);
  CHECK(run(text, {}, {vm::BranchForce{2, 1}}).return_value == 2);
  CHECK(run(text, {}, {vm::InstrSkip{1}}).return_value == 0);
  // Skipping the cbr falls through to the next block in layout order.
  CHECK(run(text, {}, {vm::InstrSkip{2}}).return_value == 1);
  const auto skipped = run(text, {}, {vm::InstrSkip{0}});
  CHECK(skipped.return_value == 0);
  CHECK_FALSE(skipped.trace[0].executed);
  CHECK(vm::describe(vm::RegFlip{Reg{3}, 5, 7}) == "regflip@7:r3^5");
  CHECK(vm::describe(vm::BranchForce{4, 1}) == "branchforce@4=1");
  CHECK(vm::step_of(vm::InstrSkip{11}) == 11);
}

TEST_CASE("AN probes trap on invalid operands") {
  const char* text = "func @f {\nblock %a:\n  r1 = const 127754\n  ret r1\n}\n";
  vm::VmOptions opt;
  opt.probes.push_back({{0, 1}, {Reg{1}}});
  CHECK(run(text, {}, {}, opt).status == vm::HaltStatus::Returned);
  const auto bad = run(text, {}, {vm::RegFlip{Reg{1}, 1, 1}}, opt);
  CHECK(bad.trap == vm::TrapKind::AnIntegrity);
}

TEST_CASE("cost model") {
  CHECK(vm::cost_model(Opcode::UDiv) == 7);
  CHECK(vm::cost_model(Opcode::UMod) == 7);
  CHECK(vm::cost_model(Opcode::Load) == 2);
  CHECK(vm::cost_model(Opcode::CfiCheck) == 2);
  CHECK(vm::cost_model(Opcode::Add) == 1);
  CHECK(vm::cost_model(Opcode::Cbr) == 1);
}
