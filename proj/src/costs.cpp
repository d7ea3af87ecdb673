#include "anbranch/instrument.hpp"

namespace anb::inst {

using mir::Opcode;

std::map<std::string, int> opcode_mix(const std::vector<mir::Instr>& instrs) {
  std::map<std::string, int> mix;
  for (std::size_t i = 0; i < instrs.size(); ++i) {
    const mir::Instr& in = instrs[i];
    if (in.op == Opcode::Mul && i + 1 < instrs.size()) {
      const mir::Instr& next = instrs[i + 1];
      if (next.op == Opcode::Sub && next.src[1] == in.dst && next.src[0] != in.dst) {
        ++mix["mls"];
        ++i;
        continue;
      }
    }
    ++mix[std::string(mir::to_string(in.op))];
  }
  return mix;
}

CostReport count_costs(const mir::Program& program, const std::optional<vm::VmInputs>& inputs,
                       std::string_view function) {
  CostReport r;
  for (const mir::Function& f : program.functions) {
    for (const mir::Block& b : f.blocks) {
      for (const mir::Instr& in : b.instrs) {
        ++r.opcodes[std::string(mir::to_string(in.op))];
        ++r.instructions;
      }
    }
  }
  r.bytes = 4 * r.instructions;
  if (inputs && !program.functions.empty()) {
    vm::VmOptions opt;
    opt.record_trace = false;
    const vm::ExecResult run = vm::interpret(vm::Executable(program, function), *inputs, {}, opt);
    r.cycles = run.cycles;
    r.steps = run.steps;
  }
  return r;
}

}  // namespace anb::inst
