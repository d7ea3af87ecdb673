#include <cstdio>
#include <sstream>

#include "anbranch/mir.hpp"

namespace anb::mir {

namespace {

std::string reg(Reg r) { return "r" + std::to_string(r.id); }

std::string hex(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%x", v);
  return buf;
}

std::string address(const Instr& i) {
  if (!i.has_base) return "[" + std::to_string(i.imm) + "]";
  if (i.imm == 0) return "[" + reg(i.src[0]) + "]";
  return "[" + reg(i.src[0]) + " + " + std::to_string(i.imm) + "]";
}

}  // namespace

std::string print(const Instr& i) {
  const std::string op(to_string(i.op));
  const std::string p(to_string(i.pred));
  switch (i.op) {
    case Opcode::Const: return reg(i.dst) + " = const " + std::to_string(i.imm);
    case Opcode::Mov: return reg(i.dst) + " = mov " + reg(i.src[0]);
    case Opcode::Load: return reg(i.dst) + " = load " + address(i);
    case Opcode::Store: return "store " + address(i) + ", " + reg(i.src[1]);
    case Opcode::Select:
      return reg(i.dst) + " = select " + p + " " + reg(i.src[0]) + ", " + reg(i.src[1]) + ", " +
             reg(i.src[2]) + ", " + reg(i.src[3]);
    case Opcode::Cbr:
      return "cbr " + p + " " + reg(i.src[0]) + ", " + reg(i.src[1]) + ", %" + i.targets[0] +
             ", %" + i.targets[1];
    case Opcode::Switch: {
      std::string s = "switch " + reg(i.src[0]);
      for (std::size_t c = 0; c < i.cases.size(); ++c) {
        s += ", " + std::to_string(i.cases[c]) + ":%" + i.targets[c];
      }
      return s + ", default:%" + i.targets.back();
    }
    case Opcode::Jmp: return "jmp %" + i.targets[0];
    case Opcode::Ret: return "ret " + reg(i.src[0]);
    case Opcode::Trap: return "trap " + std::to_string(i.imm);
    case Opcode::CfiUpdate: return "cfi_update " + hex(i.imm);
    case Opcode::CfiMerge: return "cfi_merge " + reg(i.src[0]) + ", " + hex(i.imm);
    case Opcode::CfiCheck: return "cfi_check " + hex(i.imm);
    default: return reg(i.dst) + " = " + op + " " + reg(i.src[0]) + ", " + reg(i.src[1]);
  }
}

std::string print(const Function& f) {
  std::ostringstream out;
  out << "func @" << f.name;
  for (const std::string& a : f.attrs) out << ' ' << a;
  out << " {\n";
  for (const Block& b : f.blocks) {
    out << "block %" << b.label << ":\n";
    for (const Instr& i : b.instrs) out << "  " << print(i) << '\n';
  }
  out << "}\n";
  return out.str();
}

std::string print(const Program& program) {
  std::string out;
  for (std::size_t i = 0; i < program.functions.size(); ++i) {
    if (i != 0) out += '\n';
    out += print(program.functions[i]);
  }
  return out;
}

}  // namespace anb::mir
