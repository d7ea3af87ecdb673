#include <charconv>
#include <stdexcept>

#include "anbranch/instrument.hpp"

namespace anb::inst {

PipelineConfig parse_pipeline(std::string_view text) {
  PipelineConfig c;
  if (text == "none") {
    c.kind = PipelineKind::None;
  } else if (text == "cfi") {
    c.kind = PipelineKind::Cfi;
  } else if (text == "an") {
    c.kind = PipelineKind::An;
  } else if (text == "an+cfi") {
    c.kind = PipelineKind::AnCfi;
  } else if (text.starts_with("dup:")) {
    const std::string_view k = text.substr(4);
    int value = 0;
    auto [end, ec] = std::from_chars(k.data(), k.data() + k.size(), value);
    if (ec != std::errc{} || end != k.data() + k.size() || value < 1) {
      throw std::invalid_argument("bad duplication factor in '" + std::string(text) + "'");
    }
    c.kind = PipelineKind::Duplicate;
    c.dup_k = value;
  } else {
    throw std::invalid_argument("unknown pipeline '" + std::string(text) + "'");
  }
  return c;
}

std::string pipeline_name(const PipelineConfig& c) {
  switch (c.kind) {
    case PipelineKind::None: return "none";
    case PipelineKind::Cfi: return "cfi";
    case PipelineKind::An: return "an";
    case PipelineKind::AnCfi: return "an+cfi";
    case PipelineKind::Duplicate: return "dup:" + std::to_string(c.dup_k);
  }
  return "?";
}

CompiledProgram compile(const mir::Program& source, const PipelineConfig& config) {
  mir::require_valid(source, {.allow_cfi = false, .n_max = config.an.params.n_max()});

  CompiledProgram out;
  out.source = source;
  out.config = config;
  const mir::Program lowered = lower_select_switch(source);
  for (const mir::Function& f : lowered.functions) {
    if (!f.is_protected()) continue;
    for (const mir::Block& b : f.blocks) {
      if (b.terminator().op == mir::Opcode::Cbr) out.decision_blocks.emplace_back(f.name, b.label);
    }
  }

  switch (config.kind) {
    case PipelineKind::None: out.program = lowered; break;
    case PipelineKind::Cfi: {
      CfiResult r = cfi_pass(lowered, config.seed, config.checks);
      out.program = std::move(r.program);
      out.cfi = std::move(r.meta);
      break;
    }
    case PipelineKind::An: {
      AnCodeResult r = an_code_pass(lowered, config.an);
      out.program = std::move(r.program);
      out.an = std::move(r.report);
      break;
    }
    case PipelineKind::AnCfi: {
      AnCodeResult an = an_code_pass(lowered, config.an);
      for (const EncodedSite& s : an.report.sites) {
        out.protected_branches.push_back({s.function, s.block, s.cond, s.edge_symbols});
      }
      CfiResult r = cfi_pass(an.program, config.seed, config.checks, out.protected_branches,
                             an.report.groups);
      out.program = std::move(r.program);
      out.cfi = std::move(r.meta);
      out.an = std::move(an.report);
      break;
    }
    case PipelineKind::Duplicate: {
      CfiResult r = cfi_pass(duplicate_branches(lowered, config.dup_k), config.seed, config.checks);
      out.program = std::move(r.program);
      out.cfi = std::move(r.meta);
      break;
    }
  }
  out.costs = count_costs(out.program);
  return out;
}

}  // namespace anb::inst
