// anbranch: encode/check words, compare, compile, run and attack mini-IR
// programs.
//
// Exit codes: 0 ok, 1 compile or validation failure, 2 integrity failure or
// detected fault, 3 usage error.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "anbranch/ancode.hpp"
#include "anbranch/container.hpp"
#include "anbranch/enccmp.hpp"
#include "anbranch/errors.hpp"
#include "anbranch/faultsim.hpp"
#include "anbranch/instrument.hpp"
#include "anbranch/mir.hpp"
#include "anbranch/vm.hpp"

namespace {

using namespace anb;
using io::json;

constexpr int kOk = 0;
constexpr int kCompileError = 1;
constexpr int kIntegrity = 2;
constexpr int kUsage = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParamFlags {
  std::uint32_t a = ANParams::kDefaultA;
  std::uint32_t c_eq = ANParams::kDefaultCEq;
  std::uint32_t c_ord = ANParams::kDefaultCOrd;
  std::uint32_t n_max = ANParams::kDefaultNMax;

  void add(CLI::App* app) {
    app->add_option("--a", a, "encoding constant A")->capture_default_str();
    app->add_option("--c-eq", c_eq, "additive constant for eq/ne")->capture_default_str();
    app->add_option("--c-ord", c_ord, "additive constant for lt/le/gt/ge")->capture_default_str();
    app->add_option("--n-max", n_max, "largest functional value")->capture_default_str();
  }
  ANParams get() const { return ANParams(a, c_eq, c_ord, n_max); }
};

std::uint32_t parse_u32(const std::string& s) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &used, 0);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
  if (used != s.size() || v > 0xFFFFFFFFull) throw UsageError("not a 32-bit number: '" + s + "'");
  return static_cast<std::uint32_t>(v);
}

std::uint64_t parse_u64(const std::string& s) {
  std::size_t used = 0;
  try {
    const auto v = std::stoull(s, &used, 0);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("not a number: '" + s + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

// rN=V or @ADDR=v1,v2,...
vm::VmInputs parse_inputs(const std::vector<std::string>& specs) {
  vm::VmInputs in;
  for (const std::string& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("bad input '" + s + "'");
    const std::string lhs = s.substr(0, eq);
    const std::string rhs = s.substr(eq + 1);
    if (lhs[0] == 'r') {
      in.registers[parse_u32(lhs.substr(1))] = parse_u32(rhs);
    } else if (lhs[0] == '@') {
      std::uint32_t addr = parse_u32(lhs.substr(1));
      std::stringstream ss(rhs);
      std::string item;
      while (std::getline(ss, item, ',')) in.memory[addr++] = parse_u32(item);
    } else {
      throw UsageError("bad input '" + s + "'");
    }
  }
  return in;
}

// branchforce@i=taken|nottaken|SLOT, regflip@i:rN^MASK, skip@i
vm::FaultSpec parse_fault(const std::string& s) {
  const auto at = s.find('@');
  if (at == std::string::npos) throw UsageError("bad fault '" + s + "'");
  const std::string kind = s.substr(0, at);
  const std::string rest = s.substr(at + 1);
  if (kind == "skip") return vm::InstrSkip{parse_u64(rest)};
  if (kind == "branchforce") {
    const auto eq = rest.find('=');
    if (eq == std::string::npos) throw UsageError("bad fault '" + s + "'");
    const std::string dir = rest.substr(eq + 1);
    std::uint32_t slot = 0;
    if (dir == "taken") {
      slot = 0;
    } else if (dir == "nottaken") {
      slot = 1;
    } else {
      slot = parse_u32(dir);
    }
    return vm::BranchForce{parse_u64(rest.substr(0, eq)), slot};
  }
  if (kind == "regflip") {
    const auto colon = rest.find(':');
    const auto caret = rest.find('^');
    if (colon == std::string::npos || caret == std::string::npos || caret < colon ||
        rest[colon + 1] != 'r') {
      throw UsageError("bad fault '" + s + "'");
    }
    const std::uint32_t mask = parse_u32(rest.substr(caret + 1));
    if (mask == 0) throw UsageError("fault mask must be nonzero");
    return vm::RegFlip{mir::Reg{parse_u32(rest.substr(colon + 2, caret - colon - 2))}, mask,
                       parse_u64(rest.substr(0, colon))};
  }
  throw UsageError("unknown fault model '" + kind + "'");
}

Predicate parse_pred(const std::string& s) {
  auto p = parse_predicate(s);
  if (!p) throw UsageError("unknown predicate '" + s + "'");
  return *p;
}

inst::CompiledProgram load_container(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
  try {
    return io::container_from_json(j);
  } catch (const json::exception& e) {
    throw UsageError(path + ": malformed container: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(path + ": " + e.what());
  }
}

// Commands -------------------------------------------------------------------

int cmd_encode(const ParamFlags& pf, const std::vector<std::string>& values) {
  const ANParams p = pf.get();
  for (const std::string& v : values) std::cout << encode(parse_u32(v), p).raw << '\n';
  return kOk;
}

int cmd_check(const ParamFlags& pf, const std::vector<std::string>& words) {
  const ANParams p = pf.get();
  int rc = kOk;
  for (const std::string& w : words) {
    const ANWord word{parse_u32(w)};
    if (is_valid(word, p)) {
      std::cout << "valid (n=" << decode(word, p) << ")\n";
    } else {
      std::cout << "invalid\n";
      rc = kIntegrity;
    }
  }
  return rc;
}

int cmd_compare(const ParamFlags& pf, const std::string& pred_text, const std::string& xs,
                const std::string& ys, bool encoded) {
  const ANParams p = pf.get();
  const Predicate pred = parse_pred(pred_text);
  const ANWord x = encoded ? ANWord{parse_u32(xs)} : encode(parse_u32(xs), p);
  const ANWord y = encoded ? ANWord{parse_u32(ys)} : encode(parse_u32(ys), p);
  const CompareTrace t = compare_trace(pred, x, y, p);
  for (const TraceStep& s : t.steps) std::cout << std::left << std::setw(10) << s.name << ' ' << s.value << '\n';
  const Truth truth = classify_symbol(t.result(), pred, p);
  std::cout << "result     " << (truth == Truth::True ? "true" : truth == Truth::False ? "false" : "invalid")
            << '\n';
  return truth == Truth::Invalid ? kIntegrity : kOk;
}

int cmd_distance(const ParamFlags& pf, unsigned jobs) {
  std::cout << min_code_distance(pf.a, pf.n_max, jobs) << '\n';
  return kOk;
}

struct CompileFlags {
  std::string input;
  std::string output;
  std::string pipeline = "an+cfi";
  std::uint64_t seed = 1;
  std::string checks = "block";
  std::string mod = "umod";
  bool compare_false = false;
  bool boundary_unsupported = false;
  std::vector<std::string> inputs;
  std::string function;
};

int cmd_compile(const ParamFlags& pf, const CompileFlags& f) {
  inst::PipelineConfig cfg;
  try {
    cfg = inst::parse_pipeline(f.pipeline);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.seed = f.seed;
  cfg.checks = f.checks == "exit" ? cfi::CheckPolicy::FunctionExit : cfi::CheckPolicy::EveryBlock;
  cfg.an.mod = f.mod == "mls" ? inst::ModMode::Mls : inst::ModMode::Umod;
  cfg.an.compare_true_symbol = !f.compare_false;
  cfg.an.boundary_on_unsupported = f.boundary_unsupported;
  cfg.an.params = pf.get();

  mir::Program source;
  try {
    source = mir::parse(read_file(f.input));
  } catch (const ParseError& e) {
    std::cerr << f.input << ": " << e.what() << '\n';
    return kCompileError;
  }
  const auto diags = mir::validate(source, {.allow_cfi = false, .n_max = cfg.an.params.n_max()});
  for (const mir::Diagnostic& d : diags) std::cerr << f.input << ": " << mir::format(d) << '\n';
  if (mir::has_errors(diags)) return kCompileError;

  inst::CompiledProgram compiled;
  try {
    compiled = inst::compile(source, cfg);
  } catch (const ProgramError& e) {
    std::cerr << f.input << ": error: " << e.what() << '\n';
    return kCompileError;
  }
  if (!f.inputs.empty()) {
    compiled.costs = inst::count_costs(compiled.program, parse_inputs(f.inputs), f.function);
  }
  write_output(f.output, io::to_json(compiled).dump(2) + "\n");
  if (!f.output.empty() && f.output != "-") {
    std::cerr << "wrote " << f.output << " (" << inst::pipeline_name(cfg) << ", "
              << compiled.costs.instructions << " instructions)\n";
  }
  return kOk;
}

struct RunFlags {
  std::string container;
  std::vector<std::string> inputs;
  std::vector<std::string> faults;
  std::string function;
  std::uint64_t fuel = 10'000'000;
  std::size_t memory = 4096;
  bool assert_an = false;
  bool trace = false;
};

int cmd_run(const RunFlags& f) {
  const inst::CompiledProgram compiled = load_container(f.container);
  vm::VmOptions opt;
  opt.fuel = f.fuel;
  opt.memory_words = f.memory;
  opt.params = compiled.config.an.params;
  vm::Executable exe(compiled.program, f.function);
  if (f.assert_an) {
    if (!compiled.an) throw UsageError("--assert-an needs an AN-coded container");
    opt.probes = inst::an_probes(compiled.program, *compiled.an, exe.function().name);
  }
  const vm::VmInputs inputs = parse_inputs(f.inputs);
  vm::FaultPlan plan;
  for (const std::string& s : f.faults) plan.push_back(parse_fault(s));

  const fault::ProgramTarget target =
      fault::ProgramTarget::make(compiled, inputs, opt, exe.function().name);
  for (const vm::FaultSpec& spec : plan) {
    const std::uint64_t at = vm::step_of(spec);
    if (at >= target.reference.steps) {
      throw UsageError("fault index " + std::to_string(at) + " is past the end of the fault-free run (" +
                       std::to_string(target.reference.steps) + " steps)");
    }
    if (const auto* force = std::get_if<vm::BranchForce>(&spec)) {
      const mir::Instr& in = exe.instr(target.reference.trace[at].at);
      if (in.op != mir::Opcode::Cbr && in.op != mir::Opcode::Switch) {
        throw UsageError("step " + std::to_string(at) + " is '" + mir::print(in) + "', not a branch");
      }
      if (force->successor >= exe.successors(target.reference.trace[at].at.block).size()) {
        throw UsageError("branch at step " + std::to_string(at) + " has no successor " +
                         std::to_string(force->successor));
      }
    }
  }

  opt.record_trace = f.trace;
  const vm::ExecResult r = vm::interpret(exe, inputs, plan, opt);
  json out = {{"result", io::to_json(r, f.trace)}};
  if (!plan.empty()) {
    json faults = json::array();
    for (const vm::FaultSpec& s : plan) faults.push_back(vm::describe(s));
    out["faults"] = faults;
    out["outcome"] = fault::to_string(fault::classify(target, r));
  }
  std::cout << out.dump(2) << '\n';
  return r.status == vm::HaltStatus::Returned ? kOk : kIntegrity;
}

struct CampaignFlags {
  std::string container;
  std::string trace;
  int bits = 3;
  std::string mode = "exhaustive";
  std::uint64_t samples = 10000;
  std::uint64_t seed = 1;
  unsigned jobs = 0;
  std::vector<std::uint32_t> operands;
  std::vector<std::string> inputs;
  std::string function;
  std::string models = "regflip,branchforce,skip";
  std::string format = "json";
  std::string output;
};

int cmd_campaign(const ParamFlags& pf, const CampaignFlags& f) {
  if (f.container.empty() == f.trace.empty()) throw UsageError("give exactly one of --container or --trace");
  if (f.mode != "exhaustive" && f.mode != "mc") throw UsageError("--mode must be exhaustive or mc");
  fault::CampaignConfig c;
  c.bits = f.bits;
  c.samples = f.samples;
  c.seed = f.seed;
  c.jobs = f.jobs;
  if (!f.operands.empty()) {
    if (f.operands.size() != 2) throw UsageError("--operands takes two values");
    c.operands = {{f.operands[0], f.operands[1]}};
  }

  json report;
  if (!f.trace.empty()) {
    c.target = fault::TargetKind::Trace;
    if (f.trace != "all") c.pred = parse_pred(f.trace);
    const ANParams p = pf.get();
    if (f.mode == "exhaustive") {
      if (!c.pred) throw UsageError("exhaustive trace campaigns need a single predicate");
      const auto r = fault::exhaustive_trace(c, p);
      report = io::to_json(r, "exhaustive");
      report["config"]["samples"] = r.counts.total();
    } else {
      report = io::to_json(fault::monte_carlo_trace(c, p), "mc");
    }
  } else {
    c.target = fault::TargetKind::Program;
    c.regflip = f.models.find("regflip") != std::string::npos;
    c.branchforce = f.models.find("branchforce") != std::string::npos;
    c.skip = f.models.find("skip") != std::string::npos;
    const inst::CompiledProgram compiled = load_container(f.container);
    vm::VmOptions opt;
    opt.params = compiled.config.an.params;
    const auto target = fault::ProgramTarget::make(compiled, parse_inputs(f.inputs), opt, f.function);
    if (f.mode == "mc") {
      report = io::to_json(fault::monte_carlo_program(target, c), "mc");
    } else {
      std::vector<vm::FaultPlan> plans;
      auto append = [&](std::vector<vm::FaultPlan> more) {
        plans.insert(plans.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
      };
      if (c.branchforce) append(fault::branch_force_plans(target));
      if (c.regflip) append(fault::cond_flip_plans(target));
      if (c.skip) append(fault::cfi_skip_plans(target));
      fault::CampaignResult r{c, "program:" + target.exe.function().name,
                              fault::run_plans(target, plans, f.jobs), 0, {}};
      const auto n = r.counts.total();
      r.sdc_rate = n == 0 ? 0 : static_cast<double>(r.counts[fault::Outcome::SdcControl]) / static_cast<double>(n);
      r.ci = fault::wilson_interval(r.counts[fault::Outcome::SdcControl], n);
      report = io::to_json(r, "exhaustive");
      report["config"]["samples"] = n;
      report["config"]["bits"] = 1;
    }
    report["config"]["pipeline"] = inst::pipeline_name(compiled.config);
  }

  if (f.format == "csv") {
    write_output(f.output, io::campaign_csv({report}));
  } else {
    write_output(f.output, report.dump(2) + "\n");
  }
  return kOk;
}

int cmd_report(const std::vector<std::string>& files, const std::vector<std::string>& inputs,
               const std::string& format) {
  if (files.empty()) throw UsageError("report needs at least one input file");
  std::vector<json> campaigns;
  struct CostRow {
    std::string file, pipeline;
    inst::CostReport costs;
  };
  std::vector<CostRow> costs;
  for (const std::string& path : files) {
    json j;
    try {
      j = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw UsageError(path + ": " + e.what());
    }
    if (j.contains("format")) {
      const inst::CompiledProgram c = load_container(path);
      inst::CostReport r = c.costs;
      if (!inputs.empty()) r = inst::count_costs(c.program, parse_inputs(inputs));
      costs.push_back({path, inst::pipeline_name(c.config), r});
    } else if (j.contains("counts")) {
      campaigns.push_back(j);
    } else {
      throw UsageError(path + ": neither a container nor a campaign report");
    }
  }

  std::ostringstream out;
  auto cycles = [](const inst::CostReport& r) { return r.cycles ? std::to_string(*r.cycles) : std::string("-"); };
  if (format == "csv") {
    if (!costs.empty()) {
      out << "file,pipeline,instructions,bytes,cycles\n";
      for (const CostRow& r : costs) {
        out << r.file << ',' << r.pipeline << ',' << r.costs.instructions << ',' << r.costs.bytes << ','
            << cycles(r.costs) << '\n';
      }
    }
    if (!campaigns.empty()) out << io::campaign_csv(campaigns);
  } else {
    if (!costs.empty()) {
      out << std::left << std::setw(12) << "pipeline" << std::right << std::setw(14) << "instructions"
          << std::setw(8) << "bytes" << std::setw(10) << "cycles" << "  file\n";
      for (const CostRow& r : costs) {
        out << std::left << std::setw(12) << r.pipeline << std::right << std::setw(14) << r.costs.instructions
            << std::setw(8) << r.costs.bytes << std::setw(10) << cycles(r.costs) << "  " << r.file << '\n';
      }
    }
    if (!campaigns.empty()) {
      if (!costs.empty()) out << '\n';
      out << std::left << std::setw(26) << "target" << std::right;
      for (fault::Outcome o : fault::kAllOutcomes) out << std::setw(15) << fault::to_string(o);
      out << std::setw(12) << "total" << std::setw(14) << "sdc_rate" << "  wilson_ci\n";
      for (const json& r : campaigns) {
        out << std::left << std::setw(26) << r.at("config").at("target").get<std::string>() << std::right;
        for (fault::Outcome o : fault::kAllOutcomes) {
          out << std::setw(15) << r.at("counts").at(std::string(fault::to_string(o))).get<std::uint64_t>();
        }
        out << std::setw(12) << r.at("total").get<std::uint64_t>() << std::setw(14)
            << r.at("sdc_rate").get<double>() << "  [" << r.at("wilson_ci").at(0).get<double>() << ", "
            << r.at("wilson_ci").at(1).get<double>() << "]\n";
      }
    }
  }
  std::cout << out.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AN-coded branch protection toolkit"};
  app.require_subcommand(1);
  ParamFlags params;

  auto* encode_cmd = app.add_subcommand("encode", "print the code word A*n of each value");
  std::vector<std::string> values;
  encode_cmd->add_option("values", values, "functional values")->required();
  params.add(encode_cmd);

  auto* check_cmd = app.add_subcommand("check", "check and decode code words");
  std::vector<std::string> words;
  check_cmd->add_option("words", words, "code words")->required();
  params.add(check_cmd);

  auto* compare_cmd = app.add_subcommand("compare", "trace an encoded comparison");
  std::string pred_text, xs, ys;
  bool encoded = false;
  compare_cmd->add_option("pred", pred_text, "eq ne lt le gt ge")->required();
  compare_cmd->add_option("x", xs)->required();
  compare_cmd->add_option("y", ys)->required();
  compare_cmd->add_flag("--encoded", encoded, "operands are raw code words");
  params.add(compare_cmd);

  auto* distance_cmd = app.add_subcommand("distance", "exact minimum Hamming distance of the code");
  unsigned distance_jobs = 0;
  distance_cmd->add_option("--jobs", distance_jobs, "worker threads (0 = all cores)");
  params.add(distance_cmd);

  auto* compile_cmd = app.add_subcommand("compile", "instrument a mini-IR program");
  CompileFlags cf;
  compile_cmd->add_option("program", cf.input, "program file")->required();
  compile_cmd->add_option("-o,--output", cf.output, "container file (default stdout)");
  compile_cmd->add_option("--pipeline", cf.pipeline, "an+cfi, cfi, an, none or dup:K")->capture_default_str();
  compile_cmd->add_option("--seed", cf.seed, "CFI id seed")->capture_default_str();
  compile_cmd->add_option("--checks", cf.checks, "block or exit")
      ->check(CLI::IsMember({"block", "exit"}))
      ->capture_default_str();
  compile_cmd->add_option("--mod", cf.mod, "umod or mls")->check(CLI::IsMember({"umod", "mls"}))->capture_default_str();
  compile_cmd->add_flag("--compare-false", cf.compare_false, "branch on the false symbol");
  compile_cmd->add_flag("--boundary-unsupported", cf.boundary_unsupported,
                        "encode and/or/xor results instead of rejecting them");
  compile_cmd->add_option("--input", cf.inputs, "inputs for measuring cycles: rN=V or @ADDR=v1,v2,...");
  compile_cmd->add_option("--function", cf.function, "function to measure");
  params.add(compile_cmd);

  auto* run_cmd = app.add_subcommand("run", "execute a container");
  RunFlags rf;
  run_cmd->add_option("container", rf.container)->required();
  run_cmd->add_option("--input", rf.inputs, "rN=V or @ADDR=v1,v2,...");
  run_cmd->add_option("--fault", rf.faults, "branchforce@I=taken|nottaken, regflip@I:rN^MASK, skip@I");
  run_cmd->add_option("--function", rf.function);
  run_cmd->add_option("--fuel", rf.fuel)->capture_default_str();
  run_cmd->add_option("--memory", rf.memory, "memory size in words")->capture_default_str();
  run_cmd->add_flag("--assert-an", rf.assert_an, "trap when an encoded compare sees an invalid operand");
  run_cmd->add_flag("--trace", rf.trace, "include the executed-instruction trace");

  auto* campaign_cmd = app.add_subcommand("campaign", "fault-injection campaign");
  CampaignFlags kf;
  campaign_cmd->add_option("--container", kf.container, "attack a compiled program");
  campaign_cmd->add_option("--trace", kf.trace, "attack an encoded-compare trace: a predicate or 'all'");
  campaign_cmd->add_option("--bits", kf.bits, "flipped bits per fault")->capture_default_str();
  campaign_cmd->add_option("--mode", kf.mode, "exhaustive or mc")->capture_default_str();
  campaign_cmd->add_option("--samples", kf.samples)->capture_default_str();
  campaign_cmd->add_option("--seed", kf.seed)->capture_default_str();
  campaign_cmd->add_option("--jobs", kf.jobs, "worker threads (0 = all cores)");
  campaign_cmd->add_option("--operands", kf.operands, "fixed functional operands x y")->expected(2);
  campaign_cmd->add_option("--input", kf.inputs, "program inputs");
  campaign_cmd->add_option("--function", kf.function);
  campaign_cmd->add_option("--models", kf.models, "program fault models")->capture_default_str();
  campaign_cmd->add_option("--format", kf.format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  campaign_cmd->add_option("-o,--output", kf.output);
  params.add(campaign_cmd);

  auto* report_cmd = app.add_subcommand("report", "tabulate containers and campaign reports");
  std::vector<std::string> report_files, report_inputs;
  std::string report_format = "text";
  report_cmd->add_option("files", report_files);
  report_cmd->add_option("--input", report_inputs, "inputs for measuring container cycles");
  report_cmd->add_option("--format", report_format)->check(CLI::IsMember({"text", "csv"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*encode_cmd) return cmd_encode(params, values);
    if (*check_cmd) return cmd_check(params, words);
    if (*compare_cmd) return cmd_compare(params, pred_text, xs, ys, encoded);
    if (*distance_cmd) return cmd_distance(params, distance_jobs);
    if (*compile_cmd) return cmd_compile(params, cf);
    if (*run_cmd) return cmd_run(rf);
    if (*campaign_cmd) return cmd_campaign(params, kf);
    if (*report_cmd) return cmd_report(report_files, report_inputs, report_format);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const RangeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ResourceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity failure: " << e.what() << '\n';
    return kIntegrity;
  } catch (const ProgramError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCompileError;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCompileError;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
