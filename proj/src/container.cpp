#include "anbranch/container.hpp"

#include <sstream>
#include <stdexcept>

#include "anbranch/errors.hpp"

namespace anb::io {

namespace {

constexpr std::string_view kFormat = "anbranch-container";

std::string_view policy_name(cfi::CheckPolicy p) {
  return p == cfi::CheckPolicy::EveryBlock ? "block" : "exit";
}

cfi::CheckPolicy policy_from(const std::string& s) {
  if (s == "block") return cfi::CheckPolicy::EveryBlock;
  if (s == "exit") return cfi::CheckPolicy::FunctionExit;
  throw std::invalid_argument("unknown check policy '" + s + "'");
}

std::string_view edge_name(cfi::EdgeKind k) {
  switch (k) {
    case cfi::EdgeKind::Start: return "start";
    case cfi::EdgeKind::Jump: return "jump";
    case cfi::EdgeKind::Branch: return "branch";
    case cfi::EdgeKind::Merge: return "merge";
  }
  return "?";
}

cfi::EdgeKind edge_from(const std::string& s) {
  if (s == "start") return cfi::EdgeKind::Start;
  if (s == "jump") return cfi::EdgeKind::Jump;
  if (s == "branch") return cfi::EdgeKind::Branch;
  if (s == "merge") return cfi::EdgeKind::Merge;
  throw std::invalid_argument("unknown edge kind '" + s + "'");
}

Predicate predicate_from(const std::string& s) {
  auto p = parse_predicate(s);
  if (!p) throw std::invalid_argument("unknown predicate '" + s + "'");
  return *p;
}

mir::Instr instr_from(const std::string& text) {
  const mir::Program p = mir::parse("func @x {\nblock %b:\n" + text + "\nret r0\n}\n");
  return p.functions.at(0).blocks.at(0).instrs.at(0);
}

json params_json(const ANParams& p) {
  return {{"a", p.a()}, {"c_eq", p.c_eq()}, {"c_ord", p.c_ord()}, {"n_max", p.n_max()}, {"r", p.r()}};
}

ANParams params_from(const json& j) {
  return ANParams(j.at("a").get<std::uint32_t>(), j.at("c_eq").get<std::uint32_t>(),
                  j.at("c_ord").get<std::uint32_t>(), j.at("n_max").get<std::uint32_t>());
}

}  // namespace

json to_json(const cfi::CfiMeta& meta) {
  json fns = json::array();
  for (const cfi::CfiFunctionMeta& f : meta.functions) {
    json blocks = json::array();
    for (const cfi::CfiBlock& b : f.blocks) {
      blocks.push_back({{"label", b.label}, {"entry", b.entry}, {"exit", b.exit}, {"ids", b.ids},
                        {"checked", b.checked}});
    }
    json edges = json::array();
    for (const cfi::CfiEdge& e : f.edges) {
      edges.push_back({{"from", e.from},
                       {"to", e.to},
                       {"successor", e.successor},
                       {"kind", edge_name(e.kind)},
                       {"symbol", e.symbol ? json(*e.symbol) : json(nullptr)},
                       {"correction", e.correction}});
    }
    fns.push_back({{"function", f.function}, {"policy", policy_name(f.policy)}, {"blocks", blocks},
                   {"edges", edges}});
  }
  return {{"seed", meta.seed}, {"functions", fns}};
}

cfi::CfiMeta meta_from_json(const json& j) {
  cfi::CfiMeta meta;
  meta.seed = j.at("seed").get<std::uint64_t>();
  for (const json& jf : j.at("functions")) {
    cfi::CfiFunctionMeta f;
    f.function = jf.at("function").get<std::string>();
    f.policy = policy_from(jf.at("policy").get<std::string>());
    for (const json& jb : jf.at("blocks")) {
      f.blocks.push_back({jb.at("label").get<std::string>(), jb.at("entry").get<std::uint32_t>(),
                          jb.at("exit").get<std::uint32_t>(),
                          jb.at("ids").get<std::vector<std::uint32_t>>(), jb.at("checked").get<bool>()});
    }
    for (const json& je : jf.at("edges")) {
      cfi::CfiEdge e;
      e.from = je.at("from").get<std::string>();
      e.to = je.at("to").get<std::string>();
      e.successor = je.at("successor").get<std::uint32_t>();
      e.kind = edge_from(je.at("kind").get<std::string>());
      if (!je.at("symbol").is_null()) e.symbol = je.at("symbol").get<std::uint32_t>();
      e.correction = je.at("correction").get<std::uint32_t>();
      f.edges.push_back(std::move(e));
    }
    meta.functions.push_back(std::move(f));
  }
  return meta;
}

json to_json(const inst::AnReport& report) {
  json sites = json::array();
  for (const inst::EncodedSite& s : report.sites) {
    sites.push_back({{"function", s.function},
                     {"block", s.block},
                     {"pred", to_string(s.pred)},
                     {"x", s.x.id},
                     {"y", s.y.id},
                     {"cond", s.cond.id},
                     {"branch_symbol", s.branch_symbol},
                     {"edge_symbols", s.edge_symbols},
                     {"first", mir::print(s.first)},
                     {"mix", s.mix}});
  }
  json windows = json::array();
  for (const inst::UnprotectedWindow& w : report.windows) {
    windows.push_back({{"function", w.function}, {"block", w.block}, {"reg", w.reg.id}, {"source", w.source}});
  }
  json groups = json::object();
  for (const auto& [fn, blocks] : report.groups) {
    for (const auto& [label, g] : blocks) groups[fn][label] = g;
  }
  return {{"sites", sites}, {"unprotected_windows", windows}, {"groups", groups}};
}

inst::AnReport report_from_json(const json& j) {
  inst::AnReport r;
  for (const json& js : j.at("sites")) {
    inst::EncodedSite s;
    s.function = js.at("function").get<std::string>();
    s.block = js.at("block").get<std::string>();
    s.pred = predicate_from(js.at("pred").get<std::string>());
    s.x = {js.at("x").get<std::uint32_t>()};
    s.y = {js.at("y").get<std::uint32_t>()};
    s.cond = {js.at("cond").get<std::uint32_t>()};
    s.branch_symbol = js.at("branch_symbol").get<std::uint32_t>();
    s.edge_symbols = js.at("edge_symbols").get<std::array<std::uint32_t, 2>>();
    s.first = instr_from(js.at("first").get<std::string>());
    s.mix = js.at("mix").get<std::map<std::string, int>>();
    r.sites.push_back(std::move(s));
  }
  for (const json& jw : j.at("unprotected_windows")) {
    r.windows.push_back({jw.at("function").get<std::string>(), jw.at("block").get<std::string>(),
                         {jw.at("reg").get<std::uint32_t>()}, jw.at("source").get<std::string>()});
  }
  for (const auto& [fn, blocks] : j.at("groups").items()) {
    for (const auto& [label, g] : blocks.items()) {
      r.groups[fn][label] = g.get<std::vector<std::uint32_t>>();
    }
  }
  return r;
}

json to_json(const inst::CostReport& c) {
  return {{"opcodes", c.opcodes},
          {"instructions", c.instructions},
          {"bytes", c.bytes},
          {"cycles", c.cycles ? json(*c.cycles) : json(nullptr)},
          {"steps", c.steps ? json(*c.steps) : json(nullptr)}};
}

inst::CostReport costs_from_json(const json& j) {
  inst::CostReport c;
  c.opcodes = j.at("opcodes").get<std::map<std::string, int>>();
  c.instructions = j.at("instructions").get<int>();
  c.bytes = j.at("bytes").get<int>();
  if (!j.at("cycles").is_null()) c.cycles = j.at("cycles").get<std::uint64_t>();
  if (!j.at("steps").is_null()) c.steps = j.at("steps").get<std::uint64_t>();
  return c;
}

json to_json(const inst::CompiledProgram& c) {
  json branches = json::array();
  for (const cfi::ProtectedBranch& b : c.protected_branches) {
    branches.push_back({{"function", b.function}, {"block", b.block}, {"cond", b.cond.id},
                        {"edge_symbols", b.edge_symbols}});
  }
  json decisions = json::array();
  for (const auto& [fn, label] : c.decision_blocks) decisions.push_back({fn, label});
  return {{"format", kFormat},
          {"version", 1},
          {"config",
           {{"pipeline", inst::pipeline_name(c.config)},
            {"seed", c.config.seed},
            {"checks", policy_name(c.config.checks)},
            {"mod", inst::to_string(c.config.an.mod)},
            {"compare_true_symbol", c.config.an.compare_true_symbol},
            {"boundary_on_unsupported", c.config.an.boundary_on_unsupported}}},
          {"params", params_json(c.config.an.params)},
          {"source", mir::print(c.source)},
          {"program", mir::print(c.program)},
          {"cfi_meta", c.cfi ? to_json(*c.cfi) : json(nullptr)},
          {"report", c.an ? to_json(*c.an) : json(nullptr)},
          {"protected_branches", branches},
          {"decision_blocks", decisions},
          {"costs", to_json(c.costs)}};
}

inst::CompiledProgram container_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != kFormat) {
    throw std::invalid_argument("not an anbranch container");
  }
  inst::CompiledProgram c;
  const json& cfg = j.at("config");
  c.config = inst::parse_pipeline(cfg.at("pipeline").get<std::string>());
  c.config.seed = cfg.at("seed").get<std::uint64_t>();
  c.config.checks = policy_from(cfg.at("checks").get<std::string>());
  c.config.an.mod = cfg.at("mod").get<std::string>() == "mls" ? inst::ModMode::Mls : inst::ModMode::Umod;
  c.config.an.compare_true_symbol = cfg.at("compare_true_symbol").get<bool>();
  c.config.an.boundary_on_unsupported = cfg.at("boundary_on_unsupported").get<bool>();
  c.config.an.params = params_from(j.at("params"));
  c.source = mir::parse(j.at("source").get<std::string>());
  c.program = mir::parse(j.at("program").get<std::string>());
  if (!j.at("cfi_meta").is_null()) c.cfi = meta_from_json(j.at("cfi_meta"));
  if (!j.at("report").is_null()) c.an = report_from_json(j.at("report"));
  for (const json& b : j.at("protected_branches")) {
    c.protected_branches.push_back({b.at("function").get<std::string>(), b.at("block").get<std::string>(),
                                    {b.at("cond").get<std::uint32_t>()},
                                    b.at("edge_symbols").get<std::array<std::uint32_t, 2>>()});
  }
  for (const json& d : j.at("decision_blocks")) {
    c.decision_blocks.emplace_back(d.at(0).get<std::string>(), d.at(1).get<std::string>());
  }
  c.costs = costs_from_json(j.at("costs"));
  return c;
}

json to_json(const vm::ExecResult& r, bool with_trace) {
  json branches = json::array();
  for (const vm::BranchEvent& e : r.branches) {
    branches.push_back({{"step", e.step}, {"block", e.at.block}, {"index", e.at.index}, {"successor", e.successor}});
  }
  json out = {{"status", vm::to_string(r.status)},
              {"trap", vm::to_string(r.trap)},
              {"trap_code", r.trap_code},
              {"return_value", r.return_value},
              {"steps", r.steps},
              {"cycles", r.cycles},
              {"memory_digest", r.memory_digest},
              {"cfi_state", r.cfi_state},
              {"branches", branches}};
  if (with_trace) {
    json trace = json::array();
    for (const vm::TraceEntry& t : r.trace) trace.push_back({t.at.block, t.at.index, t.executed});
    out["trace"] = trace;
  }
  return out;
}

json counts_json(const fault::OutcomeCounts& c) {
  json j = json::object();
  for (fault::Outcome o : fault::kAllOutcomes) j[std::string(fault::to_string(o))] = c[o];
  return j;
}

json to_json(const fault::CampaignResult& r, std::string_view mode) {
  const fault::CampaignConfig& c = r.config;
  json models = json::array();
  if (c.target == fault::TargetKind::Program) {
    if (c.regflip) models.push_back("regflip");
    if (c.branchforce) models.push_back("branchforce");
    if (c.skip) models.push_back("skip");
  }
  json config = {{"target", r.label},
                 {"mode", mode},
                 {"bits", c.bits},
                 {"samples", c.samples},
                 {"pred", c.pred ? json(to_string(*c.pred)) : json("all")},
                 {"operands", c.operands ? json({c.operands->first, c.operands->second}) : json("random")}};
  if (!models.empty()) config["models"] = models;
  return {{"config", config},
          {"counts", counts_json(r.counts)},
          {"total", r.counts.total()},
          {"sdc_rate", r.sdc_rate},
          {"wilson_ci", {r.ci.lo, r.ci.hi}},
          {"seed", c.seed}};
}

std::string campaign_csv(const std::vector<json>& reports) {
  std::ostringstream out;
  out << "target,mode,bits,samples,pred,seed";
  for (fault::Outcome o : fault::kAllOutcomes) out << ',' << fault::to_string(o);
  out << ",total,sdc_rate,wilson_lo,wilson_hi\n";
  for (const json& r : reports) {
    const json& c = r.at("config");
    out << c.at("target").get<std::string>() << ',' << c.at("mode").get<std::string>() << ','
        << c.at("bits") << ',' << c.at("samples") << ',' << c.at("pred").get<std::string>() << ','
        << r.at("seed");
    for (fault::Outcome o : fault::kAllOutcomes) out << ',' << r.at("counts").at(std::string(fault::to_string(o)));
    out << ',' << r.at("total") << ',' << r.at("sdc_rate").dump() << ',' << r.at("wilson_ci").at(0).dump()
        << ',' << r.at("wilson_ci").at(1).dump() << '\n';
  }
  return out.str();
}

}  // namespace anb::io
