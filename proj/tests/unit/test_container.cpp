#include <doctest.h>

#include "anbranch/container.hpp"
#include "anbranch/errors.hpp"
#include "corpus.hpp"

using namespace anb;
using testing::corpus;

namespace {

void same(const inst::CompiledProgram& a, const inst::CompiledProgram& b) {
  CHECK(a.source == b.source);
  CHECK(a.program == b.program);
  CHECK(inst::pipeline_name(a.config) == inst::pipeline_name(b.config));
  CHECK(a.config.seed == b.config.seed);
  CHECK(a.config.checks == b.config.checks);
  CHECK(a.config.an.mod == b.config.an.mod);
  CHECK(a.config.an.compare_true_symbol == b.config.an.compare_true_symbol);
  CHECK(a.config.an.params == b.config.an.params);
  CHECK(a.cfi == b.cfi);
  CHECK(a.an.has_value() == b.an.has_value());
  if (a.an && b.an) {
    CHECK(a.an->sites == b.an->sites);
    CHECK(a.an->windows == b.an->windows);
    CHECK(a.an->groups == b.an->groups);
  }
  CHECK(a.protected_branches.size() == b.protected_branches.size());
  for (std::size_t i = 0; i < a.protected_branches.size() && i < b.protected_branches.size(); ++i) {
    CHECK(a.protected_branches[i].block == b.protected_branches[i].block);
    CHECK(a.protected_branches[i].cond == b.protected_branches[i].cond);
    CHECK(a.protected_branches[i].edge_symbols == b.protected_branches[i].edge_symbols);
  }
  CHECK(a.decision_blocks == b.decision_blocks);
  CHECK(a.costs == b.costs);
}

}  // namespace

TEST_CASE("container round trip") {
  for (const char* name : {"integer_compare.mir", "memcmp128.mir", "loader.mir"}) {
    for (const char* pipe : {"none", "cfi", "an", "an+cfi", "dup:3"}) {
      CAPTURE(name);
      CAPTURE(pipe);
      inst::PipelineConfig cfg = inst::parse_pipeline(pipe);
      cfg.seed = 77;
      cfg.checks = cfi::CheckPolicy::FunctionExit;
      cfg.an.mod = inst::ModMode::Mls;
      cfg.an.compare_true_symbol = false;
      const inst::CompiledProgram c = inst::compile(corpus(name), cfg);
      const io::json j = io::to_json(c);
      CHECK(j.at("format") == "anbranch-container");
      CHECK(j.at("params").at("a") == 63877);
      CHECK(j.at("params").at("r") == 5570);
      const inst::CompiledProgram back = io::container_from_json(io::json::parse(j.dump()));
      same(c, back);
      CHECK(io::to_json(back) == j);
    }
  }
}

TEST_CASE("malformed containers") {
  CHECK_THROWS_AS(io::container_from_json(io::json::object()), std::invalid_argument);
  io::json j = io::to_json(inst::compile(corpus("integer_compare.mir"), {}));
  j.erase("program");
  CHECK_THROWS(io::container_from_json(j));
  j = io::to_json(inst::compile(corpus("integer_compare.mir"), {}));
  j["program"] = "func @f {";
  CHECK_THROWS_AS(io::container_from_json(j), ParseError);
}

TEST_CASE("campaign report layout") {
  fault::CampaignConfig c;
  c.bits = 1;
  c.samples = 200;
  c.seed = 9;
  c.pred = Predicate::GE;
  const fault::CampaignResult r = fault::monte_carlo_trace(c);
  const io::json j = io::to_json(r, "mc");
  CHECK(j.at("seed") == 9);
  CHECK(j.at("total") == 200);
  CHECK(j.at("config").at("pred") == "ge");
  CHECK(j.at("config").at("mode") == "mc");
  CHECK_FALSE(j.at("config").contains("jobs"));
  std::uint64_t sum = 0;
  for (const auto& [k, v] : j.at("counts").items()) sum += v.get<std::uint64_t>();
  CHECK(sum == 200);
  CHECK(j.at("counts").size() == 6);
  CHECK(j.at("wilson_ci").size() == 2);

  c.jobs = 7;
  CHECK(io::to_json(fault::monte_carlo_trace(c), "mc").dump() == j.dump());

  const std::string csv = io::campaign_csv({j, j});
  CHECK(csv.rfind("target,mode,bits,samples,pred,seed,detected_an,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("run result layout") {
  const auto c = inst::compile(corpus("integer_compare.mir"), {});
  const vm::ExecResult r = vm::interpret(c.program, {{{0, 4711}}, {}});
  const io::json j = io::to_json(r, true);
  CHECK(j.at("status") == "returned");
  CHECK(j.at("return_value") == 1);
  CHECK(j.at("trace").size() == r.steps);
  CHECK_FALSE(io::to_json(r).contains("trace"));
}
