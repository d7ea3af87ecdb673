#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include "anbranch/errors.hpp"
#include "anbranch/faultsim.hpp"
#include "parallel.hpp"

namespace anb::fault {

namespace {

// Counter-based stream: the generator for sample i depends only on (seed, i).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  SplitMix64(std::uint64_t seed, std::uint64_t index)
      : state_(seed ^ (index * 0xD1B54A32D192ED03ull)) {
    (*this)();
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

std::uint64_t below(SplitMix64& rng, std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

std::uint32_t random_mask(SplitMix64& rng, int bits) {
  std::uint32_t m = 0;
  while (std::popcount(m) < bits) m |= 1u << below(rng, 32);
  return m;
}

CampaignResult finish(const CampaignConfig& c, std::string label, const OutcomeCounts& counts) {
  CampaignResult r{c, std::move(label), counts, 0, {}};
  const std::uint64_t n = counts.total();
  const std::uint64_t k = counts[Outcome::SdcControl];
  r.sdc_rate = n == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(n);
  r.ci = wilson_interval(k, n);
  return r;
}

std::string trace_label(const CampaignConfig& c) {
  std::string s = "trace:";
  s += c.pred ? std::string(to_string(*c.pred)) : "all";
  if (c.operands) s += "(" + std::to_string(c.operands->first) + "," + std::to_string(c.operands->second) + ")";
  return s;
}

}  // namespace

WilsonInterval wilson_interval(std::uint64_t k, std::uint64_t n) {
  if (n == 0) return {0, 1};
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double denom = 1 + z * z / nn;
  const double center = (p + z * z / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

CampaignResult monte_carlo_trace(const CampaignConfig& c, const ANParams& p) {
  if (c.samples == 0) throw RangeError("a campaign needs at least one sample");
  if (c.bits < 0 || c.bits > 7 * 32) throw RangeError("bit budget out of range");
  const OutcomeCounts counts = detail::parallel_sum<OutcomeCounts>(c.samples, c.jobs, [&](std::uint64_t i) {
    SplitMix64 rng(c.seed, i);
    const Predicate pred = c.pred ? *c.pred : kAllPredicates[below(rng, kAllPredicates.size())];
    std::uint32_t x = 0;
    std::uint32_t y = 0;
    if (c.operands) {
      x = c.operands->first;
      y = c.operands->second;
    } else {
      x = static_cast<std::uint32_t>(below(rng, std::uint64_t{p.n_max()} + 1));
      y = static_cast<std::uint32_t>(below(rng, std::uint64_t{p.n_max()} + 1));
    }
    const std::size_t width = trace_width(family_of(pred));
    std::array<std::uint32_t, 7> masks{};
    for (int placed = 0; placed < c.bits && static_cast<std::size_t>(c.bits) <= width * 32;) {
      const std::uint64_t q = below(rng, width * 32);
      const std::uint32_t bit = 1u << (q % 32);
      if (masks[q / 32] & bit) continue;
      masks[q / 32] |= bit;
      ++placed;
    }
    const ANWord ex = encode(x, p);
    const ANWord ey = encode(y, p);
    const ConditionSymbol correct = encoded_compare(pred, ex, ey, p);
    const ConditionSymbol got{compare_with_faults(pred, ex, ey, p, std::span(masks).first(width))};
    OutcomeCounts one;
    ++one[classify_trace(pred, correct, got, p)];
    return one;
  });
  return finish(c, trace_label(c), counts);
}

CampaignResult exhaustive_trace(const CampaignConfig& c, const ANParams& p) {
  const Predicate pred = c.pred.value_or(Predicate::LT);
  const auto [x, y] = c.operands.value_or(std::pair<std::uint32_t, std::uint32_t>{3, 5});
  CampaignConfig echo = c;
  echo.pred = pred;
  echo.operands = {{x, y}};
  const OutcomeCounts counts =
      spread_fault_enumeration(pred, encode(x, p), encode(y, p), p, c.bits, kDefaultEnumerationBound, c.jobs);
  return finish(echo, trace_label(echo), counts);
}

CampaignResult monte_carlo_program(const ProgramTarget& t, const CampaignConfig& c) {
  if (c.samples == 0) throw RangeError("a campaign needs at least one sample");
  if (c.bits < 1 || c.bits > 32) throw RangeError("register flips need 1..32 bits");
  std::vector<int> models;
  if (c.regflip) models.push_back(0);
  if (c.branchforce && !t.reference.branches.empty()) models.push_back(1);
  if (c.skip) models.push_back(2);
  if (models.empty()) throw RangeError("no fault model enabled");
  const std::uint64_t steps = t.reference.steps;
  const std::uint32_t regs = std::max(1u, t.exe.register_count());

  const OutcomeCounts counts = detail::parallel_sum<OutcomeCounts>(c.samples, c.jobs, [&](std::uint64_t i) {
    SplitMix64 rng(c.seed, i);
    vm::FaultPlan plan;
    switch (models[below(rng, models.size())]) {
      case 0:
        plan.push_back(vm::RegFlip{mir::Reg{static_cast<std::uint32_t>(below(rng, regs))},
                                   random_mask(rng, c.bits), below(rng, steps)});
        break;
      case 1: {
        const vm::BranchEvent& e = t.reference.branches[below(rng, t.reference.branches.size())];
        const auto ways = t.exe.successors(e.at.block).size();
        auto slot = static_cast<std::uint32_t>(below(rng, ways - 1));
        if (slot >= e.successor) ++slot;
        plan.push_back(vm::BranchForce{e.step, slot});
        break;
      }
      default: plan.push_back(vm::InstrSkip{below(rng, steps)}); break;
    }
    OutcomeCounts one;
    ++one[inject_run(t, plan)];
    return one;
  });
  return finish(c, "program:" + t.exe.function().name, counts);
}

}  // namespace anb::fault
