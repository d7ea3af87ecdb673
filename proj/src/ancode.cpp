#include "anbranch/ancode.hpp"

#include <algorithm>
#include <bit>
#include <string>
#include <thread>
#include <vector>

#include "anbranch/errors.hpp"

namespace anb {

namespace {

constexpr std::uint64_t kWordSpan = std::uint64_t{1} << 32;
constexpr std::uint32_t kMaxEnumeration = 1u << 16;
constexpr int kMinSymbolDistance = 6;

void require(bool cond, const std::string& what) {
  if (!cond) throw RangeError("invalid AN parameters: " + what);
}

bool usable_symbol(std::uint32_t s) { return s != 0 && s != 0xFFFFFFFFu; }

}  // namespace

std::uint32_t wrap_residue(std::uint32_t a) noexcept {
  return static_cast<std::uint32_t>(kWordSpan % a);
}

ANParams::ANParams() : ANParams(kDefaultA, kDefaultCEq, kDefaultCOrd, kDefaultNMax) {}

ANParams::ANParams(std::uint32_t a, std::uint32_t c_eq, std::uint32_t c_ord,
                   std::uint32_t n_max)
    : a_(a), c_eq_(c_eq), c_ord_(c_ord), r_(0), n_max_(n_max) {
  require(a > 1, "A must be greater than 1");
  require(std::uint64_t{a} * n_max < kWordSpan, "A * n_max must fit in 32 bits");
  require(c_eq > 0 && c_eq < a, "0 < C_eq < A");
  require(c_ord > 0 && c_ord < a, "0 < C_ord < A");
  r_ = wrap_residue(a);
  require(std::uint64_t{r_} + c_ord < a, "R + C_ord must stay below A");
  require(std::uint64_t{r_} + c_eq < a, "R + C_eq must stay below A");

  const std::uint32_t ord_true = r_ + c_ord;
  const std::uint32_t ord_false = c_ord;
  const std::uint32_t eq_true = 2 * c_eq;
  const std::uint32_t eq_false = r_ + 2 * c_eq;
  require(std::popcount(ord_true ^ ord_false) >= kMinSymbolDistance,
          "ordering symbols closer than 6 bits");
  require(std::popcount(eq_true ^ eq_false) >= kMinSymbolDistance,
          "equality symbols closer than 6 bits");
  require(usable_symbol(ord_true) && usable_symbol(ord_false) && usable_symbol(eq_true) &&
              usable_symbol(eq_false),
          "condition symbols must avoid all-zero and all-one");
}

ANWord encode(std::uint32_t n, const ANParams& p) {
  if (n > p.n_max()) {
    throw RangeError("functional value " + std::to_string(n) + " exceeds n_max " +
                     std::to_string(p.n_max()));
  }
  return ANWord{n * p.a()};
}

std::uint32_t decode(ANWord w, const ANParams& p) {
  if (w.raw % p.a() != 0) {
    throw IntegrityError("code word " + std::to_string(w.raw) + " is not a multiple of A");
  }
  const std::uint32_t n = w.raw / p.a();
  if (n > p.n_max()) {
    throw IntegrityError("code word " + std::to_string(w.raw) + " decodes past n_max");
  }
  return n;
}

bool is_valid(ANWord w, const ANParams& p) noexcept {
  return w.raw % p.a() == 0 && w.raw / p.a() <= p.n_max();
}

int min_code_distance(std::uint32_t a, std::uint32_t n_max, unsigned workers) {
  if (n_max > kMaxEnumeration) {
    throw ResourceError("pairwise enumeration is limited to n_max <= 65536");
  }
  if (a == 0 || n_max == 0) throw RangeError("need A > 0 and at least two code words");
  if (std::uint64_t{a} * n_max >= kWordSpan) throw RangeError("A * n_max overflows 32 bits");

  std::vector<std::uint32_t> words(std::size_t{n_max} + 1);
  for (std::uint32_t i = 0; i <= n_max; ++i) words[i] = a * i;

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, n_max);

  // Rows are dealt round-robin so every worker gets a mix of long and short rows.
  std::vector<int> best(workers, 33);
  auto scan = [&](unsigned w) {
    int local = 33;
    const std::size_t n = words.size();
    for (std::size_t i = w; i + 1 < n; i += workers) {
      const std::uint32_t wi = words[i];
      int row = 33;
      for (std::size_t j = i + 1; j < n; ++j) {
        row = std::min(row, std::popcount(wi ^ words[j]));
      }
      local = std::min(local, row);
    }
    best[w] = local;
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(scan, w);
  pool.clear();
  return *std::min_element(best.begin(), best.end());
}

int min_code_distance(const ANParams& p, unsigned workers) {
  return min_code_distance(p.a(), p.n_max(), workers);
}

}  // namespace anb
