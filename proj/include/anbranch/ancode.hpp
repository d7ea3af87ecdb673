#pragma once

// AN-code arithmetic on 32-bit words.
//
// A functional value n in [0, n_max] is carried by the code word A*n. Every
// multiple of A inside that range is a valid word; anything else signals a
// corrupted value. Addition and subtraction stay inside the code as long as
// the functional result stays in range.

#include <compare>
#include <cstdint>

namespace anb {

class ANParams {
 public:
  static constexpr std::uint32_t kDefaultA = 63877;
  static constexpr std::uint32_t kDefaultCEq = 14991;
  static constexpr std::uint32_t kDefaultCOrd = 29982;
  static constexpr std::uint32_t kDefaultNMax = 65535;

  /// Defaults: A = 63877, C_eq = 14991, C_ord = 29982, n_max = 65535.
  ANParams();

  /// Throws RangeError unless 0 < C < A for both constants, A*n_max fits in
  /// 32 bits, R + C < A for both constants (so the condition symbols need no
  /// extra reduction) and both symbol pairs are at least 6 bits apart and
  /// avoid the all-zero and all-one words.
  ANParams(std::uint32_t a, std::uint32_t c_eq, std::uint32_t c_ord,
           std::uint32_t n_max = kDefaultNMax);

  std::uint32_t a() const noexcept { return a_; }
  std::uint32_t c_eq() const noexcept { return c_eq_; }
  std::uint32_t c_ord() const noexcept { return c_ord_; }
  /// 2^32 mod A: the residue a negative difference leaves after wrapping.
  std::uint32_t r() const noexcept { return r_; }
  std::uint32_t n_max() const noexcept { return n_max_; }

  friend bool operator==(const ANParams&, const ANParams&) = default;

 private:
  std::uint32_t a_;
  std::uint32_t c_eq_;
  std::uint32_t c_ord_;
  std::uint32_t r_;
  std::uint32_t n_max_;
};

/// 2^32 mod a. Requires a != 0.
std::uint32_t wrap_residue(std::uint32_t a) noexcept;

/// A raw 32-bit code word. Holding an ANWord says nothing about validity.
struct ANWord {
  std::uint32_t raw = 0;

  friend auto operator<=>(const ANWord&, const ANWord&) = default;
};

/// Throws RangeError when n > p.n_max().
ANWord encode(std::uint32_t n, const ANParams& p = {});

/// Throws IntegrityError when w is not a multiple of A or decodes past n_max.
std::uint32_t decode(ANWord w, const ANParams& p = {});

bool is_valid(ANWord w, const ANParams& p = {}) noexcept;

/// Wrapping sum. Stays a code word while the functional sum is <= n_max.
constexpr ANWord an_add(ANWord x, ANWord y) noexcept { return {x.raw + y.raw}; }

/// Wrapping difference. For x >= y this is a code word; for x < y it is
/// 2^32 + A*(x - y), which leaves residue R and is deliberately invalid.
constexpr std::uint32_t an_sub(ANWord x, ANWord y) noexcept { return x.raw - y.raw; }

/// Exact minimum Hamming distance over all pairs of code words A*i, A*j with
/// 0 <= i < j <= n_max. Full pairwise enumeration, split across `workers`
/// threads (0 picks the hardware concurrency). Throws ResourceError when
/// n_max > 2^16 and RangeError when A*n_max overflows.
int min_code_distance(std::uint32_t a, std::uint32_t n_max, unsigned workers = 0);
int min_code_distance(const ANParams& p, unsigned workers = 0);

}  // namespace anb
