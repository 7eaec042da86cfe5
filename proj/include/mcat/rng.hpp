#ifndef MCAT_RNG_HPP
#define MCAT_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mcat/stat_kernels.hpp"

namespace mcat {

// ---------------------------------------------------------------------------
// Philox4x32-10 counter-based generator
// ---------------------------------------------------------------------------
//
// Streams are addressed by (seed, stream id): the key holds the seed, the
// upper counter words hold the stream id, and the lower words count blocks.
// Replicates of a simulation each own a stream, so parallel execution
// reproduces the single-threaded draw sequence exactly.

class PhiloxRng {
 public:
  PhiloxRng(std::uint64_t seed, std::uint64_t stream) {
    key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    counter_ = {0, 0, static_cast<std::uint32_t>(stream),
                static_cast<std::uint32_t>(stream >> 32)};
  }

  std::uint32_t next_u32() {
    if (buffer_pos_ == 4) {
      buffer_ = block(counter_, key_);
      if (++counter_[0] == 0) ++counter_[1];
      buffer_pos_ = 0;
    }
    return buffer_[buffer_pos_++];
  }

  // uniform double in [0, 1) with 53 random bits
  double uniform() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  // one keyed block; matches the published known-answer vectors
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mul_hi_lo(m0, ctr[0], hi0, lo0);
      mul_hi_lo(m1, ctr[2], hi1, lo1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += w0;
      key[1] += w1;
    }
    return ctr;
  }

 private:
  static void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t &hi, std::uint32_t &lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
  }

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> buffer_{};
  int buffer_pos_ = 4;
};

// ---------------------------------------------------------------------------
// Exact binomial and multinomial sampling
// ---------------------------------------------------------------------------

// Inversion of Binomial(n, p) against a single uniform: pmf terms are
// accumulated outward from the mode (larger side first), so the walk costs
// O(sqrt(np)) for central draws and the mapping u -> x is deterministic.
inline long long binomial_draw(long long n, double p, double u) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;

  const double q = 1.0 - p;
  long long mode = static_cast<long long>(std::floor((static_cast<double>(n) + 1.0) * p));
  if (mode > n) mode = n;
  const double f_mode = binomial_pmf(n, mode, p);

  double cum = f_mode;
  if (u < cum) return mode;
  long long lo = mode, hi = mode;
  double f_lo = f_mode, f_hi = f_mode;
  while (lo > 0 || hi < n) {
    const double f_down =
        lo > 0 ? f_lo * static_cast<double>(lo) * q / (static_cast<double>(n - lo + 1) * p) : -1.0;
    const double f_up =
        hi < n ? f_hi * static_cast<double>(n - hi) * p / (static_cast<double>(hi + 1) * q) : -1.0;
    if (f_down >= f_up) {
      --lo;
      f_lo = f_down;
      cum += f_down;
      if (u < cum) return lo;
    } else {
      ++hi;
      f_hi = f_up;
      cum += f_up;
      if (u < cum) return hi;
    }
  }
  return mode;  // u beyond the accumulated mass (rounding shortfall)
}

// Multinomial by sequential conditional binomials.
inline void multinomial_draw(long long n, std::span<const double> probs,
                             std::span<long long> out, PhiloxRng &rng) {
  double remaining_prob = 1.0;
  long long remaining = n;
  for (std::size_t j = 0; j + 1 < probs.size(); ++j) {
    double conditional = remaining_prob > 0.0 ? probs[j] / remaining_prob : 0.0;
    conditional = std::clamp(conditional, 0.0, 1.0);
    const long long x = binomial_draw(remaining, conditional, rng.uniform());
    out[j] = x;
    remaining -= x;
    remaining_prob -= probs[j];
  }
  out[probs.size() - 1] = remaining;
}

}  // namespace mcat

#endif  // MCAT_RNG_HPP
