#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>

namespace k41 {

/// Philox4x32-10 block function.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += w0;
    key[1] += w1;
  }
  return ctr;
}

/// Stream of random numbers addressed by (seed, a, b) and a 64-bit position.
///
/// Every value is a pure function of its address, so draws do not depend on
/// which worker produces them or in what order. Satisfies
/// UniformRandomBitGenerator for use with <random> algorithms.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint32_t a, std::uint32_t b)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, a_(a), b_(b) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (have_ == 0) refill();
    --have_;
    return buffer_[have_];
  }

  /// Uniform on (0, 1], never zero, with 53 random bits.
  double uniform() { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

  /// Two independent standard normals (Box–Muller).
  std::pair<double, double> normal_pair() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }

  double normal() {
    if (spare_) {
      spare_ = false;
      return spare_value_;
    }
    const auto [z0, z1] = normal_pair();
    spare_ = true;
    spare_value_ = z1;
    return z0;
  }

  /// Reposition to block `pos`, discarding buffered values.
  void seek(std::uint64_t pos) {
    pos_ = pos;
    have_ = 0;
    spare_ = false;
  }

 private:
  void refill() {
    const auto out = philox4x32({a_, b_, static_cast<std::uint32_t>(pos_), static_cast<std::uint32_t>(pos_ >> 32)}, key_);
    ++pos_;
    buffer_[1] = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
    buffer_[0] = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    have_ = 2;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t a_, b_;
  std::uint64_t pos_ = 0;
  std::uint64_t buffer_[2] = {0, 0};
  int have_ = 0;
  bool spare_ = false;
  double spare_value_ = 0;
};

}  // namespace k41
