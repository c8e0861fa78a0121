#pragma once

// Counter-based random numbers. Normal number q of path p is a pure function of
// (seed, p, q), so a path's noise does not depend on the order in which paths
// are simulated or on the number of threads.
//
// Generator: Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as
// 1, 2, 3", SC'11). Key = 64-bit seed; counter = (pair lo, pair hi, path lo, path hi).
// Normals: Box-Muller on two 53-bit uniforms built from one 128-bit output;
// normals 2m and 2m + 1 of a path come from pair m.

#include <array>
#include <cmath>
#include <cstdint>

namespace qtsm {

class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
  }
};

/// The normal sequence of one path under a fixed seed.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t path)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, path_(path) {}

  /// Next normal; the k-th call returns normal number k.
  double next() {
    if ((index_ & 1u) == 0) cache_ = pair(index_ >> 1);
    return cache_[index_++ & 1u];
  }

  /// Normal number q, independent of the stream position.
  double at(std::uint64_t q) const { return pair(q >> 1)[q & 1u]; }

  std::array<double, 2> pair(std::uint64_t m) const {
    const auto r = Philox4x32::generate({static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(m >> 32),
                                         static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)},
                                        key_);
    const std::uint64_t hi = (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
    const std::uint64_t lo = (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
    // u1 in (0, 1], u2 in [0, 1)
    const double u1 = (static_cast<double>(hi >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(lo >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    return {radius * std::cos(kTwoPi * u2), radius * std::sin(kTwoPi * u2)};
  }

 private:
  Philox4x32::Key key_;
  std::uint64_t path_;
  std::uint64_t index_ = 0;
  std::array<double, 2> cache_{};
};

}  // namespace qtsm
