#pragma once

#include <cstdint>

namespace bitmat {

// Philox4x32-10 counter-based generator (Salmon, Moraes, Dror, Shaw 2011).
// State is just (key, counter), so independent streams are cheap: stream s of
// seed k is Philox with key = k and the high counter word pinned to s.
// Simulation studies give each replication its own stream, which makes
// parallel runs reproducible independent of scheduling.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream = 0)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  std::uint32_t next_u32() {
    if (have_ == 0) refill();
    return out_[4 - have_--];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  bool bernoulli(double p) { return next_double() < p; }

  // Jump to an absolute block position; mostly exercised by tests.
  void set_counter(std::uint64_t n) {
    ctr_ = n;
    have_ = 0;
  }

 private:
  void refill() {
    std::uint32_t x0 = static_cast<std::uint32_t>(ctr_);
    std::uint32_t x1 = static_cast<std::uint32_t>(ctr_ >> 32);
    std::uint32_t x2 = stream_lo_;
    std::uint32_t x3 = stream_hi_;
    std::uint32_t k0 = key0_;
    std::uint32_t k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = kMul0 * static_cast<std::uint64_t>(x0);
      const std::uint64_t p1 = kMul1 * static_cast<std::uint64_t>(x2);
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      x0 = hi1 ^ x1 ^ k0;
      x1 = lo1;
      x2 = hi0 ^ x3 ^ k1;
      x3 = lo0;
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    out_[0] = x0;
    out_[1] = x1;
    out_[2] = x2;
    out_[3] = x3;
    ++ctr_;
    have_ = 4;
  }

  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  std::uint32_t key0_, key1_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t ctr_ = 0;
  std::uint32_t out_[4] = {0, 0, 0, 0};
  int have_ = 0;
};

}  // namespace bitmat
