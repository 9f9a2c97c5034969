#pragma once

// Counter-based random streams. Every bond draw is a pure function of
// (master_seed, replicate_index, bond_index), so replicates can run in any
// order on any number of workers and single bonds can be read lazily.

#include <array>
#include <cstdint>

#include "percolab/errors.hpp"
#include "percolab/lattice.hpp"

namespace percolab {

// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter apply(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = Counter{static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                    static_cast<std::uint32_t>(p1),
                    static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                    static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

struct RngContract {
  std::uint64_t master_seed = 0;
  std::uint64_t replicate_index = 0;
};

// 53-bit uniform in [0, 1).
constexpr double to_unit(std::uint64_t w) noexcept {
  return static_cast<double>(w >> 11) * 0x1.0p-53;
}

// Uniform stream for one replicate; draw i is independent of every other i.
class ReplicateStream {
 public:
  explicit constexpr ReplicateStream(RngContract rng) noexcept
      : key_{static_cast<std::uint32_t>(rng.master_seed),
             static_cast<std::uint32_t>(rng.master_seed >> 32)},
        rep_lo_(static_cast<std::uint32_t>(rng.replicate_index)),
        rep_hi_(static_cast<std::uint32_t>(rng.replicate_index >> 32)) {}

  // Two 64-bit words for block b (draws 2b and 2b+1).
  [[nodiscard]] constexpr std::array<std::uint64_t, 2> block(std::uint64_t b) const noexcept {
    const auto out = Philox4x32::apply(
        {static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32), rep_lo_, rep_hi_}, key_);
    return {(std::uint64_t{out[1]} << 32) | out[0], (std::uint64_t{out[3]} << 32) | out[2]};
  }

  [[nodiscard]] constexpr double uniform(std::uint64_t i) const noexcept {
    return to_unit(block(i >> 1)[i & 1]);
  }

 private:
  Philox4x32::Key key_;
  std::uint32_t rep_lo_;
  std::uint32_t rep_hi_;
};

inline void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("probability must lie in [0, 1]");
}

inline BondConfig sample_config(const BoxSpec& box, double p, RngContract rng) {
  check_probability(p);
  const ReplicateStream stream(rng);
  BondConfig config(box);
  const std::uint64_t k = box.bond_count();
  for (std::uint64_t b = 0; 2 * b < k; ++b) {
    const auto words = stream.block(b);
    config.set(2 * b, to_unit(words[0]) < p);
    if (2 * b + 1 < k) config.set(2 * b + 1, to_unit(words[1]) < p);
  }
  return config;
}

// Bond states of one replicate evaluated on demand. Agrees bond-for-bond with
// sample_config(box, p, rng).
class LazyBondField {
 public:
  LazyBondField(const BoxSpec& box, double p, RngContract rng) : box_(box), p_(p), stream_(rng) {
    check_probability(p);
  }

  [[nodiscard]] const BoxSpec& box() const noexcept { return box_; }
  [[nodiscard]] bool is_open(BondIndex i) const noexcept { return stream_.uniform(i) < p_; }

 private:
  BoxSpec box_;
  double p_;
  ReplicateStream stream_;
};

}  // namespace percolab
