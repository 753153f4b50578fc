#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mismed {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
//
// key     = the 64-bit seed (low word, high word)
// counter = (block index low, block index high, stream low, stream high)
//
// Each stream is an independent sequence of 2^64 blocks of four 32-bit words.
// The simulation harness uses stream = replicate index, so replicate r of a
// study draws the same numbers regardless of scheduling.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // The raw bijection: ten rounds of the Philox S-box applied to `counter`.
  static Block generate_block(Block counter, Key key);

 private:
  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  int used_ = 4;
};

// Uniform on [0, 1) with 53 random bits.
double uniform01(Philox4x32& rng);

}  // namespace mismed
