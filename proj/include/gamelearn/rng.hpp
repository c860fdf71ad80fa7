#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace gamelearn {

// Philox4x64-10 block function: one 256-bit counter and a 128-bit key in,
// four 64-bit words out.
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

// Counter-based generator. The key is (seed, stream); every call consumes the
// next counter value, so a run is fully reproducible from (seed, stream) and
// independent streams never overlap.
//
// Satisfies UniformRandomBitGenerator so it can drive <random> distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();

  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t stream() const { return key_[1]; }

 private:
  void refill();

  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_{};
  std::array<std::uint64_t, 4> buffer_{};
  int buffer_pos_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace gamelearn
