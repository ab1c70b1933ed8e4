#pragma once

#include <array>
#include <cstdint>

namespace birthsim {

// Stream purposes. A run keyed by (seed, replica) draws each purpose from its
// own counter space, so adding a consumer never perturbs another one.
enum class StreamPurpose : std::uint64_t {
  dynamics = 0,
  coupling_marks = 1,
  fixtures = 2,
};

inline constexpr std::uint64_t stream_id(std::uint64_t replica, StreamPurpose purpose) {
  return (replica << 4) | static_cast<std::uint64_t>(purpose);
}

// Philox4x32-10 keyed by the 64-bit seed. The 128-bit counter is split into
// (stream id, block index), so any (seed, stream) pair is an independent,
// reproducible sequence regardless of how replicas are scheduled.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1].
  double uniform_open_low() { return 1.0 - uniform(); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double exponential(double rate);
  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t blocks_consumed() const { return block_; }

  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                              std::array<std::uint32_t, 2> key);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace birthsim
