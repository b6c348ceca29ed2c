#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace trapsim {

// Identifies one independent random sequence. Two streams with equal
// (seed, stream_id) produce identical samples on every platform; sequences are
// fully determined by the pair and never by the order in which other streams
// are consumed.
struct RandomStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  // Sub-stream keyed by an index (trial number, delay index, ...).
  [[nodiscard]] RandomStream child(std::uint64_t index) const noexcept;

  friend bool operator==(const RandomStream&, const RandomStream&) = default;
};

RandomStream derive_stream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3").
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

// Counter-based generator over one RandomStream. The seed is the Philox key,
// the stream id the upper half of the counter, and the draw index the lower
// half. Single consumer; parallel code derives child streams instead of
// sharing a generator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(RandomStream stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept;
  // Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double normal() noexcept;
  double exponential(double mean) noexcept;
  bool bernoulli(double p) noexcept;
  // Inversion for small means, PTRS transformed rejection above.
  std::uint64_t poisson(double mean) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t stream_id_ = 0;
  std::uint64_t block_index_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_normal_ = false;
};

}  // namespace trapsim
