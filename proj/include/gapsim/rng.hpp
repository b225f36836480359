#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace gapsim {

// Philox4x32-10 counter-based bijection (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept;
};

// A random stream fully determined by (seed, stream_id). Streams with
// different ids never overlap: the id occupies the upper half of the
// Philox counter and the draw index the lower half.
class RandomStream {
public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  // Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() noexcept;

  // Standard normal via Box-Muller.
  double normal() noexcept;
  void fill_normal(std::span<double> out) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_index_ = 0;
  Philox4x32::Counter buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Derive a child stream id from a parent task id and a sub-index, e.g. the
// retry attempt of a horizon-exhausted run.
std::uint64_t substream_id(std::uint64_t task_id, std::uint32_t sub) noexcept;

}  // namespace gapsim
