#pragma once

#include <array>
#include <cstdint>

#include "enlmc/types.hpp"

namespace enlmc {

/// Philox4x32-10 counter-based block cipher (Salmon et al., SC'11).
///
/// Maps a 128-bit counter and a 64-bit key to 128 pseudo-random bits. There is
/// no hidden state, so any draw can be regenerated from its coordinates alone.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

/// Separates the random streams used by different parts of the library so
/// that, e.g., initial positions never share bits with Langevin noise.
enum class StreamDomain : std::uint32_t {
  initial = 1,
  noise = 2,
  mala_accept = 3,
  direct = 4,
  projection = 5,
  probe = 6,
  synthetic = 7,
  scarcity = 8,
  reference = 9,
  calibration = 10,
};

/// Coordinates of a stream: which subsystem, which iteration, which particle.
struct StreamId {
  StreamDomain domain = StreamDomain::noise;
  std::uint32_t iteration = 0;
  std::uint32_t particle = 0;

  friend bool operator==(const StreamId&, const StreamId&) = default;
};

/// A deterministic random stream keyed by (seed, StreamId).
///
/// Draws are produced by enumerating the Philox counter, so two streams with
/// the same seed and id produce bit-identical sequences regardless of which
/// thread creates them or in which order.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamId id) noexcept;

  std::uint64_t next_u64() noexcept;

  /// Uniform on the half-open interval [0, 1) with 53 bits of resolution.
  double uniform() noexcept;

  /// Uniform on (0, 1]; safe to pass to log().
  double uniform_pos() noexcept;

  /// Standard normal variate (Box-Muller, pairs cached).
  double normal() noexcept;

  Vector normals(int d);

  std::uint64_t seed() const noexcept { return seed_; }
  const StreamId& id() const noexcept { return id_; }

 private:
  std::uint64_t seed_;
  StreamId id_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_words_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// d independent standard normal variates, determined by the stream's seed and
/// id only. The stream is taken by value: the caller's stream is not advanced.
Vector gaussian_draw(RngStream stream, int d);

}  // namespace enlmc
