#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (key, counter):
//
//   bits(key, i) = mix64(key + (i + 1) * 0x9E3779B97F4A7C15)
//
// where mix64 is the SplitMix64 / Stafford "Mix13" finalizer. A stream key
// for replicate j of a run seeded with s in domain d is
//
//   key(s, j, d) = mix64(mix64(s ^ (d * 0xD1B54A32D192ED03)) + mix64(j + 0x632BE59BD9B4E019))
//
// so replicate j never depends on how many other replicates ran or in what
// order. Uniforms use the top 52 bits, shifted by half a step so they lie
// strictly inside (0, 1); normals are obtained by inverting the normal cdf.

#include <cstdint>

namespace hcdep {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent sub-streams of one master seed.
enum class StreamDomain : std::uint64_t {
  kPaths = 0,
  kSignals = 1,
};

constexpr std::uint64_t stream_key(std::uint64_t master_seed, std::uint64_t index,
                                   StreamDomain domain = StreamDomain::kPaths) noexcept {
  const auto d = static_cast<std::uint64_t>(domain);
  return mix64(mix64(master_seed ^ (d * 0xD1B54A32D192ED03ULL)) +
               mix64(index + 0x632BE59BD9B4E019ULL));
}

constexpr std::uint64_t counter_bits(std::uint64_t key, std::uint64_t counter) noexcept {
  return mix64(key + (counter + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Uniform in the open interval (0, 1).
constexpr double bits_to_open_uniform(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Sequential view over one counter-based stream.
class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key, std::uint64_t start = 0) noexcept
      : key_(key), counter_(start) {}

  constexpr std::uint64_t next_bits() noexcept { return counter_bits(key_, counter_++); }
  constexpr double next_uniform() noexcept { return bits_to_open_uniform(next_bits()); }
  double next_normal();

  /// Uniform integer in [0, bound); bound must be positive.
  std::uint64_t next_below(std::uint64_t bound) noexcept;

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace hcdep
