#pragma once

#include <array>
#include <cstdint>
#include <random>

namespace sher {

// Independent random streams derived from one trial seed.
enum class RngStream : std::uint32_t { Tremor = 1, Drift = 2, Sensor = 3, ColorOrder = 4 };

[[nodiscard]] inline std::uint64_t stream_seed(std::uint64_t seed, RngStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace sher
