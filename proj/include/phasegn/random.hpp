#ifndef PHASEGN_RANDOM_HPP
#define PHASEGN_RANDOM_HPP

#include <cstdint>
#include <random>

namespace phasegn {

// Named stream identifiers. A draw is keyed by (seed, stream, index), so the
// values a consumer sees never depend on the order in which other consumers
// ran.
enum class Stream : std::uint32_t {
  Ensemble = 1,
  Signal = 2,
  Noise = 3,
  PowerStart = 4,
  Perturbation = 5,
};

inline std::mt19937_64 make_engine(std::uint64_t seed, Stream stream,
                                   std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace phasegn

#endif  // PHASEGN_RANDOM_HPP
