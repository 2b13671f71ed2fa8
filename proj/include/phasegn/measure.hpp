#ifndef PHASEGN_MEASURE_HPP
#define PHASEGN_MEASURE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "phasegn/core.hpp"

namespace phasegn {

/// m Gaussian sensing vectors stacked as rows.
///
/// Row j holds a_j^* so that (A x)_j = a_j^* x and y_j = |(A x)_j|^2. A Real
/// ensemble has an exactly-zero imaginary part. `row_offset` is the index of
/// row 0 inside the ensemble this one was sliced from (0 for a fresh draw).
struct SensingEnsemble {
  ComplexMatrix a;
  Field field = Field::Complex;
  std::uint64_t seed = 0;
  Index row_offset = 0;

  Index m() const noexcept { return a.rows(); }
  Index n() const noexcept { return a.cols(); }
};

struct Observations {
  RealVector y;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  Index m() const noexcept { return y.size(); }
};

/// Complex rows are i.i.d. N(0, I/2) + i N(0, I/2); real rows are N(0, I).
/// Each row has its own engine keyed by (seed, row); columns are filled in
/// order, real part before imaginary part.
SensingEnsemble sample_ensemble(Index m, Index n, Field field,
                                std::uint64_t seed);

/// Test signal with i.i.d. standard normal entries (complex: unit-variance
/// circular normal).
Signal sample_signal(Index n, Field field, std::uint64_t seed);

/// y_j = |a_j^* z|^2 + eta_j, eta_j ~ N(0, sigma^2). A real z may be observed
/// through a complex ensemble; a complex z through a real ensemble may not.
Observations observe(const SensingEnsemble& ensemble, const Signal& z,
                     double noise_sigma, std::uint64_t seed);

struct Block {
  SensingEnsemble ensemble;
  Observations observations;
};

/// Consecutive equal-size row blocks of floor(m / blocks) rows each. Rows past
/// blocks * floor(m / blocks) are dropped.
std::vector<Block> partition(const SensingEnsemble& ensemble,
                             const Observations& observations, Index blocks);

void check_compatible(const SensingEnsemble& ensemble,
                      const Observations& observations);
void check_compatible(const SensingEnsemble& ensemble, const Signal& x);

/// Portable problem instance: meta.json plus little-endian float64 arrays
/// A.bin (row-major, re/im interleaved when complex), y.bin and z.bin.
struct ProblemInstance {
  SensingEnsemble ensemble;
  Observations observations;
  std::optional<Signal> truth;
};

void write_instance(const std::filesystem::path& dir,
                    const ProblemInstance& instance);
ProblemInstance read_instance(const std::filesystem::path& dir);

}  // namespace phasegn

#endif  // PHASEGN_MEASURE_HPP
