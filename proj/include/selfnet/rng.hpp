#pragma once

#include <cstdint>
#include <random>

namespace selfnet {

/// Engine used for every random stream in the simulator.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent sub-seed from a parent seed.
///
/// The scheme is splittable: `derive_seed(derive_seed(s, a, i), b, j)` names a
/// unique stream for every path (a,i) -> (b,j), so ensembles can be replayed or
/// parallelized without coordination. The stream tags below keep uses apart.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream,
                          std::uint64_t index);

namespace streams {
inline constexpr std::uint64_t kModel = 0x6d6f64656cULL;   // model draws
inline constexpr std::uint64_t kRepetition = 0x726570ULL;  // Monte Carlo reps
inline constexpr std::uint64_t kData = 0x64617461ULL;      // regressors/noise
inline constexpr std::uint64_t kPairing = 0x70616972ULL;   // matchings
inline constexpr std::uint64_t kAnalysis = 0x616e616cULL;  // offline analysis
}  // namespace streams

/// A seeded engine together with the variate generators drawn from it.
///
/// Owning the distributions alongside the engine keeps cached state (the polar
/// normal method produces values in pairs) attached to the stream it came from.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform01() { return uniform_(engine_); }
  Rng& engine() { return engine_; }

 private:
  Rng engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace selfnet
