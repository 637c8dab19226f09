#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace alignlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the `index`-th independent stream under `master`. Streams depend
/// only on (master, index), never on scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x5851f42d4c957f2dULL));
}

/// Stream tags used to separate the random inputs of one experiment.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kStates = 3;
inline constexpr std::uint64_t kMonteCarlo = 4;
inline constexpr std::uint64_t kSpectrum = 5;
}  // namespace stream

/// Standard normal draws from a seeded Mersenne Twister.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double operator()() { return normal_(engine_); }

  /// Uniform draw on [lo, hi); returns lo when lo == hi.
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * std::generate_canonical<double, 53>(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace alignlab
