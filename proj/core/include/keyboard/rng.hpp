#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace keyboard {

/// splitmix64 finalizer; used for seeding and for deriving child stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed of an independent child stream, a pure function of the parent seed
/// and the path of integer tags (e.g. {scenario_index, trial_index}).
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path);

/// xoshiro256** generator. Satisfies UniformRandomBitGenerator so it can
/// drive <random> distributions; the helpers below are defined bit-for-bit
/// here so draw sequences are identical across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform01();
  /// Uniform on (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Beta(a, b) via two gamma variates.
  double beta(double a, double b);

  /// Child generator for an independent substream.
  Rng split(std::uint64_t tag) const;

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace keyboard
