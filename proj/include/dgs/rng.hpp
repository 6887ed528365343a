#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace dgs {

/// SplitMix64 finalizer. Used for state expansion and substream derivation.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from a root seed, a label and a path of
/// integer coordinates (interval index, center index, ...).
///
/// The label is hashed with 64-bit FNV-1a; the root seed, the label hash and
/// every path element are folded in with the SplitMix64 finalizer. The result
/// depends only on the arguments, so work can be scheduled in any order or on
/// any number of threads and still draw the same numbers.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                          std::initializer_list<std::uint64_t> path = {});

/// xoshiro256** 1.0 (Blackman & Vigna), seeded through SplitMix64.
///
/// All derived variates (uniform reals, bounded integers, normals) are
/// implemented here rather than with <random> distributions, whose algorithms
/// differ between standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next(); }

  std::uint64_t next();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, n). Lemire's nearly-divisionless rejection method.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via the Marsaglia polar method.
  double normal();

  std::vector<double> normal_vector(std::size_t dim);

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dgs
