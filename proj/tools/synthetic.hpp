#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dgs/distribution.hpp"
#include "dgs/manifest.hpp"

namespace dgs::synth {

// Synthetic original/pool pair with an easy-biased pool. Original difficulties
// follow Beta(2, 5) (second smallest of six uniforms); pool difficulties follow
// Beta(1, 8) (smallest of eight uniforms).
struct FixtureOptions {
  int classes = 10;
  std::int64_t original_per_class = 500;
  std::int64_t ipc = 50;
  std::int64_t pool_factor = 5;
  std::size_t latent_dim = 8;
  std::uint64_t seed = 0;
};

struct Fixture {
  Manifest original;
  Manifest pool;
  // Interval counts tallied while generating, one entry per class.
  std::vector<DifficultyHistogram> original_counts;
  std::vector<DifficultyHistogram> pool_counts;
};

std::string class_label(int c);

Fixture make_fixture(const FixtureOptions& options);

}  // namespace dgs::synth
