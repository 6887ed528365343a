#include "synthetic.hpp"

#include <algorithm>
#include <array>

#include "dgs/rng.hpp"

namespace dgs::synth {

namespace {

double order_statistic(Rng& rng, int rank, int n) {
  std::vector<double> u(static_cast<std::size_t>(n));
  for (auto& x : u) x = rng.uniform();
  std::nth_element(u.begin(), u.begin() + (rank - 1), u.end());
  return u[static_cast<std::size_t>(rank - 1)];
}

// Counted with its own loop so the fixture's ground truth does not reuse the
// library's binning.
int tally_bin(double d) {
  int k = 0;
  while (k < 9 && d >= (k + 1) / 10.0) ++k;
  return k;
}

void add_class(Manifest& m, DifficultyHistogram& counts, const std::string& label,
               const std::string& prefix, std::int64_t n, int rank, int of, std::size_t dim,
               std::uint64_t seed, std::uint64_t stream, int c) {
  Rng rng(derive_seed(seed, label, {stream}));
  counts.label = label;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = order_statistic(rng, rank, of);
    Item item = item_from_difficulty(label + "/" + prefix + std::to_string(i), label, d);
    item.latent.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      const double base = (j == static_cast<std::size_t>(c) % dim) ? 2.0 : 0.0;
      const double drift = (j == (static_cast<std::size_t>(c) + 1) % dim) ? d : 0.0;
      item.latent[j] = base + drift + 0.3 * rng.normal();
    }
    ++counts.counts[tally_bin(d)];
    ++counts.total;
    m.items.push_back(std::move(item));
  }
}

}  // namespace

std::string class_label(int c) { return "class" + std::to_string(c); }

Fixture make_fixture(const FixtureOptions& options) {
  Fixture f;
  f.original.role = Role::original;
  f.pool.role = Role::pool;
  f.original.latent_dim = options.latent_dim;
  f.pool.latent_dim = options.latent_dim;
  f.original_counts.resize(static_cast<std::size_t>(options.classes));
  f.pool_counts.resize(static_cast<std::size_t>(options.classes));
  for (int c = 0; c < options.classes; ++c) {
    const auto label = class_label(c);
    const auto ci = static_cast<std::size_t>(c);
    add_class(f.original, f.original_counts[ci], label, "o", options.original_per_class, 2, 6,
              options.latent_dim, options.seed, 0, c);
    add_class(f.pool, f.pool_counts[ci], label, "p", options.ipc * options.pool_factor, 1, 8,
              options.latent_dim, options.seed, 1, c);
  }
  return f;
}

}  // namespace dgs::synth
