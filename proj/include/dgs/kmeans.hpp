#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dgs/distribution.hpp"
#include "dgs/rng.hpp"

namespace dgs {

using Vector = std::vector<double>;

struct KMeansOptions {
  int max_iters = 100;
  int n_init = 1;  // independent k-means++ restarts; the lowest cost wins
  bool refine = true;  // single-point transfers after Lloyd converges
};

struct KMeansResult {
  std::vector<Vector> centers;
  std::vector<int> assignment;
  double cost = 0.0;                // within-cluster sum of squared distances
  std::vector<double> cost_history;  // cost after every Lloyd iteration and transfer of the kept run
  int iterations = 0;
  bool converged = false;
};

double within_cluster_cost(std::span<const Vector> points, std::span<const Vector> centers,
                           std::span<const int> assignment);

/// Lloyd's algorithm with k-means++ seeding. A cluster that empties is
/// refilled with the point of the largest cluster farthest from its center.
/// With `refine`, a converged run then moves single points between clusters
/// while that strictly lowers the cost (Hartigan transfers), so the result is
/// stable under both kinds of move.
KMeansResult kmeans(std::span<const Vector> points, int k, Rng& rng, const KMeansOptions& options = {});

struct IntervalCenters {
  int interval = 0;
  std::vector<Vector> centers;
  std::vector<std::int64_t> sizes;         // members per center
  std::vector<double> mean_difficulty;     // mean difficulty of each center's members
  std::vector<double> cost_history;
};

/// Clusters the latents of each interval into plan.targets[k] centers. The
/// RNG stream for interval k is derived from (seed, label, k).
/// Throws InsufficientSupply when an interval has fewer items than its target.
std::vector<IntervalCenters> interval_kmeans(const std::string& label, std::span<const Vector> latents,
                                             std::span<const double> difficulties,
                                             const SamplingPlan& plan, std::uint64_t seed,
                                             const KMeansOptions& options = {});

}  // namespace dgs
