#include "dgs/kmeans.hpp"

#include <algorithm>
#include <limits>

#include "dgs/error.hpp"
#include "dgs/kernels.hpp"

namespace dgs {

namespace {

double sq_dist(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<Vector> plus_plus_seeds(std::span<const Vector> points, int k, Rng& rng) {
  const auto n = points.size();
  std::vector<Vector> centers;
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  auto pick = [&](std::size_t i) {
    chosen[i] = true;
    centers.push_back(points[i]);
    for (std::size_t j = 0; j < n; ++j) d2[j] = std::min(d2[j], sq_dist(points[j], points[i]));
  };

  pick(static_cast<std::size_t>(rng.below(n)));
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (const double v : d2) total += v;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      std::size_t pick_i = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (d2[j] <= 0.0) continue;
        acc += d2[j];
        pick_i = j;
        if (r < acc) break;
      }
      pick(pick_i);
    } else {
      // Every remaining point coincides with a center: take an unchosen one.
      std::vector<std::size_t> rest;
      for (std::size_t j = 0; j < n; ++j) {
        if (!chosen[j]) rest.push_back(j);
      }
      pick(rest[rng.below(rest.size())]);
    }
  }
  return centers;
}

void update_centers(std::span<const Vector> points, std::vector<int>& assignment,
                    std::vector<Vector>& centers) {
  const auto k = centers.size();
  const auto dim = points.front().size();
  auto recompute = [&] {
    std::vector<std::int64_t> sizes(k, 0);
    std::vector<Vector> sums(k, Vector(dim, 0.0));
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto c = static_cast<std::size_t>(assignment[i]);
      ++sizes[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) centers[c][d] = sums[c][d] / static_cast<double>(sizes[c]);
    }
    return sizes;
  };

  auto sizes = recompute();
  for (std::size_t empty = 0; empty < k; ++empty) {
    if (sizes[empty] != 0) continue;
    const auto largest = static_cast<std::size_t>(
        std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (static_cast<std::size_t>(assignment[i]) != largest) continue;
      const double d = sq_dist(points[i], centers[largest]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    assignment[far] = static_cast<int>(empty);
    centers[empty] = points[far];
    sizes = recompute();
  }
}

// Applies the single-point transfer with the largest exact cost drop.
// Returns false when no transfer lowers the recomputed cost.
bool transfer_best_point(std::span<const Vector> points, KMeansResult& r) {
  const auto k = r.centers.size();
  std::vector<std::int64_t> sizes(k, 0);
  for (const int a : r.assignment) ++sizes[static_cast<std::size_t>(a)];
  double best_gain = 0.0;
  std::size_t best_i = 0;
  std::size_t best_to = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto from = static_cast<std::size_t>(r.assignment[i]);
    if (sizes[from] < 2) continue;
    const double na = static_cast<double>(sizes[from]);
    const double leave = na / (na - 1.0) * sq_dist(points[i], r.centers[from]);
    for (std::size_t to = 0; to < k; ++to) {
      if (to == from) continue;
      const double nb = static_cast<double>(sizes[to]);
      const double gain = leave - nb / (nb + 1.0) * sq_dist(points[i], r.centers[to]);
      if (gain > best_gain) {
        best_gain = gain;
        best_i = i;
        best_to = to;
      }
    }
  }
  if (best_gain <= 0.0) return false;

  auto assignment = r.assignment;
  auto centers = r.centers;
  assignment[best_i] = static_cast<int>(best_to);
  update_centers(points, assignment, centers);
  const double cost = within_cluster_cost(points, centers, assignment);
  if (!(cost < r.cost_history.back())) return false;
  r.assignment = std::move(assignment);
  r.centers = std::move(centers);
  r.cost_history.push_back(cost);
  return true;
}

KMeansResult lloyd(std::span<const Vector> points, int k, Rng& rng, int max_iters, bool refine) {
  KMeansResult r;
  r.centers = plus_plus_seeds(points, k, rng);
  r.assignment.assign(points.size(), -1);
  parallel::assign_nearest(points, r.centers, r.assignment);
  std::size_t transfers = 0;
  for (;;) {
    while (r.iterations < max_iters) {
      ++r.iterations;
      update_centers(points, r.assignment, r.centers);
      r.cost_history.push_back(within_cluster_cost(points, r.centers, r.assignment));
      if (parallel::assign_nearest(points, r.centers, r.assignment) == 0) {
        r.converged = true;
        break;
      }
    }
    if (!r.converged) {
      update_centers(points, r.assignment, r.centers);
      break;
    }
    if (!refine || transfers >= 16 * points.size() || !transfer_best_point(points, r)) break;
    ++transfers;
    if (parallel::assign_nearest(points, r.centers, r.assignment) != 0) r.converged = false;
  }
  r.cost = within_cluster_cost(points, r.centers, r.assignment);
  return r;
}

}  // namespace

double within_cluster_cost(std::span<const Vector> points, std::span<const Vector> centers,
                           std::span<const int> assignment) {
  double cost = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    cost += sq_dist(points[i], centers[static_cast<std::size_t>(assignment[i])]);
  }
  return cost;
}

KMeansResult kmeans(std::span<const Vector> points, int k, Rng& rng, const KMeansOptions& options) {
  if (k < 1) throw DomainError("k-means needs k >= 1");
  if (points.size() < static_cast<std::size_t>(k)) {
    throw InsufficientSupply("k-means needs at least " + std::to_string(k) + " points, got " +
                             std::to_string(points.size()));
  }
  const auto dim = points.front().size();
  if (dim == 0) throw ValidationError("k-means over empty vectors");
  for (const auto& p : points) {
    if (p.size() != dim) throw ValidationError("k-means points have differing dimensions");
  }
  if (options.max_iters < 1 || options.n_init < 1) throw DomainError("k-means needs max_iters, n_init >= 1");

  KMeansResult best;
  for (int run = 0; run < options.n_init; ++run) {
    auto r = lloyd(points, k, rng, options.max_iters, options.refine);
    if (run == 0 || r.cost < best.cost) best = std::move(r);
  }
  return best;
}

std::vector<IntervalCenters> interval_kmeans(const std::string& label, std::span<const Vector> latents,
                                             std::span<const double> difficulties,
                                             const SamplingPlan& plan, std::uint64_t seed,
                                             const KMeansOptions& options) {
  if (latents.size() != difficulties.size()) throw DomainError("latents and difficulties differ in length");
  std::array<std::vector<std::size_t>, kIntervals> members;
  for (std::size_t i = 0; i < latents.size(); ++i) {
    if (latents[i].empty()) throw ValidationError("item without a latent vector in class \"" + label + "\"");
    members[bin_index(difficulties[i])].push_back(i);
  }

  std::string shortfall;
  for (int k = 0; k < kIntervals; ++k) {
    if (static_cast<std::int64_t>(members[k].size()) < plan.targets[k]) {
      shortfall += " interval " + std::to_string(k) + " has " + std::to_string(members[k].size()) +
                   " of " + std::to_string(plan.targets[k]) + ";";
    }
  }
  if (!shortfall.empty()) throw InsufficientSupply("class \"" + label + "\":" + shortfall);

  std::vector<IntervalCenters> out;
  for (int k = 0; k < kIntervals; ++k) {
    if (plan.targets[k] == 0) continue;
    std::vector<Vector> pts;
    for (const auto i : members[k]) pts.push_back(latents[i]);
    Rng rng(derive_seed(seed, label, {static_cast<std::uint64_t>(k)}));
    const auto r = kmeans(pts, static_cast<int>(plan.targets[k]), rng, options);

    IntervalCenters ic;
    ic.interval = k;
    ic.centers = r.centers;
    ic.sizes.assign(r.centers.size(), 0);
    ic.mean_difficulty.assign(r.centers.size(), 0.0);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const auto c = static_cast<std::size_t>(r.assignment[j]);
      ++ic.sizes[c];
      ic.mean_difficulty[c] += difficulties[members[k][j]];
    }
    for (std::size_t c = 0; c < ic.centers.size(); ++c) {
      ic.mean_difficulty[c] /= static_cast<double>(ic.sizes[c]);
    }
    ic.cost_history = r.cost_history;
    out.push_back(std::move(ic));
  }
  return out;
}

}  // namespace dgs
