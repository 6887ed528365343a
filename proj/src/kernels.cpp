#include "dgs/kernels.hpp"

#include <cmath>
#include <limits>

#include "dgs/dag.hpp"
#include "dgs/error.hpp"
#include "dgs/smoothing.hpp"
#include "parallel_for.hpp"

namespace dgs {

namespace {

double gaussian_sum(std::span<const double> values, double x, double bandwidth) {
  double s = 0.0;
  for (const double v : values) {
    const double u = (x - v) / bandwidth;
    s += std::exp(-0.5 * u * u);
  }
  return s;
}

double norm_of(const Vector& v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> norms(std::span<const Vector> rows) {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = norm_of(rows[i]);
  return out;
}

double cos_with_norms(const Vector& a, const Vector& b, double na, double nb) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  const double c = dot / (na * nb);
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

double row_min_cosine(std::span<const Vector> rows, std::span<const Vector> memory,
                      const std::vector<double>& rn, const std::vector<double>& mn, std::size_t i) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < memory.size(); ++j) {
    best = std::min(best, cos_with_norms(rows[i], memory[j], rn[i], mn[j]));
  }
  return best;
}

double row_max_offdiag(std::span<const Vector> rows, const std::vector<double>& rn, std::size_t i) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (j == i) continue;
    best = std::max(best, cos_with_norms(rows[i], rows[j], rn[i], rn[j]));
  }
  return best;
}

// Returns the nearest center; ties keep `current` when it is among the nearest,
// otherwise the lowest index wins.
int nearest_center(const Vector& p, std::span<const Vector> centers, int current) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  double current_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double r = p[i] - centers[c][i];
      d += r * r;
    }
    if (static_cast<int>(c) == current) current_d = d;
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return (current >= 0 && current_d <= best_d) ? current : best;
}

void check_batch(std::span<const GuidanceSpec> guidance, std::span<const std::uint64_t> seeds) {
  if (!guidance.empty() && guidance.size() != seeds.size()) {
    throw DomainError("reverse_sample_batch: guidance and seed counts differ");
  }
}

}  // namespace

namespace serial {

std::vector<double> kde_density(std::span<const double> values, std::span<const double> xs,
                                double bandwidth) {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = gaussian_sum(values, xs[i], bandwidth);
  return out;
}

std::vector<GridEvaluation> evaluate_grid(const SortedClass& data, const ThresholdGrid& grid,
                                          double lambda) {
  const auto points = grid_points(grid, data.size());
  std::vector<GridEvaluation> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = evaluate_clip(data, points[i], lambda);
  return out;
}

std::vector<double> min_cosine(std::span<const Vector> rows, std::span<const Vector> memory) {
  const auto rn = norms(rows);
  const auto mn = norms(memory);
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = row_min_cosine(rows, memory, rn, mn, i);
  return out;
}

std::vector<double> max_offdiag_cosine(std::span<const Vector> rows) {
  const auto rn = norms(rows);
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = row_max_offdiag(rows, rn, i);
  return out;
}

std::size_t assign_nearest(std::span<const Vector> points, std::span<const Vector> centers,
                           std::span<int> assignment) {
  std::size_t changed = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int c = nearest_center(points[i], centers, assignment[i]);
    if (c != assignment[i]) {
      assignment[i] = c;
      ++changed;
    }
  }
  return changed;
}

std::vector<Trajectory> reverse_sample_batch(const NoiseSchedule& schedule, const Mixture& mixture,
                                             std::span<const GuidanceSpec> guidance,
                                             std::span<const std::uint64_t> seeds,
                                             const ReverseOptions& options) {
  check_batch(guidance, seeds);
  std::vector<Trajectory> out(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    out[i] = reverse_sample(schedule, mixture, guidance.empty() ? nullptr : &guidance[i], seeds[i], options);
  }
  return out;
}

}  // namespace serial

namespace parallel {

std::vector<double> kde_density(std::span<const double> values, std::span<const double> xs,
                                double bandwidth) {
  std::vector<double> out(xs.size());
  const auto n = static_cast<long long>(xs.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) out[i] = gaussian_sum(values, xs[i], bandwidth);
  return out;
}

std::vector<GridEvaluation> evaluate_grid(const SortedClass& data, const ThresholdGrid& grid,
                                          double lambda) {
  const auto points = grid_points(grid, data.size());
  std::vector<GridEvaluation> out(points.size());
  const auto n = static_cast<long long>(points.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long long i = 0; i < n; ++i) out[i] = evaluate_clip(data, points[i], lambda);
  return out;
}

std::vector<double> min_cosine(std::span<const Vector> rows, std::span<const Vector> memory) {
  const auto rn = norms(rows);
  const auto mn = norms(memory);
  std::vector<double> out(rows.size());
  const auto n = static_cast<long long>(rows.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) out[i] = row_min_cosine(rows, memory, rn, mn, i);
  return out;
}

std::vector<double> max_offdiag_cosine(std::span<const Vector> rows) {
  const auto rn = norms(rows);
  std::vector<double> out(rows.size());
  const auto n = static_cast<long long>(rows.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) out[i] = row_max_offdiag(rows, rn, i);
  return out;
}

std::size_t assign_nearest(std::span<const Vector> points, std::span<const Vector> centers,
                           std::span<int> assignment) {
  std::size_t changed = 0;
  const auto n = static_cast<long long>(points.size());
#pragma omp parallel for schedule(static) reduction(+ : changed)
  for (long long i = 0; i < n; ++i) {
    const int c = nearest_center(points[i], centers, assignment[i]);
    if (c != assignment[i]) {
      assignment[i] = c;
      ++changed;
    }
  }
  return changed;
}

std::vector<Trajectory> reverse_sample_batch(const NoiseSchedule& schedule, const Mixture& mixture,
                                             std::span<const GuidanceSpec> guidance,
                                             std::span<const std::uint64_t> seeds,
                                             const ReverseOptions& options) {
  check_batch(guidance, seeds);
  std::vector<Trajectory> out(seeds.size());
  detail::parallel_for(seeds.size(), [&](std::size_t i) {
    out[i] = reverse_sample(schedule, mixture, guidance.empty() ? nullptr : &guidance[i], seeds[i], options);
  });
  return out;
}

}  // namespace parallel

}  // namespace dgs
