#pragma once

// Data-parallel kernels. Every kernel exists twice with the same signature:
// `dgs::serial` is the plain reference loop and `dgs::parallel` is the OpenMP
// version the library calls. Each output element is computed independently
// and any reduction happens serially afterwards, so the two are bit-identical
// for every thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dgs {

struct SortedClass;
struct ThresholdGrid;
struct GridEvaluation;
struct NoiseSchedule;
struct Mixture;
struct GuidanceSpec;
struct ReverseOptions;
struct Trajectory;

using Vector = std::vector<double>;

namespace serial {

/// Unnormalized sum of Gaussian kernels at each grid point.
std::vector<double> kde_density(std::span<const double> values, std::span<const double> xs,
                                double bandwidth);

/// Objective of every (b, t) pair of the threshold grid.
std::vector<GridEvaluation> evaluate_grid(const SortedClass& data, const ThresholdGrid& grid,
                                          double lambda);

/// Row-wise min over memory of cosine(row, memory[j]).
std::vector<double> min_cosine(std::span<const Vector> rows, std::span<const Vector> memory);

/// Row-wise max over j != i of cosine(rows[i], rows[j]).
std::vector<double> max_offdiag_cosine(std::span<const Vector> rows);

/// Moves each point to its nearest center; ties keep the current assignment.
/// Returns the number of points that changed cluster.
std::size_t assign_nearest(std::span<const Vector> points, std::span<const Vector> centers,
                           std::span<int> assignment);

/// One reverse-diffusion run per seed. `guidance` is empty (unguided) or has
/// one entry per seed.
std::vector<Trajectory> reverse_sample_batch(const NoiseSchedule& schedule, const Mixture& mixture,
                                             std::span<const GuidanceSpec> guidance,
                                             std::span<const std::uint64_t> seeds,
                                             const ReverseOptions& options);

}  // namespace serial

namespace parallel {

std::vector<double> kde_density(std::span<const double> values, std::span<const double> xs,
                                double bandwidth);
std::vector<GridEvaluation> evaluate_grid(const SortedClass& data, const ThresholdGrid& grid,
                                          double lambda);
std::vector<double> min_cosine(std::span<const Vector> rows, std::span<const Vector> memory);
std::vector<double> max_offdiag_cosine(std::span<const Vector> rows);
std::size_t assign_nearest(std::span<const Vector> points, std::span<const Vector> centers,
                           std::span<int> assignment);
std::vector<Trajectory> reverse_sample_batch(const NoiseSchedule& schedule, const Mixture& mixture,
                                             std::span<const GuidanceSpec> guidance,
                                             std::span<const std::uint64_t> seeds,
                                             const ReverseOptions& options);

}  // namespace parallel

}  // namespace dgs
