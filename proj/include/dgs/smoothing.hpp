#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dgs/distribution.hpp"
#include "dgs/manifest.hpp"

namespace dgs {

/// Values below this are raised to it before the log transform.
inline constexpr double kDifficultyFloor = 1e-9;
/// Added to every bin of both arguments of the KL divergence before normalizing.
inline constexpr double kKlEpsilon = 1e-12;

/// Rank-based clipping: the `b` lowest and `t` highest ranked items are removed
/// before the transform.
struct ClipSpec {
  std::int64_t b = 0;
  std::int64_t t = 0;
  bool operator==(const ClipSpec&) const = default;
};

/// Retained flag per item, in input order. Items are ranked ascending by
/// difficulty with ties broken by id (or by position when `ids` is empty);
/// ranks 1..b and N-t+1..N are clipped.
std::vector<bool> clip(std::span<const double> difficulties, std::span<const std::string> ids,
                       ClipSpec spec);

/// ln(v / min) / ln(max / min) for v in [min, max]; 0 at min, 1 at max.
double log_scale(double v, double lo, double hi);

/// Variable-base log transform of the retained values. Values are floored at
/// kDifficultyFloor. Throws DegenerateDistribution when max == min.
std::vector<double> log_transform(std::span<const double> retained);

/// KL(p || q) over histograms after epsilon smoothing and normalization.
double kl_divergence(std::span<const double> p, std::span<const double> q);
double kl_divergence(const Counts& p, const Counts& q);

struct SmoothingResult {
  std::string label;
  ClipSpec clip;
  std::vector<double> transformed;  // aligned with input order
  double objective = 0.0;
  double kl_to_original = 0.0;
  double kl_to_uniform = 0.0;
  double lambda = 0.5;
};

/// Evaluates one clip setting: clip, transform the retained values (clipped
/// bottom items map to 0, clipped top items to 1), histogram, and combine
/// lambda * KL(P' || P) + (1 - lambda) * KL(P' || U).
SmoothingResult smoothing_objective(std::string label, std::span<const double> difficulties,
                                    std::span<const std::string> ids, ClipSpec spec, double lambda);

/// Percent-of-N threshold grid, applied independently to b and t.
struct ThresholdGrid {
  int max_percent = 20;
  int step_percent = 1;

  std::vector<int> percents() const;
  /// Distinct clip counts for a class of size n, ascending.
  std::vector<std::int64_t> counts_for(std::int64_t n) const;
};

/// A class's difficulties floored and sorted once for repeated grid evaluation.
struct SortedClass {
  std::vector<double> values;      // floored, ascending (ties by id)
  std::vector<std::size_t> order;  // rank -> input position
  Counts original{};               // histogram of the raw difficulties

  static SortedClass build(std::span<const double> difficulties, std::span<const std::string> ids);
  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
};

struct GridEvaluation {
  ClipSpec clip;
  double objective = 0.0;
  double kl_to_original = 0.0;
  double kl_to_uniform = 0.0;
  bool degenerate = false;
};

GridEvaluation evaluate_clip(const SortedClass& data, ClipSpec spec, double lambda);

/// Every valid (b, t) on the grid, b-major then t, both ascending.
std::vector<ClipSpec> grid_points(const ThresholdGrid& grid, std::int64_t n);

/// Exhaustive argmin of the objective over the grid. Ties go to the smaller b,
/// then the smaller t. Needs at least three distinct values.
SmoothingResult search_thresholds(std::string label, std::span<const double> difficulties,
                                  std::span<const std::string> ids, double lambda,
                                  const ThresholdGrid& grid = {});

struct ClassSmoothing {
  SmoothingResult result;
  bool degenerate = false;
  std::string warning;
};

struct DatasetSmoothing {
  std::vector<ClassSmoothing> classes;  // manifest label order
  double lambda = 0.5;
  ThresholdGrid grid;

  const ClassSmoothing& at(const std::string& label) const;
};

/// Runs the threshold search per class. Classes with fewer than three distinct
/// values are passed through untransformed and flagged degenerate.
DatasetSmoothing smooth_dataset(const Manifest& manifest, double lambda, const ThresholdGrid& grid = {});

/// Copy of `manifest` with `difficulty_smoothed` set on every item.
Manifest apply_smoothing(const Manifest& manifest, const DatasetSmoothing& smoothing);

}  // namespace dgs
