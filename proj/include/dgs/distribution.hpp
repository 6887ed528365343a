#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dgs {

/// The difficulty range [0, 1] is split into ten intervals of width 0.1.
/// Interval k covers [k/10, (k+1)/10), except the last which is closed at 1.
inline constexpr int kIntervals = 10;

using Counts = std::array<std::int64_t, kIntervals>;

/// Interval holding `d`. Boundaries are the doubles k / 10.0, so a literal
/// 0.3 lands in interval 3. Throws DomainError outside [0, 1].
int bin_index(double d);

double interval_lower(int k);
double interval_midpoint(int k);

struct DifficultyHistogram {
  std::string label;
  Counts counts{};
  std::int64_t total = 0;
};

DifficultyHistogram histogram(std::string label, std::span<const double> difficulties);

struct SamplingPlan {
  std::string label;
  Counts targets{};
  std::int64_t ipc = 0;
};

/// Largest-remainder (Hamilton) apportionment of `seats` over `weights`.
/// Remainder ties go to the lower index. Exact integer arithmetic, so the
/// result is invariant under scaling all weights by a positive integer.
Counts apportion(const Counts& weights, std::int64_t seats);

/// Scales a class histogram to `ipc` targets.
SamplingPlan scale_to_ipc(const DifficultyHistogram& hist, std::int64_t ipc);

enum class Shape { scale, hill, ground, slope, cliff };

Shape parse_shape(std::string_view name);
std::string_view to_string(Shape shape);

/// Weight templates for the predefined plans; bin 0 is the easiest interval.
struct ShapeTemplates {
  Counts hill{1, 2, 3, 4, 5, 5, 4, 3, 2, 1};
  Counts ground{1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  Counts slope{10, 9, 8, 7, 6, 5, 4, 3, 2, 1};
  Counts cliff{40, 20, 10, 5, 2, 1, 1, 1, 0, 0};

  const Counts& of(Shape shape) const;
};

SamplingPlan predefined_plan(Shape shape, std::int64_t ipc, std::string label = {},
                             const ShapeTemplates& templates = {});

struct KdePoint {
  double x;
  double density;
};

struct KdeOptions {
  std::optional<double> bandwidth;  // Silverman's rule when absent
  std::size_t grid = 101;
  double lo = 0.0;
  double hi = 1.0;
};

/// Silverman's rule of thumb, 0.9 * min(sd, IQR / 1.34) * n^(-1/5).
/// Falls back to whichever spread is nonzero, then to 0.05 for a point mass.
double silverman_bandwidth(std::span<const double> values);

/// Gaussian KDE normalized to unit mass, evaluated on an even grid. Report-only.
std::vector<KdePoint> kde_curve(std::span<const double> values, const KdeOptions& options = {});

}  // namespace dgs
