#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dgs/distribution.hpp"
#include "dgs/manifest.hpp"
#include "dgs/smoothing.hpp"

namespace dgs {

enum class Strategy { seeded_random, center_nearest };
enum class DeficitRule { adjacent_spill, random_fill, fail };

Strategy parse_strategy(std::string_view name);
DeficitRule parse_deficit_rule(std::string_view name);
std::string_view to_string(Strategy strategy);
std::string_view to_string(DeficitRule rule);

struct SamplingPolicy {
  Strategy strategy = Strategy::seeded_random;
  std::uint64_t seed = 0;
  DeficitRule deficit_rule = DeficitRule::adjacent_spill;
};

/// Unmet demand of interval `from` served by surplus in interval `to`.
struct Spill {
  int from = 0;
  int to = 0;
  std::int64_t count = 0;
  bool operator==(const Spill&) const = default;
};

struct ClassReport {
  std::string label;
  Counts targets{};
  Counts supply{};
  Counts achieved{};     // selected items per interval they actually sit in
  Counts deficit{};      // targets[k] - items taken from interval k for its own demand
  Counts random_fill{};  // per interval, items drawn by the random-fill rule
  std::vector<Spill> spills;
  std::vector<std::string> selected_ids;

  std::int64_t total_deficit() const;
};

struct ClassSelection {
  std::vector<std::size_t> selected;  // positions into the input, ascending
  ClassReport report;
};

/// Selects plan.ipc items of one class following the plan's per-interval
/// targets, binning items by `difficulties` (the smoothed values in DGS).
///
/// Each interval first serves its own target: a seeded shuffle (stream
/// derived from seed, label and interval) or nearest-to-midpoint order with an
/// id tie-break. Unmet demand is then handled by the deficit rule:
/// adjacent-spill takes from the nearest interval with surplus (ties toward
/// the easier interval), random-fill draws uniformly from everything
/// unselected, fail throws DeficitError.
ClassSelection sample_class(const std::string& label, std::span<const std::string> ids,
                            std::span<const double> difficulties, const SamplingPlan& plan,
                            const SamplingPolicy& policy);

struct DgsOptions {
  std::int64_t ipc = 10;
  double lambda = 0.5;
  ThresholdGrid grid;
  Shape shape = Shape::scale;
  ShapeTemplates templates;
  SamplingPolicy policy;
  bool smoothing = true;
};

struct DgsResult {
  Manifest distilled;
  std::vector<SamplingPlan> plans;   // original label order
  std::vector<ClassReport> reports;  // original label order
  DatasetSmoothing original_smoothing;
  DatasetSmoothing pool_smoothing;

  std::int64_t total_deficit() const;
};

/// Difficulty-guided sampling over a whole dataset. Per class: smooth the
/// original and the pool independently, derive the plan from the smoothed
/// original histogram (or a predefined shape), and sample the pool against
/// its smoothed difficulties.
DgsResult dgs_run(const Manifest& original, const Manifest& pool, const DgsOptions& options);

/// Throws ValidationError unless both manifests carry the same label set.
void require_same_labels(const Manifest& a, const Manifest& b);

}  // namespace dgs
