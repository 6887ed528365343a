#include "dgs/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dgs/error.hpp"
#include "dgs/kernels.hpp"

namespace dgs {

int bin_index(double d) {
  if (!(d >= 0.0 && d <= 1.0)) {
    throw DomainError("difficulty must lie in [0, 1], got " + std::to_string(d));
  }
  int k = std::min(kIntervals - 1, static_cast<int>(d * kIntervals));
  // d * 10 can round across a boundary; settle against the boundary doubles.
  if (k < kIntervals - 1 && d >= interval_lower(k + 1)) ++k;
  if (k > 0 && d < interval_lower(k)) --k;
  return k;
}

double interval_lower(int k) { return k / 10.0; }

double interval_midpoint(int k) { return (k + 0.5) / 10.0; }

DifficultyHistogram histogram(std::string label, std::span<const double> difficulties) {
  DifficultyHistogram hist;
  hist.label = std::move(label);
  for (const double d : difficulties) ++hist.counts[bin_index(d)];
  hist.total = static_cast<std::int64_t>(difficulties.size());
  return hist;
}

Counts apportion(const Counts& weights, std::int64_t seats) {
  if (seats <= 0) throw DomainError("ipc must be positive, got " + std::to_string(seats));
  __int128 total = 0;
  for (const auto w : weights) {
    if (w < 0) throw DomainError("negative weight in apportionment");
    total += w;
  }
  if (total == 0) throw DegenerateDistribution("cannot apportion over an all-zero histogram");

  Counts out{};
  std::array<__int128, kIntervals> remainder{};
  std::int64_t assigned = 0;
  for (int k = 0; k < kIntervals; ++k) {
    const __int128 scaled = static_cast<__int128>(seats) * weights[k];
    out[k] = static_cast<std::int64_t>(scaled / total);
    remainder[k] = scaled % total;
    assigned += out[k];
  }
  std::array<int, kIntervals> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainder[a] > remainder[b]; });
  // Fewer than kIntervals seats remain, and each goes to a positive remainder.
  for (std::int64_t i = 0; i < seats - assigned; ++i) ++out[order[i]];
  return out;
}

SamplingPlan scale_to_ipc(const DifficultyHistogram& hist, std::int64_t ipc) {
  SamplingPlan plan;
  plan.label = hist.label;
  plan.ipc = ipc;
  plan.targets = apportion(hist.counts, ipc);
  return plan;
}

Shape parse_shape(std::string_view name) {
  if (name == "scale") return Shape::scale;
  if (name == "hill") return Shape::hill;
  if (name == "ground") return Shape::ground;
  if (name == "slope") return Shape::slope;
  if (name == "cliff") return Shape::cliff;
  throw DomainError("unknown sampling shape \"" + std::string(name) + "\"");
}

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::scale: return "scale";
    case Shape::hill: return "hill";
    case Shape::ground: return "ground";
    case Shape::slope: return "slope";
    case Shape::cliff: return "cliff";
  }
  return "unknown";
}

const Counts& ShapeTemplates::of(Shape shape) const {
  switch (shape) {
    case Shape::hill: return hill;
    case Shape::ground: return ground;
    case Shape::slope: return slope;
    case Shape::cliff: return cliff;
    case Shape::scale: break;
  }
  throw DomainError("\"scale\" has no fixed template; it is derived from the original histogram");
}

SamplingPlan predefined_plan(Shape shape, std::int64_t ipc, std::string label,
                             const ShapeTemplates& templates) {
  SamplingPlan plan;
  plan.label = std::move(label);
  plan.ipc = ipc;
  plan.targets = apportion(templates.of(shape), ipc);
  return plan;
}

double silverman_bandwidth(std::span<const double> values) {
  const auto n = values.size();
  if (n == 0) throw DomainError("bandwidth of an empty sample");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * (n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = (quantile(0.75) - quantile(0.25)) / 1.34;

  double spread = std::min(sd, iqr);
  if (spread <= 0.0) spread = std::max(sd, iqr);
  if (spread <= 0.0) return 0.05;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

std::vector<KdePoint> kde_curve(std::span<const double> values, const KdeOptions& options) {
  if (values.empty()) throw DomainError("KDE of an empty sample");
  if (options.grid < 2) throw DomainError("KDE grid needs at least two points");
  if (!(options.hi > options.lo)) throw DomainError("KDE grid range is empty");
  const double h = options.bandwidth ? *options.bandwidth : silverman_bandwidth(values);
  if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("KDE bandwidth must be positive");

  std::vector<double> xs(options.grid);
  const double step = (options.hi - options.lo) / static_cast<double>(options.grid - 1);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = options.lo + step * static_cast<double>(i);

  const auto raw = parallel::kde_density(values, xs, h);
  const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * M_PI));
  std::vector<KdePoint> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = {xs[i], raw[i] * norm};
  return out;
}

}  // namespace dgs
