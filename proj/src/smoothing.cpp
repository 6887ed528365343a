#include "dgs/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "dgs/error.hpp"
#include "dgs/kernels.hpp"
#include "parallel_for.hpp"

namespace dgs {

namespace {

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw DomainError("lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
}

void check_clip(ClipSpec spec, std::int64_t n) {
  if (spec.b < 0 || spec.t < 0) throw DomainError("clip thresholds must be nonnegative");
  if (spec.b + spec.t >= n) {
    throw DomainError("clip b + t = " + std::to_string(spec.b + spec.t) +
                      " leaves nothing of N = " + std::to_string(n));
  }
}

std::vector<std::size_t> rank_order(std::span<const double> d, std::span<const std::string> ids) {
  if (!ids.empty() && ids.size() != d.size()) {
    throw DomainError("ids and difficulties differ in length");
  }
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (d[a] != d[b]) return d[a] < d[b];
    if (!ids.empty()) return ids[a] < ids[b];
    return false;
  });
  return order;
}

double floored(double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DomainError("log transform needs nonnegative finite values, got " + std::to_string(v));
  }
  return std::max(v, kDifficultyFloor);
}

std::vector<double> transformed_values(const SortedClass& data, ClipSpec spec) {
  const auto n = data.size();
  const double lo = data.values[spec.b];
  const double hi = data.values[n - spec.t - 1];
  std::vector<double> out(data.values.size());
  for (std::int64_t r = 0; r < n; ++r) {
    double f;
    if (r < spec.b) {
      f = 0.0;
    } else if (r >= n - spec.t) {
      f = 1.0;
    } else {
      f = log_scale(data.values[r], lo, hi);
    }
    out[data.order[r]] = f;
  }
  return out;
}

SmoothingResult make_result(std::string label, const SortedClass& data, const GridEvaluation& eval,
                            double lambda) {
  SmoothingResult result;
  result.label = std::move(label);
  result.clip = eval.clip;
  result.transformed = transformed_values(data, eval.clip);
  result.objective = eval.objective;
  result.kl_to_original = eval.kl_to_original;
  result.kl_to_uniform = eval.kl_to_uniform;
  result.lambda = lambda;
  return result;
}

}  // namespace

std::vector<bool> clip(std::span<const double> difficulties, std::span<const std::string> ids,
                       ClipSpec spec) {
  const auto n = static_cast<std::int64_t>(difficulties.size());
  check_clip(spec, n);
  const auto order = rank_order(difficulties, ids);
  std::vector<bool> retained(difficulties.size(), true);
  for (std::int64_t r = 0; r < n; ++r) {
    if (r < spec.b || r >= n - spec.t) retained[order[r]] = false;
  }
  return retained;
}

double log_scale(double v, double lo, double hi) {
  // log1p keeps precision when hi / lo is close to 1.
  const double f = std::log1p((v - lo) / lo) / std::log1p((hi - lo) / lo);
  return std::clamp(f, 0.0, 1.0);
}

std::vector<double> log_transform(std::span<const double> retained) {
  if (retained.size() < 2) throw DegenerateDistribution("log transform needs at least two values");
  std::vector<double> v(retained.size());
  std::transform(retained.begin(), retained.end(), v.begin(), floored);
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw DegenerateDistribution("log transform of a constant sample (max == min)");
  for (auto& x : v) x = log_scale(x, lo, hi);
  return v;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw DomainError("KL histograms must have equal nonzero length");
  double p_total = 0.0;
  double q_total = 0.0;
  double p_mass = 0.0;
  double q_mass = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!(p[k] >= 0.0) || !(q[k] >= 0.0) || !std::isfinite(p[k]) || !std::isfinite(q[k])) {
      throw DomainError("KL histograms must have nonnegative finite bins");
    }
    p_mass += p[k];
    q_mass += q[k];
    p_total += p[k] + kKlEpsilon;
    q_total += q[k] + kKlEpsilon;
  }
  if (p_mass <= 0.0 || q_mass <= 0.0) throw DegenerateDistribution("KL of a zero-total histogram");
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double pk = (p[k] + kKlEpsilon) / p_total;
    const double qk = (q[k] + kKlEpsilon) / q_total;
    kl += pk * std::log(pk / qk);
  }
  return std::max(kl, 0.0);
}

double kl_divergence(const Counts& p, const Counts& q) {
  std::array<double, kIntervals> pd{};
  std::array<double, kIntervals> qd{};
  for (int k = 0; k < kIntervals; ++k) {
    pd[k] = static_cast<double>(p[k]);
    qd[k] = static_cast<double>(q[k]);
  }
  return kl_divergence(pd, qd);
}

SortedClass SortedClass::build(std::span<const double> difficulties, std::span<const std::string> ids) {
  SortedClass data;
  data.order = rank_order(difficulties, ids);
  data.values.reserve(difficulties.size());
  for (const auto i : data.order) data.values.push_back(floored(difficulties[i]));
  data.original = histogram({}, difficulties).counts;
  return data;
}

GridEvaluation evaluate_clip(const SortedClass& data, ClipSpec spec, double lambda) {
  GridEvaluation eval;
  eval.clip = spec;
  const auto n = data.size();
  const double lo = data.values[spec.b];
  const double hi = data.values[n - spec.t - 1];
  if (!(hi > lo)) {
    eval.degenerate = true;
    eval.objective = std::numeric_limits<double>::infinity();
    return eval;
  }
  Counts smoothed{};
  smoothed[0] += spec.b;
  smoothed[kIntervals - 1] += spec.t;
  for (std::int64_t r = spec.b; r < n - spec.t; ++r) {
    ++smoothed[bin_index(log_scale(data.values[r], lo, hi))];
  }
  Counts uniform;
  uniform.fill(1);
  eval.kl_to_original = kl_divergence(smoothed, data.original);
  eval.kl_to_uniform = kl_divergence(smoothed, uniform);
  eval.objective = lambda * eval.kl_to_original + (1.0 - lambda) * eval.kl_to_uniform;
  return eval;
}

SmoothingResult smoothing_objective(std::string label, std::span<const double> difficulties,
                                    std::span<const std::string> ids, ClipSpec spec, double lambda) {
  check_lambda(lambda);
  const auto data = SortedClass::build(difficulties, ids);
  check_clip(spec, data.size());
  const auto eval = evaluate_clip(data, spec, lambda);
  if (eval.degenerate) {
    throw DegenerateDistribution("retained values of class \"" + label + "\" are constant");
  }
  return make_result(std::move(label), data, eval, lambda);
}

std::vector<int> ThresholdGrid::percents() const {
  if (max_percent < 0 || max_percent >= 50 || step_percent <= 0) {
    throw DomainError("threshold grid needs 0 <= max_percent < 50 and a positive step");
  }
  std::vector<int> out;
  for (int p = 0; p <= max_percent; p += step_percent) out.push_back(p);
  return out;
}

std::vector<std::int64_t> ThresholdGrid::counts_for(std::int64_t n) const {
  std::set<std::int64_t> counts;
  for (const int p : percents()) counts.insert(n * p / 100);
  return {counts.begin(), counts.end()};
}

std::vector<ClipSpec> grid_points(const ThresholdGrid& grid, std::int64_t n) {
  const auto counts = grid.counts_for(n);
  std::vector<ClipSpec> out;
  for (const auto b : counts) {
    for (const auto t : counts) {
      if (b + t < n) out.push_back({b, t});
    }
  }
  return out;
}

SmoothingResult search_thresholds(std::string label, std::span<const double> difficulties,
                                  std::span<const std::string> ids, double lambda,
                                  const ThresholdGrid& grid) {
  check_lambda(lambda);
  const std::set<double> distinct(difficulties.begin(), difficulties.end());
  if (distinct.size() < 3) {
    throw DegenerateDistribution("class \"" + label + "\" has " + std::to_string(distinct.size()) +
                                 " distinct difficulties; at least 3 are needed");
  }
  const auto data = SortedClass::build(difficulties, ids);
  const auto evals = parallel::evaluate_grid(data, grid, lambda);

  const GridEvaluation* best = nullptr;
  for (const auto& e : evals) {
    if (e.degenerate) continue;
    if (best == nullptr || e.objective < best->objective) best = &e;
  }
  if (best == nullptr) {
    throw DegenerateDistribution("every threshold pair is degenerate for class \"" + label + "\"");
  }
  return make_result(std::move(label), data, *best, lambda);
}

const ClassSmoothing& DatasetSmoothing::at(const std::string& label) const {
  for (const auto& c : classes) {
    if (c.result.label == label) return c;
  }
  throw ValidationError("no smoothing result for label \"" + label + "\"");
}

DatasetSmoothing smooth_dataset(const Manifest& manifest, double lambda, const ThresholdGrid& grid) {
  check_lambda(lambda);
  grid.percents();
  DatasetSmoothing out;
  out.lambda = lambda;
  out.grid = grid;
  const auto labels = manifest.labels();
  out.classes.resize(labels.size());

  detail::parallel_for(labels.size(), [&](std::size_t c) {
    const auto idx = manifest.indices_of(labels[c]);
    std::vector<double> d;
    std::vector<std::string> ids;
    for (const auto i : idx) {
      d.push_back(manifest.items[i].difficulty);
      ids.push_back(manifest.items[i].id);
    }
    ClassSmoothing& slot = out.classes[c];
    try {
      slot.result = search_thresholds(labels[c], d, ids, lambda, grid);
    } catch (const DegenerateDistribution& e) {
      slot.degenerate = true;
      slot.warning = e.what();
      slot.result = SmoothingResult{};
      slot.result.label = labels[c];
      slot.result.lambda = lambda;
      slot.result.transformed = d;
      slot.result.objective = std::numeric_limits<double>::quiet_NaN();
      slot.result.kl_to_original = std::numeric_limits<double>::quiet_NaN();
      slot.result.kl_to_uniform = std::numeric_limits<double>::quiet_NaN();
    }
  });
  return out;
}

Manifest apply_smoothing(const Manifest& manifest, const DatasetSmoothing& smoothing) {
  Manifest out = manifest;
  for (const auto& cls : smoothing.classes) {
    const auto idx = manifest.indices_of(cls.result.label);
    if (idx.size() != cls.result.transformed.size()) {
      throw ValidationError("smoothing result for \"" + cls.result.label + "\" does not match the manifest");
    }
    for (std::size_t j = 0; j < idx.size(); ++j) {
      out.items[idx[j]].difficulty_smoothed = cls.result.transformed[j];
    }
  }
  return out;
}

}  // namespace dgs
