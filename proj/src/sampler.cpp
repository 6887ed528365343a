#include "dgs/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dgs/error.hpp"
#include "dgs/rng.hpp"
#include "parallel_for.hpp"

namespace dgs {

namespace {

// Stream index for random-fill draws; interval streams use 0..9.
constexpr std::uint64_t kFillStream = 1000;

std::vector<double> values_of(const Manifest& m, const std::vector<std::size_t>& idx,
                              const DatasetSmoothing* smoothing, const std::string& label) {
  if (smoothing != nullptr) return smoothing->at(label).result.transformed;
  std::vector<double> out;
  out.reserve(idx.size());
  for (const auto i : idx) out.push_back(m.items[i].difficulty);
  return out;
}

std::vector<std::string> ids_of(const Manifest& m, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (const auto i : idx) out.push_back(m.items[i].id);
  return out;
}

}  // namespace

Strategy parse_strategy(std::string_view name) {
  if (name == "seeded-random") return Strategy::seeded_random;
  if (name == "center-nearest") return Strategy::center_nearest;
  throw DomainError("unknown sampling strategy \"" + std::string(name) + "\"");
}

DeficitRule parse_deficit_rule(std::string_view name) {
  if (name == "adjacent-spill") return DeficitRule::adjacent_spill;
  if (name == "random-fill") return DeficitRule::random_fill;
  if (name == "fail") return DeficitRule::fail;
  throw DomainError("unknown deficit rule \"" + std::string(name) + "\"");
}

std::string_view to_string(Strategy strategy) {
  return strategy == Strategy::seeded_random ? "seeded-random" : "center-nearest";
}

std::string_view to_string(DeficitRule rule) {
  switch (rule) {
    case DeficitRule::adjacent_spill: return "adjacent-spill";
    case DeficitRule::random_fill: return "random-fill";
    case DeficitRule::fail: return "fail";
  }
  return "unknown";
}

std::int64_t ClassReport::total_deficit() const {
  return std::accumulate(deficit.begin(), deficit.end(), std::int64_t{0});
}

std::int64_t DgsResult::total_deficit() const {
  std::int64_t total = 0;
  for (const auto& r : reports) total += r.total_deficit();
  return total;
}

ClassSelection sample_class(const std::string& label, std::span<const std::string> ids,
                            std::span<const double> difficulties, const SamplingPlan& plan,
                            const SamplingPolicy& policy) {
  if (ids.size() != difficulties.size()) throw DomainError("ids and difficulties differ in length");
  if (plan.ipc < 1) throw DomainError("plan ipc must be at least 1");
  if (std::accumulate(plan.targets.begin(), plan.targets.end(), std::int64_t{0}) != plan.ipc) {
    throw DomainError("plan targets do not sum to ipc for class \"" + label + "\"");
  }
  const auto n = static_cast<std::int64_t>(ids.size());
  if (n < plan.ipc) {
    throw InsufficientSupply("class \"" + label + "\" has " + std::to_string(n) +
                             " pool items, fewer than ipc " + std::to_string(plan.ipc));
  }

  ClassReport report;
  report.label = label;
  report.targets = plan.targets;

  std::array<std::vector<std::size_t>, kIntervals> bins;
  for (std::size_t i = 0; i < ids.size(); ++i) bins[bin_index(difficulties[i])].push_back(i);

  for (int k = 0; k < kIntervals; ++k) {
    auto& bin = bins[k];
    report.supply[k] = static_cast<std::int64_t>(bin.size());
    if (policy.strategy == Strategy::seeded_random) {
      Rng rng(derive_seed(policy.seed, label, {static_cast<std::uint64_t>(k)}));
      rng.shuffle(std::span<std::size_t>(bin));
    } else {
      const double mid = interval_midpoint(k);
      std::sort(bin.begin(), bin.end(), [&](std::size_t a, std::size_t b) {
        const double da = std::abs(difficulties[a] - mid);
        const double db = std::abs(difficulties[b] - mid);
        if (da != db) return da < db;
        return ids[a] < ids[b];
      });
    }
  }

  std::array<std::int64_t, kIntervals> cursor{};
  std::vector<std::size_t> selected;
  auto take = [&](int k, std::int64_t count) {
    for (std::int64_t j = 0; j < count; ++j) selected.push_back(bins[k][cursor[k]++]);
    report.achieved[k] += count;
  };

  for (int k = 0; k < kIntervals; ++k) {
    const auto own = std::min(plan.targets[k], report.supply[k]);
    take(k, own);
    report.deficit[k] = plan.targets[k] - own;
  }

  const auto total_deficit = report.total_deficit();
  if (total_deficit > 0) {
    switch (policy.deficit_rule) {
      case DeficitRule::fail:
        throw DeficitError("class \"" + label + "\" is short " + std::to_string(total_deficit) +
                           " items against its plan");
      case DeficitRule::adjacent_spill:
        for (int k = 0; k < kIntervals; ++k) {
          auto need = report.deficit[k];
          for (int dist = 1; need > 0 && dist < kIntervals; ++dist) {
            for (const int dest : {k - dist, k + dist}) {
              if (need == 0 || dest < 0 || dest >= kIntervals) continue;
              const auto count = std::min(need, report.supply[dest] - cursor[dest]);
              if (count <= 0) continue;
              take(dest, count);
              report.spills.push_back({k, dest, count});
              need -= count;
            }
          }
        }
        break;
      case DeficitRule::random_fill: {
        std::vector<bool> used(ids.size(), false);
        for (const auto i : selected) used[i] = true;
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < ids.size(); ++i) {
          if (!used[i]) rest.push_back(i);
        }
        Rng rng(derive_seed(policy.seed, label, {kFillStream}));
        rng.shuffle(std::span<std::size_t>(rest));
        for (std::int64_t j = 0; j < total_deficit; ++j) {
          const auto i = rest[j];
          const int k = bin_index(difficulties[i]);
          selected.push_back(i);
          ++report.achieved[k];
          ++report.random_fill[k];
        }
        break;
      }
    }
  }

  std::sort(selected.begin(), selected.end());
  for (const auto i : selected) report.selected_ids.push_back(ids[i]);
  return {std::move(selected), std::move(report)};
}

void require_same_labels(const Manifest& a, const Manifest& b) {
  const auto la = a.labels();
  const auto lb = b.labels();
  const std::set<std::string> sa(la.begin(), la.end());
  const std::set<std::string> sb(lb.begin(), lb.end());
  if (sa != sb) {
    std::string msg = "label sets differ:";
    for (const auto& l : sa) {
      if (!sb.count(l)) msg += " \"" + l + "\" missing from the pool;";
    }
    for (const auto& l : sb) {
      if (!sa.count(l)) msg += " \"" + l + "\" missing from the original;";
    }
    throw ValidationError(msg);
  }
}

DgsResult dgs_run(const Manifest& original, const Manifest& pool, const DgsOptions& options) {
  validate(original);
  validate(pool);
  require_same_labels(original, pool);
  if (options.ipc < 1) throw DomainError("ipc must be at least 1");

  DgsResult result;
  if (options.smoothing) {
    result.original_smoothing = smooth_dataset(original, options.lambda, options.grid);
    result.pool_smoothing = smooth_dataset(pool, options.lambda, options.grid);
  }
  const DatasetSmoothing* orig_s = options.smoothing ? &result.original_smoothing : nullptr;
  const DatasetSmoothing* pool_s = options.smoothing ? &result.pool_smoothing : nullptr;

  const auto labels = original.labels();
  result.plans.resize(labels.size());
  std::vector<ClassSelection> selections(labels.size());
  std::vector<std::vector<std::size_t>> pool_idx(labels.size());
  std::vector<std::vector<double>> pool_values(labels.size());

  detail::parallel_for(labels.size(), [&](std::size_t c) {
    const auto& label = labels[c];
    if (options.shape == Shape::scale) {
      const auto values = values_of(original, original.indices_of(label), orig_s, label);
      result.plans[c] = scale_to_ipc(histogram(label, values), options.ipc);
    } else {
      result.plans[c] = predefined_plan(options.shape, options.ipc, label, options.templates);
    }
    pool_idx[c] = pool.indices_of(label);
    pool_values[c] = values_of(pool, pool_idx[c], pool_s, label);
    const auto ids = ids_of(pool, pool_idx[c]);
    selections[c] = sample_class(label, ids, pool_values[c], result.plans[c], options.policy);
  });

  result.distilled.role = Role::distilled;
  result.distilled.latent_dim = pool.latent_dim;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    for (const auto j : selections[c].selected) {
      Item item = pool.items[pool_idx[c][j]];
      const double v = pool_values[c][j];
      item.difficulty_smoothed = options.smoothing ? std::optional<double>(v) : std::nullopt;
      item.interval = bin_index(v);
      result.distilled.items.push_back(std::move(item));
    }
    result.reports.push_back(std::move(selections[c].report));
  }
  return result;
}

}  // namespace dgs
