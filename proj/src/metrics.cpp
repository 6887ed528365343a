#include "dgs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dgs/error.hpp"
#include "dgs/kernels.hpp"
#include "dgs/sampler.hpp"

namespace dgs {

namespace {

void check_vectors(std::span<const Vector> rows, std::size_t dim, const char* what) {
  for (const auto& v : rows) {
    if (v.size() != dim) throw DomainError(std::string(what) + ": vector dimensions differ");
    if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) {
      throw DomainError(std::string(what) + ": zero vector has no direction");
    }
  }
}

}  // namespace

VectorSet VectorSet::from_manifest(const Manifest& manifest, const std::string& label) {
  if (manifest.latent_dim == 0) throw ValidationError("manifest carries no latent vectors");
  VectorSet set;
  for (const auto& item : manifest.items) {
    if (!label.empty() && item.label != label) continue;
    set.ids.push_back(item.id);
    set.vectors.push_back(item.latent);
  }
  return set;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw DomainError("cosine of vectors with different dimensions");
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw DomainError("cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

SimilarityMetric representativeness(const VectorSet& generated, const VectorSet& real_memory) {
  if (generated.size() == 0 || real_memory.size() == 0) {
    throw DomainError("representativeness needs non-empty generated and memory sets");
  }
  const auto dim = generated.vectors.front().size();
  check_vectors(generated.vectors, dim, "generated");
  check_vectors(real_memory.vectors, dim, "memory");
  SimilarityMetric m;
  m.per_item = parallel::min_cosine(generated.vectors, real_memory.vectors);
  m.aggregate = *std::min_element(m.per_item.begin(), m.per_item.end());
  return m;
}

SimilarityMetric diversity(const VectorSet& generated) {
  if (generated.size() < 2) throw DomainError("diversity needs at least two vectors");
  check_vectors(generated.vectors, generated.vectors.front().size(), "generated");
  SimilarityMetric m;
  m.per_item = parallel::max_offdiag_cosine(generated.vectors);
  m.aggregate = *std::max_element(m.per_item.begin(), m.per_item.end());
  return m;
}

BiasReport bias_report(const Manifest& original, const Manifest& pool) {
  require_same_labels(original, pool);
  BiasReport report;
  for (const auto& label : original.labels()) {
    auto collect = [&](const Manifest& m) {
      std::vector<double> d;
      for (const auto i : m.indices_of(label)) d.push_back(m.items[i].difficulty);
      return d;
    };
    const auto od = collect(original);
    const auto pd = collect(pool);
    const auto oh = histogram(label, od);
    const auto ph = histogram(label, pd);

    ClassBias bias;
    bias.label = label;
    for (int k = 0; k < kIntervals; ++k) {
      bias.delta[k] = static_cast<double>(ph.counts[k]) / static_cast<double>(ph.total) -
                      static_cast<double>(oh.counts[k]) / static_cast<double>(oh.total);
    }
    const auto mean = [](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    bias.mean_gap = mean(pd) - mean(od);
    bias.original_easiest_share = static_cast<double>(oh.counts[0]) / static_cast<double>(oh.total);
    bias.pool_easiest_share = static_cast<double>(ph.counts[0]) / static_cast<double>(ph.total);
    if (bias.original_easiest_share > 0.0) {
      bias.easiest_share_ratio = bias.pool_easiest_share / bias.original_easiest_share;
    } else {
      bias.easiest_share_ratio = bias.pool_easiest_share > 0.0
                                     ? std::numeric_limits<double>::infinity()
                                     : std::numeric_limits<double>::quiet_NaN();
    }
    report.classes.push_back(std::move(bias));
  }
  return report;
}

}  // namespace dgs
