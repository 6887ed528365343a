#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "dgs/distribution.hpp"
#include "dgs/manifest.hpp"

namespace dgs {

using Vector = std::vector<double>;

struct VectorSet {
  std::vector<std::string> ids;
  std::vector<Vector> vectors;

  std::size_t size() const { return vectors.size(); }

  /// Latents of every item (or of one label when `label` is non-empty).
  static VectorSet from_manifest(const Manifest& manifest, const std::string& label = {});
};

/// Cosine similarity. Throws DomainError on a zero vector or a dimension mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

struct SimilarityMetric {
  std::vector<double> per_item;
  double aggregate = 0.0;
};

/// For each generated vector, its least similar real vector; aggregate is the
/// minimum over generated vectors.
SimilarityMetric representativeness(const VectorSet& generated, const VectorSet& real_memory);

/// For each generated vector, its most similar other generated vector;
/// aggregate is the maximum. Lower means more diverse.
SimilarityMetric diversity(const VectorSet& generated);

struct ClassBias {
  std::string label;
  std::array<double, kIntervals> delta{};  // pool share - original share, per interval
  double mean_gap = 0.0;                   // mean pool difficulty - mean original difficulty
  double original_easiest_share = 0.0;
  double pool_easiest_share = 0.0;
  double easiest_share_ratio = 0.0;        // pool / original; +inf when the original share is 0
};

struct BiasReport {
  std::vector<ClassBias> classes;  // original label order
};

/// Per-class comparison of the raw difficulty distributions of a pool and the
/// original data.
BiasReport bias_report(const Manifest& original, const Manifest& pool);

}  // namespace dgs
