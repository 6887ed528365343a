#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dgs {

/// Which of the two mutually exclusive difficulty fields a record was read from.
/// Kept so that writing reproduces the record exactly.
enum class DifficultySource { prob_true, difficulty };

enum class Role { original, pool, distilled };

struct Item {
  std::string id;
  std::string label;
  double prob_true = 1.0;
  double difficulty = 0.0;
  DifficultySource source = DifficultySource::difficulty;
  std::vector<double> latent;
  std::optional<std::string> path;

  // Annotations added by the pipeline (smoothing, sampling, guided generation).
  std::optional<double> difficulty_smoothed;
  std::optional<int> interval;
  std::optional<std::string> center_id;

  bool operator==(const Item&) const = default;
};

struct Manifest {
  std::vector<Item> items;
  Role role = Role::original;
  std::size_t latent_dim = 0;

  /// Distinct labels in order of first appearance.
  std::vector<std::string> labels() const;

  /// Item positions carrying `label`, in manifest order.
  std::vector<std::size_t> indices_of(std::string_view label) const;

  bool operator==(const Manifest&) const = default;
};

/// Difficulty of an item: one minus the classifier's probability on the true class.
double difficulty(double prob_true);

Item item_from_prob(std::string id, std::string label, double prob_true);
Item item_from_difficulty(std::string id, std::string label, double difficulty);

struct ManifestIssue {
  std::size_t line = 0;  // 1-based; 0 for manifest-level problems
  std::string id;        // empty when not attributable to a record
  std::string message;
};

/// Result of parsing a manifest while collecting every problem found.
struct ManifestCheck {
  Manifest manifest;
  std::vector<ManifestIssue> issues;
  bool ok() const { return issues.empty(); }
};

ManifestCheck check_manifest(std::istream& in, Role role = Role::original);
ManifestCheck check_manifest_file(const std::filesystem::path& path, Role role = Role::original);

/// Parses and validates; throws ValidationError describing the first issue.
Manifest parse_manifest(std::istream& in, Role role = Role::original);
Manifest load_manifest(const std::filesystem::path& path, Role role = Role::original);

/// Throws ValidationError if the in-memory manifest breaks any invariant.
void validate(const Manifest& manifest);

void write_manifest(const Manifest& manifest, std::ostream& out);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

/// One JSONL record. Reals use the shortest decimal form that round-trips.
std::string to_json_line(const Item& item);

/// Shortest round-trip decimal form of a finite double.
std::string format_real(double value);

}  // namespace dgs
