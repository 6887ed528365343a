#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgs/kmeans.hpp"
#include "dgs/manifest.hpp"

namespace dgs {

using Vector = std::vector<double>;

/// Discrete variance schedule over steps t = 1..T. Vectors are indexed by t - 1.
struct NoiseSchedule {
  std::vector<double> beta;
  std::vector<double> alpha_bar;
  std::vector<double> sigma;  // posterior std of the reverse step, sigma_1 = 0

  int steps() const { return static_cast<int>(alpha_bar.size()); }
  /// alpha_bar at step t, with alpha_bar(0) = 1. Steps outside [0, T] throw DomainError.
  double alpha_bar_at(int t) const;
  double beta_at(int t) const;
  double sigma_at(int t) const;

  /// T betas spaced linearly from beta_start to beta_end.
  static NoiseSchedule linear(int steps = 50, double beta_start = 1e-4, double beta_end = 0.02);

  /// `steps` evenly spaced timesteps of a `train_steps` linear schedule. Step t
  /// maps to train step round(t * train_steps / steps), and each reverse step
  /// jumps between consecutive selected timesteps.
  static NoiseSchedule respaced(int steps = 50, int train_steps = 1000, double beta_start = 1e-4,
                                double beta_end = 0.02);

  /// Builds betas and posterior stds from a strictly decreasing alpha_bar.
  static NoiseSchedule from_alpha_bar(std::vector<double> alpha_bar);
};

struct MixtureComponent {
  double weight = 1.0;
  Vector mean;
  double std = 1.0;  // isotropic; 0 is a point mass
};

/// Isotropic Gaussian mixture standing in for the data distribution.
struct Mixture {
  std::size_t dim = 0;
  std::vector<MixtureComponent> components;

  /// Throws ValidationError unless weights are positive and sum to 1 (within
  /// 1e-9), stds are nonnegative, and every mean has `dim` entries.
  void validate() const;
  Vector sample(Rng& rng) const;
};

Mixture parse_mixture(const std::string& json_text);
Mixture load_mixture(const std::filesystem::path& path);
std::string mixture_to_json(const Mixture& mixture);

/// sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * noise.
Vector forward_diffuse(std::span<const double> z0, int t, const NoiseSchedule& schedule,
                       std::span<const double> noise);

/// Closed-form E[z0 | z_t] when z0 is drawn from `mixture` and z_t from the
/// forward process. Responsibilities are computed in log space.
Vector gmm_posterior_mean(std::span<const double> z_t, int t, const Mixture& mixture,
                          const NoiseSchedule& schedule);

struct GuidanceSpec {
  Vector center;
  double lambda_gui = 0.0;
  int t_stop = 25;

  /// Guidance runs while the countdown t is at or above t_stop.
  bool active_at(int t) const { return t >= t_stop; }
};

/// z + lambda_gui * (center - z) * sigma_t.
Vector guide(std::span<const double> z, const GuidanceSpec& spec, double sigma_t);

/// Which sigma scales the guidance term.
enum class SigmaKind { posterior, marginal };
/// Whether guidance moves the predicted clean vector or the noisy state.
enum class GuidanceTarget { predicted_clean, noisy };

struct ReverseOptions {
  SigmaKind sigma_kind = SigmaKind::posterior;
  GuidanceTarget target = GuidanceTarget::predicted_clean;
};

double guidance_sigma(const NoiseSchedule& schedule, int t, SigmaKind kind);

struct Trajectory {
  std::vector<Vector> states;  // z_T, z_{T-1}, ..., z_0

  const Vector& final_state() const { return states.back(); }
};

/// Ancestral sampling from t = T down to 1 with the analytic denoiser.
/// z_T and every step's noise come from one stream seeded with `seed`; the
/// noise is drawn identically with or without guidance, so paired runs differ
/// only by the guidance term. No noise is added on the last step.
Trajectory reverse_sample(const NoiseSchedule& schedule, const Mixture& mixture,
                          const GuidanceSpec* guidance, std::uint64_t seed,
                          const ReverseOptions& options = {});

struct DagOptions {
  std::int64_t ipc = 10;
  double lambda_gui = 1.0;
  int t_stop = 25;
  std::uint64_t seed = 0;
  KMeansOptions kmeans;
  ReverseOptions reverse;
};

struct DagClass {
  std::string label;
  SamplingPlan plan;
  std::vector<IntervalCenters> intervals;
};

struct DagResult {
  Manifest generated;
  std::vector<DagClass> classes;  // original label order
};

/// Per class: scale the raw difficulty histogram to ipc, cluster each interval
/// into its target number of centers.
std::vector<DagClass> dag_cluster(const Manifest& original, std::int64_t ipc, std::uint64_t seed,
                                  const KMeansOptions& kmeans = {});

/// Clusters, then runs one guided reverse sample per center. Each generated
/// item carries the center's interval, its id, and the mean difficulty of the
/// center's members.
DagResult dag_run(const Manifest& original, const Mixture& mixture, const NoiseSchedule& schedule,
                  const DagOptions& options);

}  // namespace dgs
