#include "dgs/dag.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dgs/error.hpp"
#include "dgs/kernels.hpp"
#include "dgs/smoothing.hpp"
#include "parallel_for.hpp"

namespace dgs {

namespace {

// Stream tag separating per-center sampling seeds from the k-means streams.
constexpr std::uint64_t kGenerateStream = 0xda6;

NoiseSchedule finish(std::vector<double> beta, std::vector<double> alpha_bar) {
  NoiseSchedule s;
  s.beta = std::move(beta);
  s.alpha_bar = std::move(alpha_bar);
  s.sigma.resize(s.alpha_bar.size());
  for (int t = 1; t <= s.steps(); ++t) {
    const double prev = s.alpha_bar_at(t - 1);
    const double cur = s.alpha_bar_at(t);
    s.sigma[static_cast<std::size_t>(t - 1)] =
        cur < 1.0 ? std::sqrt(s.beta_at(t) * (1.0 - prev) / (1.0 - cur)) : 0.0;
  }
  return s;
}

void check_step(const NoiseSchedule& s, int t) {
  if (t < 1 || t > s.steps()) {
    throw DomainError("step " + std::to_string(t) + " outside [1, " + std::to_string(s.steps()) + "]");
  }
}

void check_alpha_bar(const std::vector<double>& ab) {
  if (ab.empty()) throw DomainError("noise schedule needs at least one step");
  double prev = 1.0;
  for (std::size_t i = 0; i < ab.size(); ++i) {
    // A noise-free first step (alpha_bar_1 = 1) is allowed.
    if (!(ab[i] > 0.0 && ab[i] < prev) && !(i == 0 && ab[i] == 1.0)) {
      throw DomainError("alpha_bar must be strictly decreasing within (0, 1]");
    }
    prev = ab[i];
  }
}

}  // namespace

double NoiseSchedule::alpha_bar_at(int t) const {
  if (t == 0) return 1.0;
  check_step(*this, t);
  return alpha_bar[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::beta_at(int t) const {
  check_step(*this, t);
  return beta[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::sigma_at(int t) const {
  check_step(*this, t);
  return sigma[static_cast<std::size_t>(t - 1)];
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw DomainError("schedule needs at least one step");
  if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
    throw DomainError("linear schedule needs 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> beta(static_cast<std::size_t>(steps));
  std::vector<double> ab(beta.size());
  double prod = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    beta[static_cast<std::size_t>(i)] = beta_start + (beta_end - beta_start) * frac;
    prod *= 1.0 - beta[static_cast<std::size_t>(i)];
    ab[static_cast<std::size_t>(i)] = prod;
  }
  return finish(std::move(beta), std::move(ab));
}

NoiseSchedule NoiseSchedule::respaced(int steps, int train_steps, double beta_start, double beta_end) {
  if (steps < 1 || train_steps < steps) throw DomainError("respacing needs 1 <= steps <= train_steps");
  const auto train = linear(train_steps, beta_start, beta_end);
  std::vector<double> ab;
  for (int t = 1; t <= steps; ++t) {
    const long long tau = (static_cast<long long>(t) * train_steps + steps / 2) / steps;
    ab.push_back(train.alpha_bar_at(static_cast<int>(tau)));
  }
  return from_alpha_bar(std::move(ab));
}

NoiseSchedule NoiseSchedule::from_alpha_bar(std::vector<double> alpha_bar) {
  check_alpha_bar(alpha_bar);
  std::vector<double> beta(alpha_bar.size());
  double prev = 1.0;
  for (std::size_t i = 0; i < alpha_bar.size(); ++i) {
    beta[i] = 1.0 - alpha_bar[i] / prev;
    prev = alpha_bar[i];
  }
  return finish(std::move(beta), std::move(alpha_bar));
}

void Mixture::validate() const {
  if (dim == 0) throw ValidationError("mixture dimension must be positive");
  if (components.empty()) throw ValidationError("mixture has no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) throw ValidationError("mixture weights must be positive");
    if (!(c.std >= 0.0) || !std::isfinite(c.std)) throw ValidationError("mixture stds must be nonnegative");
    if (c.mean.size() != dim) throw ValidationError("mixture mean dimension differs from dim");
    for (const double m : c.mean) {
      if (!std::isfinite(m)) throw ValidationError("mixture mean is not finite");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("mixture weights must sum to 1");
}

Vector Mixture::sample(Rng& rng) const {
  const double u = rng.uniform();
  double acc = 0.0;
  const MixtureComponent* pick = &components.back();
  for (const auto& c : components) {
    acc += c.weight;
    if (u < acc) {
      pick = &c;
      break;
    }
  }
  Vector x(dim);
  for (std::size_t i = 0; i < dim; ++i) x[i] = pick->mean[i] + pick->std * rng.normal();
  return x;
}

Mixture parse_mixture(const std::string& json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("mixture config is not valid JSON: ") + e.what());
  }
  Mixture m;
  try {
    for (const auto& [key, _] : doc.items()) {
      if (key != "dim" && key != "components") throw ValidationError("unknown mixture field \"" + key + "\"");
    }
    m.dim = doc.at("dim").get<std::size_t>();
    for (const auto& c : doc.at("components")) {
      for (const auto& [key, _] : c.items()) {
        if (key != "weight" && key != "mean" && key != "std") {
          throw ValidationError("unknown mixture component field \"" + key + "\"");
        }
      }
      MixtureComponent comp;
      comp.weight = c.at("weight").get<double>();
      comp.mean = c.at("mean").get<Vector>();
      comp.std = c.at("std").get<double>();
      m.components.push_back(std::move(comp));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed mixture config: ") + e.what());
  }
  m.validate();
  return m;
}

Mixture load_mixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mixture config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mixture(ss.str());
}

std::string mixture_to_json(const Mixture& mixture) {
  nlohmann::ordered_json doc;
  doc["dim"] = mixture.dim;
  doc["components"] = nlohmann::ordered_json::array();
  for (const auto& c : mixture.components) {
    doc["components"].push_back({{"weight", c.weight}, {"mean", c.mean}, {"std", c.std}});
  }
  return doc.dump();
}

Vector forward_diffuse(std::span<const double> z0, int t, const NoiseSchedule& schedule,
                       std::span<const double> noise) {
  check_step(schedule, t);
  if (z0.size() != noise.size()) throw DomainError("forward_diffuse: noise dimension differs from z0");
  const double ab = schedule.alpha_bar_at(t);
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  Vector out(z0.size());
  for (std::size_t i = 0; i < z0.size(); ++i) out[i] = a * z0[i] + b * noise[i];
  return out;
}

Vector gmm_posterior_mean(std::span<const double> z_t, int t, const Mixture& mixture,
                          const NoiseSchedule& schedule) {
  check_step(schedule, t);
  if (z_t.size() != mixture.dim) throw DomainError("posterior mean: z_t dimension differs from the mixture");
  const double ab = schedule.alpha_bar_at(t);
  const double sa = std::sqrt(ab);
  const auto d = static_cast<double>(mixture.dim);
  const auto n = mixture.components.size();

  std::vector<double> logw(n, -std::numeric_limits<double>::infinity());
  std::vector<Vector> means(n, Vector(mixture.dim));
  std::vector<double> sq(n, 0.0);
  bool exact_point_mass = false;
  for (std::size_t c = 0; c < n; ++c) {
    const auto& comp = mixture.components[c];
    const double s2 = comp.std * comp.std;
    const double var = ab * s2 + (1.0 - ab);
    for (std::size_t i = 0; i < mixture.dim; ++i) {
      const double r = z_t[i] - sa * comp.mean[i];
      sq[c] += r * r;
    }
    if (var > 0.0) {
      logw[c] = std::log(comp.weight) - 0.5 * d * std::log(2.0 * M_PI * var) - sq[c] / (2.0 * var);
      for (std::size_t i = 0; i < mixture.dim; ++i) {
        means[c][i] = (sa * s2 * z_t[i] + (1.0 - ab) * comp.mean[i]) / var;
      }
    } else {
      // Noise-free point mass: only an exact hit has positive (infinite) density.
      means[c] = comp.mean;
      if (sq[c] == 0.0) exact_point_mass = true;
    }
  }

  if (exact_point_mass) {
    for (std::size_t c = 0; c < n; ++c) {
      const auto& comp = mixture.components[c];
      const bool hit = comp.std == 0.0 && ab == 1.0 && sq[c] == 0.0;
      logw[c] = hit ? std::log(comp.weight) : -std::numeric_limits<double>::infinity();
    }
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(top)) {
    const auto nearest = static_cast<std::size_t>(std::min_element(sq.begin(), sq.end()) - sq.begin());
    return means[nearest];
  }
  double total = 0.0;
  std::vector<double> resp(n);
  for (std::size_t c = 0; c < n; ++c) {
    resp[c] = std::exp(logw[c] - top);
    total += resp[c];
  }
  Vector out(mixture.dim, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    const double r = resp[c] / total;
    if (r == 0.0) continue;
    for (std::size_t i = 0; i < mixture.dim; ++i) out[i] += r * means[c][i];
  }
  return out;
}

Vector guide(std::span<const double> z, const GuidanceSpec& spec, double sigma_t) {
  if (z.size() != spec.center.size()) throw DomainError("guide: center dimension differs from z");
  Vector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = z[i] + spec.lambda_gui * (spec.center[i] - z[i]) * sigma_t;
  }
  return out;
}

double guidance_sigma(const NoiseSchedule& schedule, int t, SigmaKind kind) {
  check_step(schedule, t);
  return kind == SigmaKind::posterior ? schedule.sigma_at(t) : std::sqrt(1.0 - schedule.alpha_bar_at(t));
}

Trajectory reverse_sample(const NoiseSchedule& schedule, const Mixture& mixture,
                          const GuidanceSpec* guidance, std::uint64_t seed,
                          const ReverseOptions& options) {
  mixture.validate();
  if (guidance != nullptr) {
    if (guidance->center.size() != mixture.dim) throw DomainError("guidance center dimension differs from the mixture");
    if (!(guidance->lambda_gui >= 0.0)) throw DomainError("lambda_gui must be nonnegative");
  }
  Rng rng(seed);
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(schedule.steps()) + 1);
  Vector z = rng.normal_vector(mixture.dim);
  traj.states.push_back(z);

  for (int t = schedule.steps(); t >= 1; --t) {
    const bool active = guidance != nullptr && guidance->active_at(t);
    const double gs = active ? guidance_sigma(schedule, t, options.sigma_kind) : 0.0;
    if (active && options.target == GuidanceTarget::noisy) z = guide(z, *guidance, gs);
    Vector x0 = gmm_posterior_mean(z, t, mixture, schedule);
    if (active && options.target == GuidanceTarget::predicted_clean) x0 = guide(x0, *guidance, gs);

    const double ab = schedule.alpha_bar_at(t);
    const double ab_prev = schedule.alpha_bar_at(t - 1);
    const double beta = schedule.beta_at(t);
    const double c_x0 = std::sqrt(ab_prev) * beta / (1.0 - ab);
    const double c_zt = std::sqrt(1.0 - beta) * (1.0 - ab_prev) / (1.0 - ab);
    Vector next(mixture.dim);
    if (ab < 1.0) {
      for (std::size_t i = 0; i < mixture.dim; ++i) next[i] = c_x0 * x0[i] + c_zt * z[i];
    } else {
      next = x0;
    }
    if (t > 1) {
      const double sigma = schedule.sigma_at(t);
      for (std::size_t i = 0; i < mixture.dim; ++i) next[i] += sigma * rng.normal();
    }
    z = std::move(next);
    traj.states.push_back(z);
  }
  return traj;
}

std::vector<DagClass> dag_cluster(const Manifest& original, std::int64_t ipc, std::uint64_t seed,
                                  const KMeansOptions& kmeans) {
  validate(original);
  if (original.latent_dim == 0) throw ValidationError("guided generation needs latent vectors in the original manifest");
  const auto labels = original.labels();
  std::vector<DagClass> out(labels.size());
  detail::parallel_for(labels.size(), [&](std::size_t c) {
    const auto idx = original.indices_of(labels[c]);
    std::vector<Vector> latents;
    std::vector<double> d;
    for (const auto i : idx) {
      latents.push_back(original.items[i].latent);
      d.push_back(original.items[i].difficulty);
    }
    out[c].label = labels[c];
    out[c].plan = scale_to_ipc(histogram(labels[c], d), ipc);
    out[c].intervals = interval_kmeans(labels[c], latents, d, out[c].plan, seed, kmeans);
  });
  return out;
}

DagResult dag_run(const Manifest& original, const Mixture& mixture, const NoiseSchedule& schedule,
                  const DagOptions& options) {
  mixture.validate();
  if (original.latent_dim != mixture.dim) {
    throw ValidationError("mixture dimension " + std::to_string(mixture.dim) +
                          " differs from latent dimension " + std::to_string(original.latent_dim));
  }
  if (options.t_stop < 0 || options.t_stop > schedule.steps() + 1) {
    throw DomainError("t_stop must lie in [0, T + 1]");
  }
  DagResult result;
  result.classes = dag_cluster(original, options.ipc, options.seed, options.kmeans);

  std::vector<GuidanceSpec> specs;
  std::vector<std::uint64_t> seeds;
  std::vector<Item> items;
  for (const auto& cls : result.classes) {
    for (const auto& iv : cls.intervals) {
      for (std::size_t j = 0; j < iv.centers.size(); ++j) {
        specs.push_back({iv.centers[j], options.lambda_gui, options.t_stop});
        seeds.push_back(derive_seed(options.seed, cls.label,
                                    {static_cast<std::uint64_t>(iv.interval), j, kGenerateStream}));
        const std::string tag = "/k" + std::to_string(iv.interval) + "/c" + std::to_string(j);
        Item item = item_from_difficulty(cls.label + "/dag" + tag, cls.label, iv.mean_difficulty[j]);
        item.interval = iv.interval;
        item.center_id = cls.label + tag;
        items.push_back(std::move(item));
      }
    }
  }

  const auto runs = parallel::reverse_sample_batch(schedule, mixture, specs, seeds, options.reverse);
  for (std::size_t i = 0; i < items.size(); ++i) items[i].latent = runs[i].final_state();

  result.generated.role = Role::distilled;
  result.generated.latent_dim = mixture.dim;
  result.generated.items = std::move(items);
  return result;
}

}  // namespace dgs
