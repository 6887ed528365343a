// dgs: command-line front end for difficulty-guided sampling and guided generation.
//
// Exit status: 0 success, 1 computation error, 2 invalid input or usage.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dgs/dag.hpp"
#include "dgs/distribution.hpp"
#include "dgs/error.hpp"
#include "dgs/kmeans.hpp"
#include "dgs/manifest.hpp"
#include "dgs/metrics.hpp"
#include "dgs/sampler.hpp"
#include "dgs/smoothing.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Bad flags or arguments discovered after parsing; reported with exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failure writing an output artifact; reported with exit 1.
struct OutputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 0;
  double lambda = 0.5;
  int grid_max_percent = 20;
  std::int64_t pool_factor = 5;
  std::string shape = "scale";
  std::string out = ".";
  std::string format = "json";
};

void add_shared(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--seed", cfg.seed, "Root seed for every random stream")->capture_default_str();
  cmd->add_option("--lambda", cfg.lambda, "Smoothing weight between the original and uniform targets")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--grid-max-percent", cfg.grid_max_percent, "Largest clip per side, percent of class size")
      ->check(CLI::Range(0, 49))
      ->capture_default_str();
  cmd->add_option("--pool-factor", cfg.pool_factor, "Expected pool size as a multiple of ipc")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--out", cfg.out, "Output directory")->capture_default_str();
  cmd->add_option("--format", cfg.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

json config_json(const RunConfig& cfg) {
  json j;
  j["lambda"] = cfg.lambda;
  j["pool_factor"] = cfg.pool_factor;
  j["grid_max_percent"] = cfg.grid_max_percent;
  j["seed"] = cfg.seed;
  j["shape"] = cfg.shape;
  return j;
}

dgs::ThresholdGrid grid_of(const RunConfig& cfg) { return {cfg.grid_max_percent, 1}; }

json counts_json(const dgs::Counts& c) { return json(std::vector<std::int64_t>(c.begin(), c.end())); }

json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

fs::path out_path(const RunConfig& cfg, const std::string& name) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec) throw OutputError("cannot create output directory " + cfg.out + ": " + ec.message());
  return fs::path(cfg.out) / name;
}

void write_text(const RunConfig& cfg, const std::string& name, const std::string& text) {
  const auto path = out_path(cfg, name);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw OutputError("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw OutputError("failed writing " + path.string());
}

void write_json(const RunConfig& cfg, const std::string& name, const json& j) {
  write_text(cfg, name, j.dump(2) + "\n");
}

void write_manifest_out(const RunConfig& cfg, const std::string& name, const dgs::Manifest& m) {
  const auto path = out_path(cfg, name);
  try {
    dgs::write_manifest(m, path);
  } catch (const dgs::IoError& e) {
    throw OutputError(e.what());
  }
}

std::string csv_real(double v) { return std::isfinite(v) ? dgs::format_real(v) : ""; }

std::string counts_csv(const dgs::Counts& c) {
  std::string s;
  for (std::size_t k = 0; k < c.size(); ++k) s += (k ? "," : "") + std::to_string(c[k]);
  return s;
}

std::string interval_header(const std::string& prefix) {
  std::string s;
  for (int k = 0; k < dgs::kIntervals; ++k) s += (k ? "," : "") + prefix + std::to_string(k);
  return s;
}

std::vector<double> difficulties_of(const dgs::Manifest& m, const std::vector<std::size_t>& idx) {
  std::vector<double> d;
  d.reserve(idx.size());
  for (const auto i : idx) d.push_back(m.items[i].difficulty);
  return d;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const std::string& path, const RunConfig& cfg) {
  const auto check = dgs::check_manifest_file(path);
  json report;
  report["config"] = config_json(cfg);
  report["path"] = path;
  report["valid"] = check.ok();
  if (check.ok()) {
    report["items"] = check.manifest.items.size();
    report["labels"] = check.manifest.labels().size();
    report["latent_dim"] = check.manifest.latent_dim;
  } else {
    json errors = json::array();
    for (const auto& issue : check.issues) {
      json e;
      e["line"] = issue.line;
      e["id"] = issue.id;
      e["message"] = issue.message;
      errors.push_back(e);
    }
    report["errors"] = errors;
  }
  std::cout << report.dump(2) << "\n";
  return check.ok() ? 0 : 2;
}

// -------------------------------------------------------------------- dist

struct DistArgs {
  std::string manifest;
  std::optional<std::int64_t> ipc;
};

int cmd_dist(const DistArgs& a, const RunConfig& cfg) {
  const auto m = dgs::load_manifest(a.manifest);
  const auto shape = dgs::parse_shape(cfg.shape);
  std::vector<dgs::DifficultyHistogram> hists;
  std::vector<dgs::SamplingPlan> plans;
  for (const auto& label : m.labels()) {
    hists.push_back(dgs::histogram(label, difficulties_of(m, m.indices_of(label))));
    if (a.ipc) {
      plans.push_back(shape == dgs::Shape::scale ? dgs::scale_to_ipc(hists.back(), *a.ipc)
                                                 : dgs::predefined_plan(shape, *a.ipc, label));
    }
  }

  if (cfg.format == "csv") {
    std::string s = "label," + interval_header("i") + ",total\n";
    for (const auto& h : hists) s += h.label + "," + counts_csv(h.counts) + "," + std::to_string(h.total) + "\n";
    write_text(cfg, "histograms.csv", s);
    if (a.ipc) {
      std::string p = "label," + interval_header("i") + ",ipc\n";
      for (const auto& pl : plans) p += pl.label + "," + counts_csv(pl.targets) + "," + std::to_string(pl.ipc) + "\n";
      write_text(cfg, "plans.csv", p);
    }
    return 0;
  }

  json report;
  json config = config_json(cfg);
  config["ipc"] = a.ipc ? json(*a.ipc) : json(nullptr);
  report["config"] = config;
  json hs = json::array();
  for (const auto& h : hists) hs.push_back({{"label", h.label}, {"counts", counts_json(h.counts)}, {"total", h.total}});
  report["histograms"] = hs;
  if (a.ipc) {
    json ps = json::array();
    for (const auto& p : plans) ps.push_back({{"label", p.label}, {"targets", counts_json(p.targets)}, {"ipc", p.ipc}});
    report["plans"] = ps;
  }
  write_json(cfg, "histograms.json", report);
  return 0;
}

// ------------------------------------------------------------------ smooth

json smoothing_json(const dgs::ClassSmoothing& cs) {
  const auto& r = cs.result;
  json j;
  j["label"] = r.label;
  j["b"] = r.clip.b;
  j["t"] = r.clip.t;
  j["lambda"] = r.lambda;
  j["objective"] = real_or_null(r.objective);
  j["kl_to_original"] = real_or_null(r.kl_to_original);
  j["kl_to_uniform"] = real_or_null(r.kl_to_uniform);
  j["degenerate"] = cs.degenerate;
  if (cs.degenerate) j["warning"] = cs.warning;
  return j;
}

int cmd_smooth(const std::string& path, const RunConfig& cfg) {
  const auto m = dgs::load_manifest(path);
  const auto s = dgs::smooth_dataset(m, cfg.lambda, grid_of(cfg));
  for (const auto& cs : s.classes) {
    if (cs.degenerate) std::cerr << "warning: " << cs.warning << "\n";
  }

  if (cfg.format == "csv") {
    std::string out = "label,b,t,lambda,objective,kl_to_original,kl_to_uniform,degenerate\n";
    for (const auto& cs : s.classes) {
      const auto& r = cs.result;
      out += r.label + "," + std::to_string(r.clip.b) + "," + std::to_string(r.clip.t) + "," +
             dgs::format_real(r.lambda) + "," + csv_real(r.objective) + "," + csv_real(r.kl_to_original) + "," +
             csv_real(r.kl_to_uniform) + "," + (cs.degenerate ? "true" : "false") + "\n";
    }
    write_text(cfg, "smoothing.csv", out);
  } else {
    json report;
    report["config"] = config_json(cfg);
    json classes = json::array();
    for (const auto& cs : s.classes) classes.push_back(smoothing_json(cs));
    report["classes"] = classes;
    write_json(cfg, "smoothing.json", report);
  }
  write_manifest_out(cfg, "smoothed.jsonl", dgs::apply_smoothing(m, s));
  return 0;
}

// ------------------------------------------------------------------ sample

struct SampleArgs {
  std::string original;
  std::string pool;
  std::int64_t ipc = 10;
  std::string strategy = "seeded-random";
  std::string deficit_rule = "adjacent-spill";
  bool no_smoothing = false;
};

int cmd_sample(const SampleArgs& a, const RunConfig& cfg) {
  const auto original = dgs::load_manifest(a.original, dgs::Role::original);
  const auto pool = dgs::load_manifest(a.pool, dgs::Role::pool);

  dgs::DgsOptions opt;
  opt.ipc = a.ipc;
  opt.lambda = cfg.lambda;
  opt.grid = grid_of(cfg);
  opt.shape = dgs::parse_shape(cfg.shape);
  opt.policy.seed = cfg.seed;
  opt.policy.strategy = dgs::parse_strategy(a.strategy);
  opt.policy.deficit_rule = dgs::parse_deficit_rule(a.deficit_rule);
  opt.smoothing = !a.no_smoothing;

  for (const auto& label : pool.labels()) {
    const auto n = static_cast<std::int64_t>(pool.indices_of(label).size());
    if (n < cfg.pool_factor * a.ipc) {
      std::cerr << "warning: pool class \"" << label << "\" has " << n << " items, below pool_factor x ipc = "
                << cfg.pool_factor * a.ipc << "\n";
    }
  }

  const auto result = dgs::dgs_run(original, pool, opt);
  write_manifest_out(cfg, "distilled.jsonl", result.distilled);

  if (cfg.format == "csv") {
    std::string s = "label,interval,target,supply,achieved,deficit,random_fill\n";
    for (const auto& r : result.reports) {
      for (int k = 0; k < dgs::kIntervals; ++k) {
        s += r.label + "," + std::to_string(k) + "," + std::to_string(r.targets[k]) + "," +
             std::to_string(r.supply[k]) + "," + std::to_string(r.achieved[k]) + "," +
             std::to_string(r.deficit[k]) + "," + std::to_string(r.random_fill[k]) + "\n";
      }
    }
    write_text(cfg, "sampling_report.csv", s);
    return 0;
  }

  json report;
  json config = config_json(cfg);
  config["ipc"] = a.ipc;
  config["strategy"] = a.strategy;
  config["deficit_rule"] = a.deficit_rule;
  config["smoothing"] = opt.smoothing;
  report["config"] = config;
  report["distilled_items"] = result.distilled.items.size();
  report["total_deficit"] = result.total_deficit();
  json classes = json::array();
  for (std::size_t c = 0; c < result.reports.size(); ++c) {
    const auto& r = result.reports[c];
    json j;
    j["label"] = r.label;
    j["targets"] = counts_json(r.targets);
    j["supply"] = counts_json(r.supply);
    j["achieved"] = counts_json(r.achieved);
    j["deficit"] = counts_json(r.deficit);
    j["random_fill"] = counts_json(r.random_fill);
    json spills = json::array();
    for (const auto& sp : r.spills) spills.push_back({{"from", sp.from}, {"to", sp.to}, {"count", sp.count}});
    j["spills"] = spills;
    j["selected_ids"] = r.selected_ids;
    if (opt.smoothing) {
      j["smoothing"] = {{"original", smoothing_json(result.original_smoothing.at(r.label))},
                        {"pool", smoothing_json(result.pool_smoothing.at(r.label))}};
    }
    classes.push_back(j);
  }
  report["classes"] = classes;
  write_json(cfg, "sampling_report.json", report);
  return 0;
}

// ----------------------------------------------------------------- metrics

struct MetricsArgs {
  std::string generated;
  std::string real;
  std::string original;
  std::string pool;
  std::string label;
};

json metric_json(const dgs::VectorSet& set, const dgs::SimilarityMetric& m) {
  return {{"ids", set.ids}, {"per_item", m.per_item}, {"aggregate", m.aggregate}};
}

int cmd_metrics(const MetricsArgs& a, const RunConfig& cfg) {
  if (a.original.empty() != a.pool.empty()) throw UsageError("--original and --pool must be given together");
  const auto gen = dgs::load_manifest(a.generated, dgs::Role::distilled);
  const auto gset = dgs::VectorSet::from_manifest(gen, a.label);

  std::optional<dgs::VectorSet> rset;
  std::optional<dgs::SimilarityMetric> rep;
  if (!a.real.empty()) {
    rset = dgs::VectorSet::from_manifest(dgs::load_manifest(a.real), a.label);
    rep = dgs::representativeness(gset, *rset);
  }
  const auto div = dgs::diversity(gset);
  std::optional<dgs::BiasReport> bias;
  if (!a.original.empty()) {
    bias = dgs::bias_report(dgs::load_manifest(a.original, dgs::Role::original),
                            dgs::load_manifest(a.pool, dgs::Role::pool));
  }

  if (cfg.format == "csv") {
    std::string s = "id,representativeness,diversity\n";
    for (std::size_t i = 0; i < gset.size(); ++i) {
      s += gset.ids[i] + "," + (rep ? dgs::format_real(rep->per_item[i]) : std::string()) + "," +
           dgs::format_real(div.per_item[i]) + "\n";
    }
    write_text(cfg, "metrics.csv", s);
    if (bias) {
      std::string b = "label," + interval_header("delta") +
                      ",mean_gap,original_easiest_share,pool_easiest_share,easiest_share_ratio\n";
      for (const auto& c : bias->classes) {
        b += c.label;
        for (const double d : c.delta) b += "," + dgs::format_real(d);
        b += "," + dgs::format_real(c.mean_gap) + "," + dgs::format_real(c.original_easiest_share) + "," +
             dgs::format_real(c.pool_easiest_share) + "," + csv_real(c.easiest_share_ratio) + "\n";
      }
      write_text(cfg, "bias.csv", b);
    }
    return 0;
  }

  json report;
  json config = config_json(cfg);
  config["label"] = a.label.empty() ? json(nullptr) : json(a.label);
  report["config"] = config;
  report["representativeness"] = rep ? metric_json(gset, *rep) : json(nullptr);
  report["diversity"] = metric_json(gset, div);
  if (bias) {
    json classes = json::array();
    for (const auto& c : bias->classes) {
      json j;
      j["label"] = c.label;
      j["delta"] = std::vector<double>(c.delta.begin(), c.delta.end());
      j["mean_gap"] = c.mean_gap;
      j["original_easiest_share"] = c.original_easiest_share;
      j["pool_easiest_share"] = c.pool_easiest_share;
      j["easiest_share_ratio"] = real_or_null(c.easiest_share_ratio);
      classes.push_back(j);
    }
    report["bias"] = {{"classes", classes}};
  } else {
    report["bias"] = nullptr;
  }
  write_json(cfg, "metrics.json", report);
  return 0;
}

// --------------------------------------------------------------------- dag

struct ClusterArgs {
  std::string original;
  std::int64_t ipc = 10;
  int max_iters = 100;
  int n_init = 1;
};

json interval_json(const dgs::IntervalCenters& iv) {
  return {{"interval", iv.interval},
          {"centers", iv.centers},
          {"sizes", iv.sizes},
          {"mean_difficulty", iv.mean_difficulty},
          {"cost_history", iv.cost_history}};
}

int cmd_dag_cluster(const ClusterArgs& a, const RunConfig& cfg) {
  const auto original = dgs::load_manifest(a.original);
  const auto classes = dgs::dag_cluster(original, a.ipc, cfg.seed, {a.max_iters, a.n_init});

  if (cfg.format == "csv") {
    std::string s = "label,interval,center,size,mean_difficulty";
    for (std::size_t d = 0; d < original.latent_dim; ++d) s += ",z" + std::to_string(d);
    s += "\n";
    for (const auto& cls : classes) {
      for (const auto& iv : cls.intervals) {
        for (std::size_t j = 0; j < iv.centers.size(); ++j) {
          s += cls.label + "," + std::to_string(iv.interval) + "," + std::to_string(j) + "," +
               std::to_string(iv.sizes[j]) + "," + dgs::format_real(iv.mean_difficulty[j]);
          for (const double x : iv.centers[j]) s += "," + dgs::format_real(x);
          s += "\n";
        }
      }
    }
    write_text(cfg, "centers.csv", s);
    return 0;
  }

  json report;
  json config = config_json(cfg);
  config["ipc"] = a.ipc;
  config["max_iters"] = a.max_iters;
  config["n_init"] = a.n_init;
  report["config"] = config;
  json cs = json::array();
  for (const auto& cls : classes) {
    json intervals = json::array();
    for (const auto& iv : cls.intervals) intervals.push_back(interval_json(iv));
    cs.push_back({{"label", cls.label}, {"targets", counts_json(cls.plan.targets)}, {"intervals", intervals}});
  }
  report["classes"] = cs;
  write_json(cfg, "centers.json", report);
  return 0;
}

struct SimulateArgs {
  std::string mixture;
  double lambda_gui = 1.0;
  int t_stop = 25;
  int steps = 50;
  std::string schedule = "respaced";
  std::string sigma = "posterior";
  std::string target = "clean";
  std::string original;
  std::int64_t ipc = 10;
  std::vector<double> center;
};

std::string trajectory_csv(const dgs::Trajectory& traj, int steps) {
  const auto dim = traj.states.front().size();
  std::string s = "t";
  for (std::size_t d = 0; d < dim; ++d) s += ",z" + std::to_string(d);
  s += "\n";
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    s += std::to_string(steps - static_cast<int>(i));
    for (const double x : traj.states[i]) s += "," + dgs::format_real(x);
    s += "\n";
  }
  return s;
}

int cmd_dag_simulate(const SimulateArgs& a, const RunConfig& cfg) {
  if (a.t_stop > a.steps + 1) throw UsageError("--t-stop must lie in [0, steps + 1]");
  if (!a.original.empty() && !a.center.empty()) throw UsageError("--center and --original are exclusive");
  const auto mixture = dgs::load_mixture(a.mixture);
  const auto schedule =
      a.schedule == "linear" ? dgs::NoiseSchedule::linear(a.steps) : dgs::NoiseSchedule::respaced(a.steps);
  dgs::ReverseOptions ro;
  ro.sigma_kind = a.sigma == "marginal" ? dgs::SigmaKind::marginal : dgs::SigmaKind::posterior;
  ro.target = a.target == "noisy" ? dgs::GuidanceTarget::noisy : dgs::GuidanceTarget::predicted_clean;

  json config = config_json(cfg);
  config["lambda_gui"] = a.lambda_gui;
  config["t_stop"] = a.t_stop;
  config["steps"] = a.steps;
  config["schedule"] = a.schedule;
  config["sigma"] = a.sigma;
  config["guide_target"] = a.target;

  if (!a.original.empty()) {
    const auto original = dgs::load_manifest(a.original);
    dgs::DagOptions opt;
    opt.ipc = a.ipc;
    opt.lambda_gui = a.lambda_gui;
    opt.t_stop = a.t_stop;
    opt.seed = cfg.seed;
    opt.reverse = ro;
    const auto result = dgs::dag_run(original, mixture, schedule, opt);
    write_manifest_out(cfg, "generated.jsonl", result.generated);
    config["ipc"] = a.ipc;
    json report;
    report["config"] = config;
    report["generated_items"] = result.generated.items.size();
    json cs = json::array();
    for (const auto& cls : result.classes) {
      dgs::Counts centers{};
      for (const auto& iv : cls.intervals) centers[iv.interval] = static_cast<std::int64_t>(iv.centers.size());
      cs.push_back({{"label", cls.label}, {"targets", counts_json(cls.plan.targets)}, {"centers", counts_json(centers)}});
    }
    report["classes"] = cs;
    write_json(cfg, "dag_report.json", report);
    return 0;
  }

  std::optional<dgs::GuidanceSpec> spec;
  if (!a.center.empty()) spec = dgs::GuidanceSpec{a.center, a.lambda_gui, a.t_stop};
  const auto traj = dgs::reverse_sample(schedule, mixture, spec ? &*spec : nullptr, cfg.seed, ro);
  write_text(cfg, "trajectory.csv", trajectory_csv(traj, schedule.steps()));
  config["center"] = a.center;
  json report;
  report["config"] = config;
  report["guided"] = spec.has_value();
  report["final"] = traj.final_state();
  write_json(cfg, "simulate.json", report);
  return 0;
}

// -------------------------------------------------------------------- plot

struct PlotArgs {
  std::string manifest;
  std::string label;
  bool smoothed = false;
  std::optional<double> bandwidth;
  std::size_t grid = 101;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string render_svg(const dgs::DifficultyHistogram& h, const std::vector<dgs::KdePoint>& curve,
                       const std::string& title) {
  constexpr double W = 480, H = 300, L = 40, R = 10, T = 30, B = 30;
  const double pw = W - L - R, ph = H - T - B;
  std::vector<double> bar(dgs::kIntervals, 0.0);
  double top = 0.0;
  for (int k = 0; k < dgs::kIntervals; ++k) {
    bar[k] = h.total > 0 ? static_cast<double>(h.counts[k]) / (h.total * 0.1) : 0.0;
    top = std::max(top, bar[k]);
  }
  for (const auto& p : curve) top = std::max(top, p.density);
  if (top <= 0.0) top = 1.0;
  auto x_of = [&](double x) { return L + x * pw; };
  auto y_of = [&](double y) { return T + ph - y / top * ph; };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"300\" viewBox=\"0 0 480 300\">\n";
  s += "<rect width=\"480\" height=\"300\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(L) + "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">" + title + "</text>\n";
  for (int k = 0; k < dgs::kIntervals; ++k) {
    const double x0 = x_of(k / 10.0), y0 = y_of(bar[k]);
    s += "<rect x=\"" + fmt(x0 + 1) + "\" y=\"" + fmt(y0) + "\" width=\"" + fmt(pw / 10 - 2) + "\" height=\"" +
         fmt(T + ph - y0) + "\" fill=\"#9ecae1\"/>\n";
  }
  s += "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    s += (i ? " " : "") + fmt(x_of(curve[i].x)) + "," + fmt(y_of(curve[i].density));
  }
  s += "\"/>\n";
  s += "<line x1=\"" + fmt(L) + "\" y1=\"" + fmt(T + ph) + "\" x2=\"" + fmt(L + pw) + "\" y2=\"" + fmt(T + ph) +
       "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 10; k += 2) {
    s += "<text x=\"" + fmt(x_of(k / 10.0) - 8) + "\" y=\"" + fmt(H - 10) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(k / 10.0).substr(0, 3) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

int cmd_plot(const PlotArgs& a, const RunConfig& cfg) {
  const auto m = dgs::load_manifest(a.manifest);
  std::vector<std::size_t> idx;
  if (a.label.empty()) {
    for (std::size_t i = 0; i < m.items.size(); ++i) idx.push_back(i);
  } else {
    idx = m.indices_of(a.label);
    if (idx.empty()) throw UsageError("label \"" + a.label + "\" not found in " + a.manifest);
  }

  std::vector<double> values;
  if (a.smoothed) {
    const auto s = dgs::smooth_dataset(m, cfg.lambda, grid_of(cfg));
    const auto sm = dgs::apply_smoothing(m, s);
    for (const auto i : idx) values.push_back(*sm.items[i].difficulty_smoothed);
  } else {
    values = difficulties_of(m, idx);
  }

  dgs::KdeOptions ko;
  ko.bandwidth = a.bandwidth;
  ko.grid = a.grid;
  const auto curve = dgs::kde_curve(values, ko);
  std::string csv = "x,density\n";
  for (const auto& p : curve) csv += dgs::format_real(p.x) + "," + dgs::format_real(p.density) + "\n";
  write_text(cfg, "kde.csv", csv);

  const auto h = dgs::histogram(a.label, values);
  const std::string title = (a.label.empty() ? std::string("all classes") : a.label) +
                            (a.smoothed ? " (smoothed)" : " (raw)");
  write_text(cfg, "plot.svg", render_svg(h, curve, title));
  return 0;
}

template <typename F>
int guarded(F&& run) {
  try {
    return run();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const dgs::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const dgs::IoError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Difficulty-guided sampling, smoothing, metrics and guided generation"};
  app.require_subcommand(1);
  RunConfig cfg;

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a manifest; exit 2 with an error list if invalid");
  validate->add_option("manifest", validate_path, "Manifest file")->required();
  add_shared(validate, cfg);

  DistArgs dist_args;
  auto* dist = app.add_subcommand("dist", "Per-class difficulty histograms and optional sampling plans");
  dist->add_option("manifest", dist_args.manifest, "Manifest file")->required();
  dist->add_option("--ipc", dist_args.ipc, "Also emit plans for this many items per class")->check(CLI::PositiveNumber);
  dist->add_option("--shape", cfg.shape, "Plan shape")
      ->check(CLI::IsMember({"scale", "hill", "ground", "slope", "cliff"}));
  add_shared(dist, cfg);

  std::string smooth_path;
  auto* smooth = app.add_subcommand("smooth", "Search clip thresholds per class and emit smoothed difficulties");
  smooth->add_option("manifest", smooth_path, "Manifest file")->required();
  add_shared(smooth, cfg);

  SampleArgs sample_args;
  auto* sample = app.add_subcommand("sample", "Difficulty-guided sampling of a pool into a distilled set");
  sample->add_option("--original", sample_args.original, "Original manifest")->required();
  sample->add_option("--pool", sample_args.pool, "Pool manifest")->required();
  sample->add_option("--ipc", sample_args.ipc, "Items per class")->check(CLI::PositiveNumber)->capture_default_str();
  sample->add_option("--shape", cfg.shape, "Plan shape")
      ->check(CLI::IsMember({"scale", "hill", "ground", "slope", "cliff"}))
      ->capture_default_str();
  sample->add_option("--strategy", sample_args.strategy, "Per-interval selection")
      ->check(CLI::IsMember({"seeded-random", "center-nearest"}))
      ->capture_default_str();
  sample->add_option("--deficit-rule", sample_args.deficit_rule, "Handling of unmet interval demand")
      ->check(CLI::IsMember({"adjacent-spill", "random-fill", "fail"}))
      ->capture_default_str();
  sample->add_flag("--no-smoothing", sample_args.no_smoothing, "Bin raw difficulties instead of smoothed ones");
  add_shared(sample, cfg);

  MetricsArgs metrics_args;
  auto* metrics = app.add_subcommand("metrics", "Representativeness, diversity and pool bias");
  metrics->add_option("--generated", metrics_args.generated, "Manifest of generated or selected latents")->required();
  metrics->add_option("--real", metrics_args.real, "Manifest of real latents (representativeness memory)");
  metrics->add_option("--original", metrics_args.original, "Original manifest for the bias report");
  metrics->add_option("--pool", metrics_args.pool, "Pool manifest for the bias report");
  metrics->add_option("--label", metrics_args.label, "Restrict vector metrics to one class");
  add_shared(metrics, cfg);

  auto* dag = app.add_subcommand("dag", "Difficulty-aware guidance");
  dag->require_subcommand(1);

  ClusterArgs cluster_args;
  auto* cluster = dag->add_subcommand("cluster", "Per-interval k-means centers of the original latents");
  cluster->add_option("--original", cluster_args.original, "Original manifest with latents")->required();
  cluster->add_option("--ipc", cluster_args.ipc, "Items per class")->check(CLI::PositiveNumber)->capture_default_str();
  cluster->add_option("--max-iters", cluster_args.max_iters, "Lloyd iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cluster->add_option("--n-init", cluster_args.n_init, "k-means++ restarts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_shared(cluster, cfg);

  SimulateArgs sim_args;
  auto* simulate = dag->add_subcommand("simulate", "Guided reverse diffusion with an analytic mixture denoiser");
  simulate->add_option("--mixture", sim_args.mixture, "Mixture JSON file")->required();
  simulate->add_option("--lambda-gui", sim_args.lambda_gui, "Guidance strength")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--t-stop", sim_args.t_stop, "Guidance runs while t >= t_stop; steps + 1 disables it")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--steps", sim_args.steps, "Denoising steps")->check(CLI::Range(1, 1000))->capture_default_str();
  simulate->add_option("--schedule", sim_args.schedule, "Noise schedule")
      ->check(CLI::IsMember({"respaced", "linear"}))
      ->capture_default_str();
  simulate->add_option("--sigma", sim_args.sigma, "Sigma scaling the guidance term")
      ->check(CLI::IsMember({"posterior", "marginal"}))
      ->capture_default_str();
  simulate->add_option("--guide-target", sim_args.target, "Vector moved by guidance")
      ->check(CLI::IsMember({"clean", "noisy"}))
      ->capture_default_str();
  simulate->add_option("--original", sim_args.original, "Generate one latent per center of this manifest");
  simulate->add_option("--ipc", sim_args.ipc, "Items per class with --original")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--center", sim_args.center, "Guidance center for a single trajectory")->delimiter(',');
  add_shared(simulate, cfg);

  PlotArgs plot_args;
  auto* plot = app.add_subcommand("plot", "KDE curve (CSV) and histogram plot (SVG) of difficulties");
  plot->add_option("manifest", plot_args.manifest, "Manifest file")->required();
  plot->add_option("--label", plot_args.label, "Class to plot (default: all items)");
  plot->add_flag("--smoothed", plot_args.smoothed, "Plot smoothed difficulties");
  plot->add_option("--bandwidth", plot_args.bandwidth, "KDE bandwidth (default: Silverman)")->check(CLI::PositiveNumber);
  plot->add_option("--grid-points", plot_args.grid, "KDE evaluation points")->check(CLI::Range(2, 100000));
  add_shared(plot, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (*validate) return guarded([&] { return cmd_validate(validate_path, cfg); });
  if (*dist) return guarded([&] { return cmd_dist(dist_args, cfg); });
  if (*smooth) return guarded([&] { return cmd_smooth(smooth_path, cfg); });
  if (*sample) return guarded([&] { return cmd_sample(sample_args, cfg); });
  if (*metrics) return guarded([&] { return cmd_metrics(metrics_args, cfg); });
  if (*cluster) return guarded([&] { return cmd_dag_cluster(cluster_args, cfg); });
  if (*simulate) return guarded([&] { return cmd_dag_simulate(sim_args, cfg); });
  if (*plot) return guarded([&] { return cmd_plot(plot_args, cfg); });
  return 2;
}
