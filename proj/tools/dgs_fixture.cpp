// Writes the synthetic original/pool fixture, its ground-truth interval
// counts, and a per-class Gaussian mixture fitted to the original latents.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dgs/dag.hpp"
#include "dgs/error.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json counts_json(const std::vector<dgs::DifficultyHistogram>& hists) {
  json out = json::array();
  for (const auto& h : hists) {
    out.push_back({{"label", h.label},
                   {"counts", std::vector<std::int64_t>(h.counts.begin(), h.counts.end())},
                   {"total", h.total}});
  }
  return out;
}

dgs::Mixture fit_mixture(const dgs::Manifest& m) {
  dgs::Mixture mix;
  mix.dim = m.latent_dim;
  const auto labels = m.labels();
  double remaining = 1.0;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    const auto idx = m.indices_of(labels[c]);
    dgs::MixtureComponent comp;
    comp.weight = c + 1 == labels.size() ? remaining : 1.0 / static_cast<double>(labels.size());
    remaining -= comp.weight;
    comp.mean.assign(mix.dim, 0.0);
    for (const auto i : idx) {
      for (std::size_t d = 0; d < mix.dim; ++d) comp.mean[d] += m.items[i].latent[d];
    }
    for (auto& x : comp.mean) x /= static_cast<double>(idx.size());
    double ss = 0.0;
    for (const auto i : idx) {
      for (std::size_t d = 0; d < mix.dim; ++d) {
        const double r = m.items[i].latent[d] - comp.mean[d];
        ss += r * r;
      }
    }
    comp.std = std::sqrt(ss / static_cast<double>(idx.size() * mix.dim));
    mix.components.push_back(std::move(comp));
  }
  return mix;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic easy-biased fixture"};
  dgs::synth::FixtureOptions opt;
  std::string out = ".";
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--classes", opt.classes, "Number of classes")->check(CLI::Range(1, 1000))->capture_default_str();
  app.add_option("--original-per-class", opt.original_per_class, "Original items per class")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--ipc", opt.ipc, "Items per class of the target distilled set")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--pool-factor", opt.pool_factor, "Pool size as a multiple of ipc")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--latent-dim", opt.latent_dim, "Latent dimension")->check(CLI::Range(1, 4096))->capture_default_str();
  app.add_option("--seed", opt.seed, "Root seed")->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    fs::create_directories(out);
    const auto f = dgs::synth::make_fixture(opt);
    dgs::write_manifest(f.original, fs::path(out) / "original.jsonl");
    dgs::write_manifest(f.pool, fs::path(out) / "pool.jsonl");

    json truth;
    truth["original"] = counts_json(f.original_counts);
    truth["pool"] = counts_json(f.pool_counts);
    std::ofstream(fs::path(out) / "truth.json") << truth.dump(2) << "\n";
    std::ofstream(fs::path(out) / "mixture.json") << dgs::mixture_to_json(fit_mixture(f.original)) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
