// Serial vs OpenMP timings for every kernel.

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "dgs/dag.hpp"
#include "dgs/kernels.hpp"
#include "dgs/rng.hpp"
#include "dgs/smoothing.hpp"

namespace {

template <typename F>
double best_ms(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms, bool same) {
  std::printf("%-22s %10.2f %10.2f %8.2fx  %s\n", name, serial_ms, parallel_ms, serial_ms / parallel_ms,
              same ? "identical" : "DIFFERENT");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel benchmark: serial reference vs OpenMP"};
  int reps = 3;
  int threads = 0;
  double size = 1.0;
  app.add_option("--reps", reps, "Repetitions per kernel (best is reported)")->check(CLI::PositiveNumber);
  app.add_option("--threads", threads, "OpenMP threads (default: runtime choice)")->check(CLI::NonNegativeNumber);
  app.add_option("--size", size, "Problem size multiplier")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  const auto scaled = [&](double n) { return static_cast<std::size_t>(std::max(1.0, n * size)); };
  dgs::Rng rng(1);
  std::printf("threads %d\n%-22s %10s %10s %9s\n", omp_get_max_threads(), "kernel", "serial ms", "omp ms", "speedup");

  {
    std::vector<double> values(scaled(20000)), xs(scaled(2000));
    for (auto& v : values) v = rng.uniform();
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i) / static_cast<double>(xs.size());
    std::vector<double> a, b;
    const double s = best_ms(reps, [&] { a = dgs::serial::kde_density(values, xs, 0.02); });
    const double p = best_ms(reps, [&] { b = dgs::parallel::kde_density(values, xs, 0.02); });
    report("kde_density", s, p, a == b);
  }
  {
    const auto n = scaled(5000);
    std::vector<double> d(n);
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = rng.uniform() * rng.uniform();
      ids[i] = "i" + std::to_string(i);
    }
    const auto data = dgs::SortedClass::build(d, ids);
    const dgs::ThresholdGrid grid{20, 1};
    std::vector<dgs::GridEvaluation> a, b;
    const double s = best_ms(reps, [&] { a = dgs::serial::evaluate_grid(data, grid, 0.5); });
    const double p = best_ms(reps, [&] { b = dgs::parallel::evaluate_grid(data, grid, 0.5); });
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].clip == b[i].clip && a[i].objective == b[i].objective;
    report("evaluate_grid", s, p, same);
  }
  {
    std::vector<dgs::Vector> rows, memory;
    for (std::size_t i = 0; i < scaled(1500); ++i) rows.push_back(rng.normal_vector(64));
    for (std::size_t i = 0; i < scaled(1500); ++i) memory.push_back(rng.normal_vector(64));
    std::vector<double> a, b;
    double s = best_ms(reps, [&] { a = dgs::serial::min_cosine(rows, memory); });
    double p = best_ms(reps, [&] { b = dgs::parallel::min_cosine(rows, memory); });
    report("min_cosine", s, p, a == b);
    s = best_ms(reps, [&] { a = dgs::serial::max_offdiag_cosine(rows); });
    p = best_ms(reps, [&] { b = dgs::parallel::max_offdiag_cosine(rows); });
    report("max_offdiag_cosine", s, p, a == b);
  }
  {
    std::vector<dgs::Vector> points, centers;
    for (std::size_t i = 0; i < scaled(100000); ++i) points.push_back(rng.normal_vector(16));
    for (int i = 0; i < 32; ++i) centers.push_back(rng.normal_vector(16));
    std::vector<int> a, b;
    const double s = best_ms(reps, [&] {
      a.assign(points.size(), -1);
      dgs::serial::assign_nearest(points, centers, a);
    });
    const double p = best_ms(reps, [&] {
      b.assign(points.size(), -1);
      dgs::parallel::assign_nearest(points, centers, b);
    });
    report("assign_nearest", s, p, a == b);
  }
  {
    const auto schedule = dgs::NoiseSchedule::respaced();
    dgs::Mixture mix{8, {}};
    for (int j = 0; j < 10; ++j) mix.components.push_back({0.1, rng.normal_vector(8), 0.5});
    std::vector<std::uint64_t> seeds(scaled(400));
    std::vector<dgs::GuidanceSpec> guidance;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      seeds[i] = i;
      guidance.push_back({rng.normal_vector(8), 1.0, 25});
    }
    std::vector<dgs::Trajectory> a, b;
    const double s = best_ms(reps, [&] { a = dgs::serial::reverse_sample_batch(schedule, mix, guidance, seeds, {}); });
    const double p = best_ms(reps, [&] { b = dgs::parallel::reverse_sample_batch(schedule, mix, guidance, seeds, {}); });
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].states == b[i].states;
    report("reverse_sample_batch", s, p, same);
  }
  return 0;
}
