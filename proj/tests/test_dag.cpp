#include <doctest.h>

#include <cmath>

#include "dgs/dag.hpp"
#include "dgs/error.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using dgs::Mixture;
using dgs::NoiseSchedule;
using dgs::Vector;

namespace {

Mixture two_blobs() { return Mixture{2, {{0.5, {-2.0, 0.0}, 0.5}, {0.5, {2.0, 0.0}, 0.5}}}; }

double dist(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// V-statistic energy distance between two samples.
double energy_distance(const std::vector<Vector>& x, const std::vector<Vector>& y) {
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (const auto& a : x) {
    for (const auto& b : y) xy += dist(a, b);
    for (const auto& b : x) xx += dist(a, b);
  }
  for (const auto& a : y) {
    for (const auto& b : y) yy += dist(a, b);
  }
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  return 2.0 * xy / (n * m) - xx / (n * n) - yy / (m * m);
}

std::vector<Vector> final_states(const NoiseSchedule& s, const Mixture& mix, const dgs::GuidanceSpec* g,
                                 std::string_view stream, int count) {
  std::vector<Vector> out;
  for (int i = 0; i < count; ++i) {
    const auto seed = dgs::derive_seed(0, stream, {static_cast<std::uint64_t>(i)});
    out.push_back(dgs::reverse_sample(s, mix, g, seed).final_state());
  }
  return out;
}

}  // namespace

TEST_CASE("schedules") {
  for (const auto& s : {NoiseSchedule::linear(), NoiseSchedule::respaced(), NoiseSchedule::respaced(10, 100)}) {
    CHECK(s.alpha_bar_at(0) == 1.0);
    CHECK(s.sigma_at(1) == 0.0);
    for (int t = 1; t <= s.steps(); ++t) {
      CHECK(s.alpha_bar_at(t) < s.alpha_bar_at(t - 1));
      CHECK(s.alpha_bar_at(t) > 0.0);
      CHECK(s.sigma_at(t) >= 0.0);
      CHECK(std::isfinite(s.sigma_at(t)));
    }
  }
  const auto lin = NoiseSchedule::linear();
  CHECK(lin.steps() == 50);
  CHECK(lin.beta_at(1) == doctest::Approx(1e-4));
  CHECK(lin.beta_at(50) == doctest::Approx(0.02));
  CHECK(lin.alpha_bar_at(2) == doctest::Approx((1 - lin.beta_at(1)) * (1 - lin.beta_at(2))));

  const auto re = NoiseSchedule::respaced();
  CHECK(re.steps() == 50);
  CHECK(re.alpha_bar_at(50) < 1e-4);
  // Step 1 of 50 is training step 20 of 1000; step 50 is training step 1000.
  double ab20 = 1.0, ab1000 = 1.0;
  for (int s = 1; s <= 1000; ++s) {
    const double b = 1e-4 + (s - 1) * (0.02 - 1e-4) / 999.0;
    ab1000 *= 1.0 - b;
    if (s <= 20) ab20 *= 1.0 - b;
  }
  CHECK(re.alpha_bar_at(1) == doctest::Approx(ab20).epsilon(1e-12));
  CHECK(re.alpha_bar_at(50) == doctest::Approx(ab1000).epsilon(1e-9));
  CHECK(re.beta_at(1) == doctest::Approx(1.0 - ab20).epsilon(1e-12));

  CHECK_THROWS_AS(NoiseSchedule::from_alpha_bar({0.9, 0.95}), dgs::DomainError);
  CHECK_THROWS_AS(NoiseSchedule::from_alpha_bar({}), dgs::DomainError);
  CHECK_THROWS_AS(NoiseSchedule::linear(0), dgs::DomainError);
  CHECK_THROWS_AS(lin.alpha_bar_at(51), dgs::DomainError);
}

TEST_CASE("forward diffusion examples") {
  const auto s = NoiseSchedule::from_alpha_bar({1.0, 0.5, 1e-300});
  const Vector z0{1.5, -2.0}, noise{0.25, 4.0};
  CHECK(dgs::forward_diffuse(z0, 1, s, noise) == z0);
  const auto last = dgs::forward_diffuse(z0, 3, s, noise);
  CHECK(last[0] == doctest::Approx(noise[0]).epsilon(1e-15));
  CHECK(last[1] == doctest::Approx(noise[1]).epsilon(1e-15));
  const auto mid = dgs::forward_diffuse(z0, 2, s, z0);
  CHECK(mid[0] == doctest::Approx(std::sqrt(2.0) * z0[0]).epsilon(1e-15));
  CHECK(mid[1] == doctest::Approx(std::sqrt(2.0) * z0[1]).epsilon(1e-15));
  CHECK_THROWS_AS(dgs::forward_diffuse(z0, 2, s, Vector{1.0}), dgs::DomainError);
  CHECK_THROWS_AS(dgs::forward_diffuse(z0, 0, s, noise), dgs::DomainError);
}

TEST_CASE("forward diffusion keeps the expected squared norm of standard inputs") {
  const auto s = NoiseSchedule::respaced();
  dgs::Rng rng(1);
  const std::size_t dim = 4;
  const int draws = 1000000;
  for (const int t : {5, 25, 45}) {
    double total = 0.0;
    for (int i = 0; i < draws; ++i) {
      const auto z = dgs::forward_diffuse(rng.normal_vector(dim), t, s, rng.normal_vector(dim));
      for (const double x : z) total += x * x;
    }
    CHECK(total / draws == doctest::Approx(static_cast<double>(dim)).epsilon(0.01));
  }
}

TEST_CASE("guide algebra") {
  const Vector z{0.3, -1.2, 2.0};
  dgs::GuidanceSpec spec{{1.0, 1.0, -1.0}, 0.0, 25};
  CHECK(dgs::guide(z, spec, 0.7) == z);
  spec.lambda_gui = 2.0;
  const auto at_center = dgs::guide(z, spec, 0.5);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(at_center[i] - spec.center[i]) <= 1e-12);
  dgs::GuidanceSpec same{z, 3.0, 25};
  CHECK(dgs::guide(z, same, 0.4) == z);
  CHECK_THROWS_AS(dgs::guide(Vector{1.0}, spec, 0.1), dgs::DomainError);

  dgs::Rng rng(2);
  for (int trial = 0; trial < 5000; ++trial) {
    const auto zt = rng.normal_vector(3);
    dgs::GuidanceSpec g{rng.normal_vector(3), 0.1 + 4.0 * rng.uniform(), 25};
    const double sigma = rng.uniform() / g.lambda_gui;  // lambda * sigma in [0, 1)
    const double w = g.lambda_gui * sigma;
    const auto out = dgs::guide(zt, g, sigma);
    for (std::size_t i = 0; i < 3; ++i) {
      REQUIRE(std::abs(out[i] - ((1 - w) * zt[i] + w * g.center[i])) <= 1e-12 * (1 + std::abs(zt[i]) + std::abs(g.center[i])));
      REQUIRE(out[i] >= std::min(zt[i], g.center[i]) - 1e-12);
      REQUIRE(out[i] <= std::max(zt[i], g.center[i]) + 1e-12);
    }
  }
}

TEST_CASE("guidance window") {
  const dgs::GuidanceSpec g{{0.0}, 1.0, 25};
  CHECK(g.active_at(25));
  CHECK(g.active_at(50));
  CHECK_FALSE(g.active_at(24));
}

TEST_CASE("posterior mean endpoints") {
  const auto s = NoiseSchedule::respaced();
  const Mixture point{2, {{1.0, {0.7, -0.3}, 0.0}}};
  for (const int t : {1, 20, 50}) {
    const auto m = dgs::gmm_posterior_mean(Vector{5.0, 5.0}, t, point, s);
    CHECK(m[0] == doctest::Approx(0.7));
    CHECK(m[1] == doctest::Approx(-0.3));
  }
  const auto clean = NoiseSchedule::from_alpha_bar({1.0, 0.5});
  const Mixture wide{1, {{1.0, {3.0}, 2.0}}};
  CHECK(dgs::gmm_posterior_mean(Vector{-1.25}, 1, wide, clean)[0] == doctest::Approx(-1.25));

  // Far from every component: log-space responsibilities stay finite.
  const auto far = dgs::gmm_posterior_mean(Vector{1e4, 0.0}, 2, two_blobs(), s);
  CHECK(std::isfinite(far[0]));
  CHECK(far[0] == doctest::Approx(2.0 + 0.5 * 0.5 * std::sqrt(s.alpha_bar_at(2)) * (1e4 - std::sqrt(s.alpha_bar_at(2)) * 2.0) /
                                            (s.alpha_bar_at(2) * 0.25 + 1 - s.alpha_bar_at(2))));
  CHECK_THROWS_AS(dgs::gmm_posterior_mean(Vector{1.0}, 2, two_blobs(), s), dgs::DomainError);
}

TEST_CASE("posterior mean agrees with importance sampling") {
  const auto s = NoiseSchedule::respaced();
  dgs::Rng rng(3);
  for (int trial = 0; trial < 4; ++trial) {
    const std::size_t dim = 1 + trial % 2;
    Mixture mix{dim, {}};
    std::vector<oracle::Component> comps;
    const double w = 0.2 + 0.6 * rng.uniform();
    for (const double weight : {w, 1.0 - w}) {
      Vector mean(dim);
      for (auto& m : mean) m = -2.0 + 4.0 * rng.uniform();
      const double sd = 0.2 + rng.uniform();
      mix.components.push_back({weight, mean, sd});
      comps.push_back({weight, mean, sd});
    }
    const int t = 13 + static_cast<int>(rng.below(30));
    const auto zt = rng.normal_vector(dim);
    const auto closed = dgs::gmm_posterior_mean(zt, t, mix, s);
    const auto mc = oracle::posterior_mean_mc(zt, s.alpha_bar_at(t), comps, 200000, rng);
    for (std::size_t k = 0; k < dim; ++k) CHECK(std::abs(closed[k] - mc.mean[k]) <= 3.0 * mc.se[k]);
  }
}

TEST_CASE("mixture parsing and validation") {
  const auto m = dgs::parse_mixture(R"({"dim": 2, "components": [{"weight": 0.25, "mean": [1, 2], "std": 0.5},
                                       {"weight": 0.75, "mean": [0, 0], "std": 0}]})");
  CHECK(m.dim == 2);
  CHECK(m.components[1].std == 0.0);
  CHECK(dgs::parse_mixture(dgs::mixture_to_json(m)).components[0].mean == Vector{1.0, 2.0});
  CHECK_THROWS_AS(dgs::parse_mixture("{"), dgs::ValidationError);
  CHECK_THROWS_AS(dgs::parse_mixture(R"({"dim": 1, "components": [], "extra": 1})"), dgs::ValidationError);
  CHECK_THROWS_AS(dgs::parse_mixture(R"({"dim": 1, "components": [{"weight": 0.5, "mean": [0], "std": 1}]})"),
                  dgs::ValidationError);
  CHECK_THROWS_AS(dgs::parse_mixture(R"({"dim": 1, "components": [{"weight": 1, "mean": [0, 1], "std": 1}]})"),
                  dgs::ValidationError);
  CHECK_THROWS_AS(dgs::parse_mixture(R"({"dim": 1, "components": [{"weight": 1, "mean": [0], "std": -1}]})"),
                  dgs::ValidationError);
  CHECK_THROWS_AS(dgs::load_mixture("/nonexistent/mixture.json"), dgs::IoError);
}

TEST_CASE("reverse sampling is a pure function of its inputs") {
  const auto s = NoiseSchedule::respaced();
  const auto mix = two_blobs();
  const dgs::GuidanceSpec g{{2.0, 0.0}, 1.0, 25};
  const auto a = dgs::reverse_sample(s, mix, &g, 17);
  const auto b = dgs::reverse_sample(s, mix, &g, 17);
  CHECK(a.states == b.states);
  CHECK(a.states.size() == 51);
  CHECK(dgs::reverse_sample(s, mix, &g, 18).states != a.states);
}

TEST_CASE("disabled guidance reproduces the unguided trajectory bit for bit") {
  const auto s = NoiseSchedule::respaced();
  const auto mix = two_blobs();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto plain = dgs::reverse_sample(s, mix, nullptr, seed);
    const dgs::GuidanceSpec zero{{2.0, 0.0}, 0.0, 1};
    const dgs::GuidanceSpec late{{2.0, 0.0}, 5.0, s.steps() + 1};
    REQUIRE(dgs::reverse_sample(s, mix, &zero, seed).states == plain.states);
    REQUIRE(dgs::reverse_sample(s, mix, &late, seed).states == plain.states);
    dgs::ReverseOptions noisy{dgs::SigmaKind::marginal, dgs::GuidanceTarget::noisy};
    REQUIRE(dgs::reverse_sample(s, mix, &late, seed, noisy).states == dgs::reverse_sample(s, mix, nullptr, seed, noisy).states);
  }
}

TEST_CASE("guidance pulls final samples toward the center") {
  const auto s = NoiseSchedule::respaced();
  const auto mix = two_blobs();
  const dgs::GuidanceSpec g{{2.0, 0.0}, 1.0, s.steps() / 2};
  for (const auto& opts : {dgs::ReverseOptions{}, dgs::ReverseOptions{dgs::SigmaKind::marginal, dgs::GuidanceTarget::noisy}}) {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto guided = dgs::reverse_sample(s, mix, &g, seed, opts).final_state();
      const auto plain = dgs::reverse_sample(s, mix, nullptr, seed, opts).final_state();
      wins += dist(guided, g.center) < dist(plain, g.center);
    }
    CHECK(oracle::sign_test_p(wins, 200) < 0.01);
  }
}

TEST_CASE("zero-strength guidance leaves per-axis means indistinguishable") {
  const auto s = NoiseSchedule::respaced();
  const auto mix = two_blobs();
  const dgs::GuidanceSpec zero{{2.0, 0.0}, 0.0, 1};
  const auto guided = final_states(s, mix, &zero, "zero-guided", 500);
  const auto plain = final_states(s, mix, nullptr, "unguided", 500);
  for (std::size_t axis = 0; axis < 2; ++axis) {
    double ma = 0, mb = 0, va = 0, vb = 0;
    for (int i = 0; i < 500; ++i) {
      ma += guided[i][axis];
      mb += plain[i][axis];
    }
    ma /= 500;
    mb /= 500;
    for (int i = 0; i < 500; ++i) {
      va += (guided[i][axis] - ma) * (guided[i][axis] - ma);
      vb += (plain[i][axis] - mb) * (plain[i][axis] - mb);
    }
    va /= 499;
    vb /= 499;
    const double welch = (ma - mb) / std::sqrt(va / 500 + vb / 500);
    // Two-sided 1% critical value; with ~1000 degrees of freedom the normal
    // quantile is within 0.005 of Student's t and slightly stricter.
    CHECK(std::abs(welch) < 2.5758);
  }
}

TEST_CASE("unguided samples follow the mixture") {
  // Threshold: 99th percentile of the energy distance between two independent
  // 500-draw samples of this mixture over 400 null runs.
  const double threshold = 0.0576;
  const auto s = NoiseSchedule::respaced();
  const auto mix = two_blobs();
  const auto generated = final_states(s, mix, nullptr, "energy", 500);
  dgs::Rng rng(4);
  std::vector<Vector> direct;
  for (int i = 0; i < 500; ++i) direct.push_back(mix.sample(rng));
  CHECK(energy_distance(generated, direct) < threshold);
}

TEST_CASE("guided generation over a fixture") {
  dgs::synth::FixtureOptions fo;
  fo.original_per_class = 120;
  fo.ipc = 10;
  const auto fx = dgs::synth::make_fixture(fo);
  const Mixture mix{fo.latent_dim, {{1.0, Vector(fo.latent_dim, 0.0), 1.0}}};
  dgs::DagOptions opts;
  opts.ipc = 10;
  opts.seed = 5;
  const auto r = dgs::dag_run(fx.original, mix, NoiseSchedule::respaced(), opts);
  CHECK(r.generated.items.size() == 100);
  CHECK(r.generated.latent_dim == fo.latent_dim);
  dgs::validate(r.generated);
  for (const auto& cls : r.classes) {
    std::array<std::int64_t, dgs::kIntervals> centers{};
    for (const auto& iv : cls.intervals) centers[iv.interval] = static_cast<std::int64_t>(iv.centers.size());
    CHECK(centers == cls.plan.targets);
  }
  for (const auto& item : r.generated.items) {
    REQUIRE(item.interval.has_value());
    CHECK(dgs::bin_index(item.difficulty) == *item.interval);
    CHECK(item.id == item.label + "/dag/k" + std::to_string(*item.interval) + item.center_id->substr(item.center_id->rfind('/')));
  }
  CHECK(dgs::dag_run(fx.original, mix, NoiseSchedule::respaced(), opts).generated == r.generated);

  opts.t_stop = 52;
  CHECK_THROWS_AS(dgs::dag_run(fx.original, mix, NoiseSchedule::respaced(), opts), dgs::DomainError);
  opts.t_stop = 25;
  CHECK_THROWS_AS(dgs::dag_run(fx.original, Mixture{2, {{1.0, {0.0, 0.0}, 1.0}}}, NoiseSchedule::respaced(), opts),
                  dgs::ValidationError);
}
