#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "dgs/error.hpp"
#include "dgs/rng.hpp"
#include "dgs/sampler.hpp"
#include "synthetic.hpp"

using dgs::Counts;
using dgs::DeficitRule;
using dgs::SamplingPolicy;
using dgs::Strategy;

namespace {

struct ClassData {
  std::vector<std::string> ids;
  std::vector<double> d;
};

ClassData class_with(const std::vector<double>& d) {
  ClassData c;
  c.d = d;
  for (std::size_t i = 0; i < d.size(); ++i) c.ids.push_back("p" + std::to_string(i));
  return c;
}

dgs::SamplingPlan plan_of(const Counts& targets) {
  dgs::SamplingPlan p;
  p.targets = targets;
  for (auto t : targets) p.ipc += t;
  return p;
}

ClassData random_class(dgs::Rng& rng, std::size_t n) {
  std::vector<double> d(n);
  for (auto& v : d) v = rng.uniform() * (rng.below(2) ? rng.uniform() : 1.0);
  return class_with(d);
}

Counts random_plan(dgs::Rng& rng, std::int64_t ipc) {
  Counts t{};
  for (std::int64_t j = 0; j < ipc; ++j) ++t[rng.below(10)];
  return t;
}

std::string text_of(const dgs::Manifest& m) {
  std::ostringstream out;
  dgs::write_manifest(m, out);
  return out.str();
}

}  // namespace

TEST_CASE("strategy and rule names") {
  for (auto s : {Strategy::seeded_random, Strategy::center_nearest}) CHECK(dgs::parse_strategy(dgs::to_string(s)) == s);
  for (auto r : {DeficitRule::adjacent_spill, DeficitRule::random_fill, DeficitRule::fail}) {
    CHECK(dgs::parse_deficit_rule(dgs::to_string(r)) == r);
  }
  CHECK_THROWS_AS(dgs::parse_strategy("greedy"), dgs::DomainError);
  CHECK_THROWS_AS(dgs::parse_deficit_rule("borrow"), dgs::DomainError);
}

TEST_CASE("supply equal to targets selects everything without spills") {
  const auto c = class_with({0.05, 0.15, 0.16, 0.55});
  const auto s = dgs::sample_class("x", c.ids, c.d, plan_of({1, 2, 0, 0, 0, 1}), {});
  CHECK(s.report.achieved == Counts{1, 2, 0, 0, 0, 1});
  CHECK(s.report.spills.empty());
  CHECK(s.report.total_deficit() == 0);
  CHECK(s.selected == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("adjacent spill on the four-item instance") {
  // targets [2,0,...]; interval 0 holds one item, interval 1 holds three.
  // Interval 0 takes its one item, then its unmet unit spills to interval 1.
  const auto c = class_with({0.05, 0.12, 0.14, 0.18});
  const auto s = dgs::sample_class("x", c.ids, c.d, plan_of({2}), {});
  CHECK(s.report.achieved == Counts{1, 1});
  CHECK(s.report.deficit == Counts{1});
  REQUIRE(s.report.spills.size() == 1);
  CHECK(s.report.spills[0] == dgs::Spill{0, 1, 1});
}

TEST_CASE("spill ties go to the easier interval") {
  // interval 5 needs 2 but is empty; intervals 4 and 6 each hold two spare items
  const auto c = class_with({0.41, 0.42, 0.61, 0.62});
  const auto s = dgs::sample_class("x", c.ids, c.d, plan_of({0, 0, 0, 0, 0, 2}), {});
  CHECK(s.report.achieved == Counts{0, 0, 0, 0, 2, 0, 0});
  CHECK(s.report.spills == std::vector<dgs::Spill>{{5, 4, 2}});

  // interval 5 needs 3: two from 4, then one from 6
  const auto s3 = dgs::sample_class("x", c.ids, c.d, plan_of({0, 0, 0, 0, 0, 3}), {});
  CHECK(s3.report.spills == std::vector<dgs::Spill>{{5, 4, 2}, {5, 6, 1}});
}

TEST_CASE("fail rule and insufficient supply") {
  const auto c = class_with({0.05, 0.15, 0.25});
  SamplingPolicy fail;
  fail.deficit_rule = DeficitRule::fail;
  CHECK_THROWS_AS(dgs::sample_class("x", c.ids, c.d, plan_of({2, 1}), fail), dgs::DeficitError);
  CHECK_NOTHROW(dgs::sample_class("x", c.ids, c.d, plan_of({1, 1, 1}), fail));
  CHECK_THROWS_AS(dgs::sample_class("x", c.ids, c.d, plan_of({4}), {}), dgs::InsufficientSupply);
  auto bad = plan_of({1, 1});
  bad.ipc = 3;
  CHECK_THROWS_AS(dgs::sample_class("x", c.ids, c.d, bad, {}), dgs::DomainError);
}

TEST_CASE("random fill draws from the unselected items") {
  const auto c = class_with({0.05, 0.15, 0.25, 0.35, 0.45, 0.95});
  SamplingPolicy p;
  p.deficit_rule = DeficitRule::random_fill;
  const auto s = dgs::sample_class("x", c.ids, c.d, plan_of({3}), p);
  CHECK(s.selected.size() == 3);
  CHECK(std::count(s.selected.begin(), s.selected.end(), 0u) == 1);
  CHECK(s.report.random_fill[0] == 0);
  std::int64_t fills = 0;
  for (auto f : s.report.random_fill) fills += f;
  CHECK(fills == 2);
  CHECK(s.report.spills.empty());
}

TEST_CASE("center-nearest picks items closest to the interval midpoint, ids breaking ties") {
  const auto c = class_with({0.10, 0.14, 0.16, 0.19, 0.15});
  SamplingPolicy p;
  p.strategy = Strategy::center_nearest;
  const auto s = dgs::sample_class("x", c.ids, c.d, plan_of({0, 3}), p);
  // distances to 0.15: 0.05, 0.01, 0.01, 0.04, 0 -> p4, then p1 and p2 (tied, by id)
  CHECK(s.selected == std::vector<std::size_t>{1, 2, 4});
}

TEST_CASE("seeded sampling is deterministic and seed-dependent") {
  dgs::Rng rng(1);
  const auto c = random_class(rng, 400);
  const auto plan = plan_of({5, 5, 5, 5, 5, 5, 5, 5, 5, 5});
  SamplingPolicy a;
  a.seed = 7;
  const auto s1 = dgs::sample_class("x", c.ids, c.d, plan, a);
  const auto s2 = dgs::sample_class("x", c.ids, c.d, plan, a);
  CHECK(s1.selected == s2.selected);
  a.seed = 8;
  CHECK(dgs::sample_class("x", c.ids, c.d, plan, a).selected != s1.selected);
}

TEST_CASE("sampling invariants on random classes") {
  dgs::Rng rng(2);
  for (int trial = 0; trial < 400; ++trial) {
    const auto ipc = static_cast<std::int64_t>(1 + rng.below(30));
    const auto c = random_class(rng, static_cast<std::size_t>(ipc + rng.below(60)));
    const auto plan = plan_of(random_plan(rng, ipc));
    SamplingPolicy p;
    p.seed = rng.next();
    p.strategy = rng.below(2) ? Strategy::seeded_random : Strategy::center_nearest;
    p.deficit_rule = rng.below(2) ? DeficitRule::adjacent_spill : DeficitRule::random_fill;
    const auto s = dgs::sample_class("x", c.ids, c.d, plan, p);

    REQUIRE(static_cast<std::int64_t>(s.selected.size()) == ipc);
    REQUIRE(std::set<std::size_t>(s.selected.begin(), s.selected.end()).size() == s.selected.size());
    REQUIRE(s.report.selected_ids.size() == s.selected.size());
    Counts achieved{};
    for (const auto i : s.selected) {
      REQUIRE(i < c.ids.size());
      ++achieved[dgs::bin_index(c.d[i])];
    }
    REQUIRE(achieved == s.report.achieved);
    bool saturating = true;
    for (int k = 0; k < 10; ++k) {
      REQUIRE(s.report.achieved[k] <= s.report.supply[k]);
      if (plan.targets[k] > s.report.supply[k]) saturating = false;
    }
    if (saturating) REQUIRE(s.report.achieved == plan.targets);
  }
}

TEST_CASE("dgs_run on the synthetic fixture") {
  dgs::synth::FixtureOptions fo;
  fo.ipc = 10;
  const auto fx = dgs::synth::make_fixture(fo);
  dgs::DgsOptions opt;
  opt.ipc = 10;
  opt.policy.seed = 3;
  const auto r = dgs::dgs_run(fx.original, fx.pool, opt);
  CHECK(r.distilled.items.size() == 100);
  CHECK(r.distilled.role == dgs::Role::distilled);
  for (const auto& item : r.distilled.items) {
    REQUIRE(item.difficulty_smoothed.has_value());
    REQUIRE(item.interval == std::optional<int>(dgs::bin_index(*item.difficulty_smoothed)));
    REQUIRE(item.latent.size() == fo.latent_dim);
  }
  CHECK_NOTHROW(dgs::validate(r.distilled));

  auto raw = opt;
  raw.smoothing = false;
  const auto rr = dgs::dgs_run(fx.original, fx.pool, raw);
  bool spilled = false;
  for (const auto& rep : rr.reports) spilled = spilled || !rep.spills.empty();
  CHECK(spilled);
  CHECK(r.total_deficit() < rr.total_deficit());
  for (const auto& item : rr.distilled.items) CHECK_FALSE(item.difficulty_smoothed.has_value());

  CHECK(text_of(dgs::dgs_run(fx.original, fx.pool, opt).distilled) == text_of(r.distilled));
}

TEST_CASE("self-sampling reproduces the plan exactly") {
  dgs::synth::FixtureOptions fo;
  fo.classes = 3;
  fo.original_per_class = 120;
  const auto fx = dgs::synth::make_fixture(fo);
  for (const auto shape_smoothing : {true, false}) {
    dgs::DgsOptions opt;
    opt.ipc = 37;
    opt.smoothing = shape_smoothing;
    const auto r = dgs::dgs_run(fx.original, fx.original, opt);
    for (std::size_t c = 0; c < r.plans.size(); ++c) {
      CHECK(r.reports[c].achieved == r.plans[c].targets);
      CHECK(r.reports[c].total_deficit() == 0);
      Counts h{};
      for (const auto& item : r.distilled.items) {
        if (item.label == r.plans[c].label) ++h[*item.interval];
      }
      CHECK(h == r.plans[c].targets);
    }
  }
}

TEST_CASE("predefined shapes drive the plan") {
  dgs::synth::FixtureOptions fo;
  fo.classes = 2;
  fo.ipc = 20;
  const auto fx = dgs::synth::make_fixture(fo);
  dgs::DgsOptions opt;
  opt.ipc = 20;
  opt.shape = dgs::Shape::ground;
  const auto r = dgs::dgs_run(fx.original, fx.pool, opt);
  for (const auto& p : r.plans) CHECK(p.targets == Counts{2, 2, 2, 2, 2, 2, 2, 2, 2, 2});
  CHECK(r.distilled.items.size() == 40);
}

TEST_CASE("per-class selections do not depend on other classes") {
  dgs::synth::FixtureOptions fo;
  fo.classes = 4;
  fo.ipc = 10;
  const auto fx = dgs::synth::make_fixture(fo);
  dgs::DgsOptions opt;
  opt.ipc = 10;
  const auto full = dgs::dgs_run(fx.original, fx.pool, opt);

  // Replace class3's pool with a different draw.
  fo.seed = 99;
  const auto other = dgs::synth::make_fixture(fo);
  dgs::Manifest pool;
  pool.role = dgs::Role::pool;
  pool.latent_dim = fx.pool.latent_dim;
  for (const auto& item : fx.pool.items) {
    if (item.label != "class3") pool.items.push_back(item);
  }
  for (const auto& item : other.pool.items) {
    if (item.label == "class3") pool.items.push_back(item);
  }
  const auto changed = dgs::dgs_run(fx.original, pool, opt);
  for (int c = 0; c < 3; ++c) CHECK(changed.reports[c].selected_ids == full.reports[c].selected_ids);
}

TEST_CASE("label mismatch is a validation error") {
  dgs::synth::FixtureOptions fo;
  fo.classes = 2;
  const auto fx = dgs::synth::make_fixture(fo);
  fo.classes = 3;
  const auto more = dgs::synth::make_fixture(fo);
  CHECK_THROWS_AS(dgs::dgs_run(fx.original, more.pool, {}), dgs::ValidationError);
  CHECK_THROWS_AS(dgs::require_same_labels(more.original, fx.pool), dgs::ValidationError);
}
