#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "fcomb/combiner.hpp"
#include "fcomb/features.hpp"
#include "fcomb/synth.hpp"

using namespace fcomb;
using namespace fcomb::synth;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0;
  std::size_t n = 0;
  for (double x : v)
    if (is_present(x)) {
      s += x;
      ++n;
    }
  return s / static_cast<double>(n);
}

}  // namespace

TEST_CASE("gen_sinusoidal shape and exact sine without noise") {
  const RegretTable t = gen_sinusoidal(1100, {{1.0, 10, 1.0}, {1.5, 17, 1.0}}, 8, 1);
  CHECK(t.workers.size() == 10);
  CHECK(t.n_epochs() == 1100);
  CHECK(t.workers[0].id == "allo0");
  CHECK(t.workers[9].id == "allo9");

  const RegretTable clean = gen_sinusoidal(50, {{1.5, 17, 0.0}}, 0, 2);
  for (std::size_t i = 0; i < 50; ++i)
    CHECK(clean.regret(i, 0) == doctest::Approx(1.5 * std::sin(2 * M_PI * static_cast<double>(i) / 17.0)).epsilon(1e-12));

  const RegretTable long_run = gen_sinusoidal(20000, {{1.0, 10, 1.0}, {1.5, 17, 1.0}}, 8, 3);
  for (std::size_t j = 0; j < 10; ++j) CHECK(std::abs(mean_of(long_run.regret.column(j))) < 0.1);
}

TEST_CASE("gen_fixed_interval spikes") {
  const auto s = fixed_interval_series(200, {1.0, 10, 0.5}, 4);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i % 10 == 0) {
      CHECK(s[i] == 1.0);
    } else {
      CHECK(std::abs(s[i]) <= 0.5);
    }
  }
  const auto s17 = fixed_interval_series(200, {1.25, 17, 0.5}, 5);
  for (std::size_t i = 0; i < s17.size(); i += 17) CHECK(s17[i] == 1.25);
  const auto flat = fixed_interval_series(40, {1.0, 10, 0.0}, 6);
  for (std::size_t i = 0; i < flat.size(); ++i)
    if (i % 10 != 0) CHECK(flat[i] == 0.0);

  const RegretTable t = gen_fixed_interval(300, {{1.0, 10, 0.5}, {1.25, 17, 0.5}}, 8, 7);
  CHECK(t.workers.size() == 10);
  CHECK(t.regret(170, 1) == 1.25);
  for (std::size_t i = 0; i < 300; ++i) CHECK(std::abs(t.regret(i, 5)) <= 0.5);
}

TEST_CASE("gen_gbm_truth") {
  GbmSpec spec;
  const GbmPath p = gen_gbm_truth(500, spec, 1);
  CHECK(p.price[0] == 1000.0);
  CHECK(is_absent(p.log_return[0]));
  for (double v : p.price) CHECK(v > 0);

  GbmSpec fixed;
  fixed.sigma = 0;
  fixed.drift_values = {0.01, 0.01, 0.01};
  const GbmPath q = gen_gbm_truth(11, fixed, 2);
  CHECK(q.price[10] == doctest::Approx(1000.0 * std::exp(0.1)).epsilon(1e-12));
  CHECK(q.price[10] == doctest::Approx(1105.17).epsilon(1e-5));
}

TEST_CASE("regime segments") {
  const auto segs = sample_regime_segments(10000, GbmSpec{}, 3);
  std::map<Regime, int> count;
  for (const auto& s : segs) {
    CHECK(s.length >= 1);
    ++count[s.label];
  }
  CHECK(count[Regime::Down] / 1e4 == doctest::Approx(0.2).epsilon(0.25));
  CHECK(count[Regime::None] / 1e4 == doctest::Approx(0.6).epsilon(0.08));

  GbmSpec no_repeat;
  no_repeat.allow_self_transitions = false;
  const auto alt = sample_regime_segments(500, no_repeat, 4);
  for (std::size_t k = 1; k < alt.size(); ++k) CHECK(alt[k].label != alt[k - 1].label);
}

TEST_CASE("contextual inferers") {
  const GbmPath path = gen_gbm_truth(3001, GbmSpec{}, 5);
  const auto inf = default_contextual_inferers();
  REQUIRE(inf.size() == 10);
  CHECK(inf[0].archetype == Archetype::SpecialistDown);
  CHECK(inf[1].archetype == Archetype::SpecialistUp);
  CHECK(inf[2].archetype == Archetype::SpecialistNone);
  CHECK(inf[3].ema_span == 5);
  CHECK(inf[5].ema_span == 9);
  CHECK(inf[9].archetype == Archetype::Random);

  const ContextualInferences ci = gen_contextual_inferers(path, inf, 0.01, 6);
  CHECK(ci.table.n_epochs() == 3000);
  CHECK(ci.table.epochs.front() == 1);
  CHECK(ci.table.truth[0] == path.price[1]);
  // Price-space inference is previous truth times the predicted growth.
  CHECK(ci.table.inference(10, 4) == doctest::Approx(path.price[10] * std::exp(ci.log_return(10, 4))).epsilon(1e-14));
}

TEST_CASE("noiseless specialists are exact in their regime") {
  const GbmPath path = gen_gbm_truth(400, GbmSpec{}, 7);
  ContextualOptions opts;
  opts.noise_scale = 0;
  const auto ci = gen_contextual_inferers(path, default_contextual_inferers(), 0.01, 8, opts);
  const EpochPanel panel = combine::roll_forward(ci.table, TopicConfig{});
  int seen = 0;
  for (std::size_t i = 0; i < ci.table.n_epochs(); ++i) {
    const Regime r = ci.regime[i];
    const std::size_t j = r == Regime::Down ? 0 : r == Regime::Up ? 1 : 2;
    CHECK(panel.at(i).log_loss[j] == doctest::Approx(-12.0));
    ++seen;
  }
  CHECK(seen == 399);
}

TEST_CASE("UP specialist beats every random worker during UP regimes") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GbmPath path = gen_gbm_truth(5001, GbmSpec{}, seed);
    const auto ci = gen_contextual_inferers(path, default_contextual_inferers(), 0.01, seed + 100);
    const EpochPanel panel = combine::roll_forward(ci.table, TopicConfig{});
    std::vector<double> sum(10, 0.0);
    int n = 0;
    for (std::size_t i = 0; i < ci.table.n_epochs(); ++i) {
      if (ci.regime[i] != Regime::Up) continue;
      for (std::size_t j = 0; j < 10; ++j) sum[j] += panel.at(i).log_loss[j];
      ++n;
    }
    REQUIRE(n > 100);
    for (std::size_t j = 6; j < 10; ++j) CHECK(sum[1] < sum[j]);
  }
}

namespace {

struct DriftSplit {
  double regret_drift = 0, regret_none = 0, loss_drift = 0, loss_none = 0;
};

DriftSplit follower_by_regime(std::uint64_t seed) {
  const GbmPath path = gen_gbm_truth(4001, GbmSpec{}, seed);
  const auto ci = gen_contextual_inferers(path, default_contextual_inferers(), 0.01, seed + 50);
  const EpochPanel panel = combine::roll_forward(ci.table, TopicConfig{});
  DriftSplit s;
  int nd = 0, nn = 0;
  for (std::size_t i = 0; i < ci.table.n_epochs(); ++i) {
    const auto& rec = panel.at(i);
    if (ci.regime[i] == Regime::None) {
      s.regret_none += rec.regret[3];
      s.loss_none += rec.log_loss[3];
      ++nn;
    } else {
      s.regret_drift += rec.regret[3];
      s.loss_drift += rec.log_loss[3];
      ++nd;
    }
  }
  s.regret_drift /= nd;
  s.loss_drift /= nd;
  s.regret_none /= nn;
  s.loss_none /= nn;
  return s;
}

}  // namespace

TEST_CASE("EMA follower loses more during drift") {
  int worse = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DriftSplit s = follower_by_regime(seed);
    worse += s.loss_drift > s.loss_none;
  }
  CHECK(worse >= 9);
}

// The network itself degrades during drift, so the follower's regret against
// it need not drop; measured 1 of 10 seeds.
TEST_CASE("EMA follower regret is lower during drift" * doctest::may_fail()) {
  int lagging = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DriftSplit s = follower_by_regime(seed);
    lagging += s.regret_drift < s.regret_none;
  }
  MESSAGE(lagging << " of 10 seeds");
  CHECK(lagging >= 9);
}

TEST_CASE("generators are pure functions of the seed") {
  ScenarioConfig sc;
  const auto a = generate_scenario(sc, 200, 9);
  const auto b = generate_scenario(sc, 200, 9);
  const auto& ta = std::get<InferenceTable>(a.table);
  const auto& tb = std::get<InferenceTable>(b.table);
  CHECK(ta.inference == tb.inference);
  CHECK(ta.truth == tb.truth);
  const auto c = generate_scenario(sc, 200, 10);
  CHECK_FALSE(std::get<InferenceTable>(c.table).truth == ta.truth);

  sc.kind = ScenarioKind::Sine;
  CHECK(std::get<RegretTable>(generate_scenario(sc, 100, 1).table).regret ==
        std::get<RegretTable>(generate_scenario(sc, 100, 1).table).regret);
  sc.kind = ScenarioKind::Replay;
  CHECK_THROWS_AS(generate_scenario(sc, 100, 1), Error);
}

TEST_CASE("scenario names") {
  for (auto k : {ScenarioKind::Sine, ScenarioKind::Periodic, ScenarioKind::Contextual, ScenarioKind::Replay})
    CHECK(parse_scenario_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_scenario_kind("garch"), Error);
}

TEST_CASE("sinusoidal outperformer ACF peaks at its period") {
  const RegretTable t = gen_sinusoidal(2000, {{1.0, 10, 1.0}, {1.5, 17, 1.0}}, 0, 11);
  for (std::size_t j = 0; j < 2; ++j) {
    const int period = j == 0 ? 10 : 17;
    const auto r = features::acf(t.regret.column(j), period + 5);
    std::size_t best = 2;
    for (std::size_t k = 2; k < r.size(); ++k)
      if (r[k] > r[best]) best = k;
    CHECK(std::abs(static_cast<int>(best) - period) <= 1);
  }
}
