#include "doctest.h"

#include <array>
#include <cmath>

#include "fcomb/combiner.hpp"
#include "fcomb/core.hpp"
#include "fcomb/synth.hpp"

using namespace fcomb;

namespace {

std::string validation_message(const TopicConfig& cfg) {
  try {
    validate_config(cfg);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Validation);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("validate_config accepts the fiducial configuration") {
  TopicConfig cfg;
  cfg.p = 3;
  cfg.c = 0.75;
  cfg.alpha = 0.1;
  cfg.delta_z = -1;
  cfg.span_set = {3, 14};
  CHECK(&validate_config(cfg) == &cfg);
}

TEST_CASE("validate_config names the violated invariant") {
  TopicConfig cfg;
  cfg.alpha = 0;
  CHECK(validation_message(cfg) == "alpha out of range");
  cfg = {};
  cfg.alpha = 1.5;
  CHECK(validation_message(cfg) == "alpha out of range");
  cfg = {};
  cfg.span_set = {14, 3};
  CHECK(validation_message(cfg) == "spans not increasing");
  cfg = {};
  cfg.span_set = {1, 3};
  CHECK(validation_message(cfg) == "span below 2");
  cfg = {};
  cfg.span_set.clear();
  CHECK(validation_message(cfg) == "span set empty");
  cfg.adaptive_spans = std::array<int, 3>{3, 7, 14};
  CHECK_NOTHROW(validate_config(cfg));
  cfg = {};
  cfg.epsilon = 0;
  CHECK(validation_message(cfg) == "epsilon must be positive");
  cfg = {};
  cfg.alpha = 1.0;  // closed upper bound
  CHECK(validation_message(cfg).empty());
}

TEST_CASE("target and structure names round-trip") {
  for (auto k : {TargetKind::Loss, TargetKind::Regret, TargetKind::ZScore})
    CHECK(parse_target_kind(to_string(k)) == k);
  for (auto s : {Structure::Global, Structure::PerInferer}) CHECK(parse_structure(to_string(s)) == s);
  CHECK_THROWS_AS(parse_target_kind("bogus"), Error);
}

TEST_CASE("log_in_base") {
  CHECK(log_in_base(100.0, LogBase::Ten) == doctest::Approx(2.0));
  CHECK(log_in_base(std::exp(1.0), LogBase::E) == doctest::Approx(1.0));
}

TEST_CASE("duplicate worker ids are rejected") {
  CHECK_NOTHROW(check_unique({{"a"}, {"b"}}));
  CHECK_THROWS_AS(check_unique({{"a"}, {"a", WorkerKind::Forecaster}}), Error);
}

TEST_CASE("EpochPanel append checks width and ordering") {
  EpochPanel p({{"a"}, {"b"}});
  EpochRecord r;
  r.epoch = 3;
  r.inference = {1, 2};
  r.loss = {0, 1};
  r.log_loss = {kAbsent, 0};
  r.regret = {kAbsent, 0};
  r.ema_regret = {kAbsent, 0};
  p.append(r);
  CHECK(p.n_epochs() == 1);
  CHECK(p.is_present(0, 0));
  CHECK(p.worker_index("b") == 1);
  CHECK_FALSE(p.worker_index("c").has_value());

  EpochRecord same = r;
  CHECK_THROWS_AS(p.append(same), Error);
  EpochRecord narrow = r;
  narrow.epoch = 4;
  narrow.inference = {1};
  CHECK_THROWS_AS(p.append(narrow), Error);
  EpochRecord negative = r;
  negative.epoch = 5;
  negative.loss = {-1, 0};
  CHECK_THROWS_AS(p.append(negative), Error);
}

TEST_CASE("MarketSeries bounds") {
  MarketSeries m;
  m.epochs = {0, 1};
  m.open = {10, 11};
  m.high = {12, 12};
  m.low = {9, 10};
  m.close = {11, 11.5};
  m.volume = {5, kAbsent};
  CHECK_NOTHROW(m.validate());
  m.high[1] = 11.2;
  CHECK_THROWS_AS(m.validate(), Error);
  m.high[1] = 12;
  m.volume[0] = -1;
  CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("regret identity holds for every filled cell of a rolled panel") {
  synth::ScenarioConfig sc;
  const auto data = synth::generate_scenario(sc, 300, 11);
  const TopicConfig cfg;
  const EpochPanel panel = combine::roll_forward(std::get<InferenceTable>(data.table), cfg);
  std::size_t checked = 0;
  for (const auto& rec : panel.records())
    for (std::size_t j = 0; j < panel.n_workers(); ++j) {
      if (is_absent(rec.regret[j])) continue;
      const double expect = rec.network_log_loss - rec.log_loss[j];
      CHECK(std::abs(rec.regret[j] - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
      ++checked;
    }
  CHECK(checked == 300 * 10);
}
