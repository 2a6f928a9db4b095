#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "fcomb/combiner.hpp"

using namespace fcomb;
using namespace fcomb::combine;

namespace {

// Plain sum-of-products oracle for the weighted means.
double brute_weighted_mean(const std::vector<double>& v, const std::vector<double>& w) {
  double num = 0, den = 0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    num += w[j] * v[j];
    den += w[j];
  }
  return num / den;
}

double sigmoid_oracle(double x, double p, double c) { return p / (std::exp(-p * (x - c)) + 1.0); }

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("epoch_loss") {
  CHECK(epoch_loss(1000, 1000) == 0);
  CHECK(epoch_loss(1003, 1000) == 9);
  CHECK(epoch_loss(997, 1000) == 9);
}

TEST_CASE("to_log_loss") {
  CHECK(to_log_loss(1, LogBase::Ten) == 0);
  CHECK(to_log_loss(100, LogBase::Ten) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(to_log_loss(9, LogBase::Ten) == doctest::Approx(0.9542425094).epsilon(1e-9));
  std::size_t clamped = 0;
  CHECK(to_log_loss(0, LogBase::Ten, 1e-12, &clamped) == doctest::Approx(-12.0));
  CHECK(clamped == 1);
}

TEST_CASE("regret_from_forecast_loss") {
  CHECK(regret_from_forecast_loss(1.0, 1.0) == 0);
  CHECK(regret_from_forecast_loss(2.0, 1.0) == 1.0);
  CHECK(regret_from_forecast_loss(1.0, 2.5) == -1.5);
}

TEST_CASE("normalize_regrets is scaled but not centered") {
  auto z = normalize_regrets(std::vector<double>{0, 0, 0}, 1e-8);
  for (double v : z) CHECK(v == 0);
  auto a = normalize_regrets(std::vector<double>{1, -1}, 1e-8);
  CHECK(a[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(a[1] == doctest::Approx(-1.0).epsilon(1e-7));
  // population sigma of {2,0,-2} is sqrt(8/3)
  const double s = std::sqrt(8.0 / 3.0);
  auto b = normalize_regrets(std::vector<double>{2, 0, -2}, 1e-8);
  CHECK(b[0] == doctest::Approx(2.0 / s).epsilon(1e-7));
  CHECK(b[1] == 0);
  CHECK(b[2] == doctest::Approx(-2.0 / s).epsilon(1e-7));
  auto shifted = normalize_regrets(std::vector<double>{3, 1}, 1e-8);
  CHECK(shifted[0] == doctest::Approx(3.0).epsilon(1e-7));
}

TEST_CASE("absent workers drop out of cross-sectional statistics") {
  auto z = zscores(std::vector<double>{2, kAbsent, -2}, 1e-8);
  CHECK(is_absent(z[1]));
  CHECK(z[0] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("weight_fn") {
  CHECK(weight_fn(0.75, 3, 0.75) == 1.5);
  CHECK(weight_fn(0.75 + 100, 3, 0.75) > 2.999);
  CHECK(weight_fn(0, 3, 0.75) == doctest::Approx(3.0 / (std::exp(2.25) + 1.0)).epsilon(1e-14));
  CHECK(weight_fn(0, 3, 0.75) == doctest::Approx(0.28606).epsilon(1e-4));
  CHECK(weight_fn(-400, 3, 0.75) >= 0.0);
  CHECK(std::isfinite(log_weight_fn(-400, 3, 0.75)));
  CHECK(log_weight_fn(0.3, 3, 0.75) == doctest::Approx(std::log(weight_fn(0.3, 3, 0.75))));
}

TEST_CASE("weights_from_forecast dispatch") {
  TopicConfig cfg;
  auto z = weights_from_forecast(TargetKind::ZScore, std::vector<double>{0, 0}, 0.0, cfg);
  CHECK(z.values[0] == doctest::Approx(3.0 / (std::exp(5.25) + 1.0)).epsilon(1e-12));
  CHECK(z.values[0] == doctest::Approx(0.01566).epsilon(1e-3));
  CHECK(z.values[1] == z.values[0]);

  auto r = weights_from_forecast(TargetKind::Regret, std::vector<double>{0, 0}, 0.0, cfg);
  CHECK(r.values[0] == doctest::Approx(0.28606).epsilon(1e-4));
  CHECK(r.values[1] == r.values[0]);

  auto l = weights_from_forecast(TargetKind::Loss, std::vector<double>{1.7, 1.7}, 1.7, cfg);
  CHECK(l.values[0] == l.values[1]);
  CHECK(l.values[0] == doctest::Approx(weight_fn(0, 3, 0.75)));

  // LOSS routes through regret = prev - forecast before normalizing.
  auto l2 = weights_from_forecast(TargetKind::Loss, std::vector<double>{0.0, 2.0}, 1.0, cfg);
  auto r2 = weights_from_forecast(TargetKind::Regret, std::vector<double>{1.0, -1.0}, 0.0, cfg);
  CHECK(l2.values[0] == doctest::Approx(r2.values[0]));
  CHECK(l2.values[1] == doctest::Approx(r2.values[1]));
  CHECK_THROWS_AS(weights_from_forecast(static_cast<TargetKind>(9), std::vector<double>{0}, 0, cfg), Error);
}

TEST_CASE("forecast_implied_inference") {
  WeightVector w = weights_from_scores(std::vector<double>{0.75, 0.75}, 3, 0.75, WeightSource::FromForecast);
  CHECK(forecast_implied_inference(std::vector<double>{10, 20}, w) == doctest::Approx(15));
  WeightVector w31;
  w31.values = {3, 1};
  w31.log_values = {std::log(3.0), 0.0};
  CHECK(forecast_implied_inference(std::vector<double>{10, 20}, w31) == doctest::Approx(12.5));
  WeightVector one;
  one.values = {0.2};
  one.log_values = {std::log(0.2)};
  CHECK(forecast_implied_inference(std::vector<double>{42}, one) == 42);
  WeightVector none = weights_from_scores(std::vector<double>{kAbsent}, 3, 0.75, WeightSource::FromForecast);
  CHECK_THROWS_AS(forecast_implied_inference(std::vector<double>{kAbsent}, none), Error);
}

TEST_CASE("implied inference is convex and matches the sum oracle") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> inf(7), f(7);
    for (std::size_t j = 0; j < 7; ++j) {
      inf[j] = 1000 + 10 * n01(rng);
      f[j] = n01(rng);
    }
    TopicConfig cfg;
    const WeightVector w = weights_from_forecast(TargetKind::ZScore, f, 0.0, cfg);
    const double got = forecast_implied_inference(inf, w);
    CHECK(rel_close(got, brute_weighted_mean(inf, w.values), 1e-12));
    CHECK(got >= *std::min_element(inf.begin(), inf.end()));
    CHECK(got <= *std::max_element(inf.begin(), inf.end()));
    for (double v : w.values) {
      CHECK(v > 0);
      CHECK(v < 3);
    }
  }
}

TEST_CASE("update_ema_regret") {
  CHECK(update_ema_regret(0, 1, 0.1) == doctest::Approx(0.1));
  CHECK(update_ema_regret(1, 1, 0.37) == doctest::Approx(1.0));
  CHECK(update_ema_regret(kAbsent, -0.4, 0.1) == -0.4);
  double ema = 2.0;
  const double r = -0.5, a = 0.1;
  for (int n = 1; n <= 50; ++n) {
    ema = update_ema_regret(ema, r, a);
    CHECK(std::abs(ema - r) <= std::pow(1 - a, n) * std::abs(2.0 - r) + 1e-12);
  }
}

TEST_CASE("network_inference") {
  TopicConfig cfg;
  CHECK(network_inference(std::vector<double>{1, 2}, std::vector<double>{6},
                          std::vector<double>{0.3, 0.3, 0.3}, cfg) == doctest::Approx(3.0));
  CHECK(network_inference(std::vector<double>{7}, {}, std::vector<double>{-2}, cfg) == 7);

  double prev = 1.0;
  for (double d : {0.5, 1.0, 2.0}) {
    const double v = network_inference(std::vector<double>{0, 2}, {}, std::vector<double>{0.1, 0.1 + d}, cfg);
    CHECK(v > 1.0);
    CHECK(v <= 2.0);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(network_inference(std::vector<double>{1, 2}, {}, std::vector<double>{0}, cfg), Error);
  CHECK_THROWS_AS(network_inference({}, {}, {}, cfg), Error);
}

TEST_CASE("network_inference weighting matches the sum oracle with and without normalization") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n01;
  for (bool normalize : {true, false}) {
    TopicConfig cfg;
    cfg.normalize_ema_regrets = normalize;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> raw(6), implied(2), ema(8);
      for (auto& v : raw) v = 50 + n01(rng);
      for (auto& v : implied) v = 50 + n01(rng);
      for (auto& v : ema) v = 0.5 * n01(rng);
      std::vector<double> scores = normalize ? normalize_regrets(ema, cfg.epsilon) : ema;
      std::vector<double> all = raw, w;
      all.insert(all.end(), implied.begin(), implied.end());
      for (double s : scores) w.push_back(sigmoid_oracle(s, cfg.p, cfg.c));
      CHECK(rel_close(network_inference(raw, implied, ema, cfg), brute_weighted_mean(all, w), 1e-12));
    }
  }
}

TEST_CASE("naive_network_inference") {
  TopicConfig cfg;
  CHECK(naive_network_inference(std::vector<double>{2, 4, 9}, std::vector<double>{1, 1, 1}, cfg) ==
        doctest::Approx(5.0));
  CHECK(naive_network_inference(std::vector<double>{3.5}, std::vector<double>{0.2}, cfg) == 3.5);
  const std::vector<double> raw{1, 5, 2}, ema{0.3, -0.2, 0.9};
  const double a = naive_network_inference(raw, ema, cfg);
  const double b = network_inference(raw, {}, ema, cfg);
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);
}

TEST_CASE("zscores") {
  for (double v : zscores(std::vector<double>{5, 5, 5}, 1e-8)) CHECK(v == 0);
  const double s = std::sqrt(8.0 / 3.0);
  auto z = zscores(std::vector<double>{2, 0, -2}, 1e-8);
  CHECK(z[0] == doctest::Approx(2 / s).epsilon(1e-7));
  CHECK(z[1] == 0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> r(9), shifted(9);
    for (std::size_t j = 0; j < r.size(); ++j) {
      r[j] = n01(rng);
      shifted[j] = r[j] + 7.0;
    }
    auto a = zscores(r, 1e-8), b = zscores(shifted, 1e-8);
    double mean = 0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      CHECK(std::abs(a[j] - b[j]) <= 1e-12);
      mean += a[j];
    }
    CHECK(std::abs(mean / 9) < 1e-10);
    const Moments m = population_moments(a);
    const double sigma = population_moments(r).stddev;
    CHECK(m.stddev <= 1.0 + 1e-12);
    CHECK(m.stddev >= sigma / (sigma + 1e-8) - 1e-12);
  }
}

TEST_CASE("ZSCORE weights ignore a uniform regret shift") {
  TopicConfig cfg;
  const std::vector<double> regrets{0.3, -1.2, 0.8, 0.0};
  std::vector<double> shifted = regrets;
  for (auto& v : shifted) v += 4.2;
  auto a = weights_from_forecast(TargetKind::ZScore, zscores(regrets, cfg.epsilon), 1.0, cfg);
  auto b = weights_from_forecast(TargetKind::ZScore, zscores(shifted, cfg.epsilon), -3.0, cfg);
  for (std::size_t j = 0; j < regrets.size(); ++j) CHECK(a.values[j] == doctest::Approx(b.values[j]).epsilon(1e-12));
}

TEST_CASE("weight_fn is strictly increasing") {
  double prev = weight_fn(-10, 3, 0.75);
  for (int k = 1; k <= 10000; ++k) {
    const double x = -10 + 20.0 * k / 10000;
    const double w = weight_fn(x, 3, 0.75);
    CHECK(w > prev);
    prev = w;
  }
}

TEST_CASE("scaling weights leaves the implied inference unchanged") {
  WeightVector w = weights_from_scores(std::vector<double>{0.1, 1.3, -0.4}, 3, 0.75, WeightSource::FromForecast);
  WeightVector scaled = w;
  for (std::size_t j = 0; j < w.size(); ++j) {
    scaled.values[j] *= 17.0;
    scaled.log_values[j] += std::log(17.0);
  }
  const std::vector<double> inf{3, 8, -2};
  CHECK(rel_close(forecast_implied_inference(inf, scaled), forecast_implied_inference(inf, w), 1e-12));
}
