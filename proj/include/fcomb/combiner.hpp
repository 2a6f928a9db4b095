#pragma once

// Combination math: losses -> regrets -> normalized regrets / z-scores ->
// sigmoid weights -> forecast-implied, network and naive inferences, plus
// EMA regret tracking.

#include <cstddef>
#include <span>
#include <vector>

#include "fcomb/core.hpp"

namespace fcomb::combine {

/// Squared error of a scalar inference.
double epoch_loss(double inference, double truth);

/// Logarithm of `loss`; losses below `floor` are clamped to it and counted
/// in `clamped` when supplied.
double to_log_loss(double loss, LogBase base, double floor = 1e-12,
                   std::size_t* clamped = nullptr);

/// Forecasted regret against the previous epoch's network log loss.
double regret_from_forecast_loss(double prev_network_log_loss, double forecast_log_loss);

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;  // population
  std::size_t count = 0;
};

/// Population mean and standard deviation over the present entries.
Moments population_moments(std::span<const double> values);

/// Divides each present value by (population stddev + epsilon). Not centered.
std::vector<double> normalize_regrets(std::span<const double> regrets, double epsilon);

/// Regret z-scores across workers at one epoch; absent entries stay absent.
std::vector<double> zscores(std::span<const double> regrets, double epsilon);

/// Sigmoid gate p / (exp(-p (x - c)) + 1).
double weight_fn(double x, double p, double c);

/// log of weight_fn, finite even where weight_fn underflows.
double log_weight_fn(double x, double p, double c);

enum class WeightSource { FromForecast, FromEma };

struct WeightVector {
  std::vector<double> values;      // absent where the worker did not contribute
  std::vector<double> log_values;  // used for the ratio so tiny weights never vanish
  WeightSource provenance = WeightSource::FromForecast;

  std::size_t size() const { return values.size(); }
};

/// Gates already-scaled scores through weight_fn.
WeightVector weights_from_scores(std::span<const double> scores, double p, double c,
                                 WeightSource provenance);

/// Dispatches on the forecast target: LOSS converts to regrets against the
/// previous network log loss and normalizes, REGRET normalizes, ZSCORE is
/// gated directly after adding delta_z.
WeightVector weights_from_forecast(TargetKind kind, std::span<const double> forecasts,
                                   double prev_network_log_loss, const TopicConfig& cfg);

/// Weighted mean of the present inferences.
double forecast_implied_inference(std::span<const double> inferences, const WeightVector& weights);

/// EMA step; an absent `prev_ema` initializes to `regret`.
double update_ema_regret(double prev_ema, double regret, double alpha);

/// Combines raw and forecast-implied inferences with EMA-regret weights.
/// `ema_regrets` lists raw contributors first, then implied ones; an absent
/// EMA (no history yet) counts as zero regret.
double network_inference(std::span<const double> raw, std::span<const double> implied,
                         std::span<const double> ema_regrets, const TopicConfig& cfg);

double naive_network_inference(std::span<const double> raw, std::span<const double> ema_regrets,
                               const TopicConfig& cfg);

/// Plays the submission log forward, scoring every epoch against the naive
/// network inference and maintaining EMA regrets.
EpochPanel roll_forward(const InferenceTable& table, const TopicConfig& cfg,
                        std::size_t* clamped = nullptr);

/// Wraps a regret-only benchmark as a panel.
EpochPanel panel_from_regrets(const RegretTable& table, const TopicConfig& cfg);

}  // namespace fcomb::combine
