#pragma once

// Forecaster orchestration: target construction, global vs per-inferer model
// structure with global fallback, training-window selection and per-epoch
// prediction.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fcomb/core.hpp"
#include "fcomb/features.hpp"
#include "fcomb/gbt.hpp"

namespace fcomb::learn {

struct LearnerConfig {
  GbtHyperparams hp;
  /// Randomized-search trials per model; 0 fits `hp` directly.
  int tune_trials = 0;
  std::size_t min_train_rows = kDefaultMinTrainRows;
  double corr_cap = 0.95;

  bool operator==(const LearnerConfig&) const = default;
};

/// Target per (epoch, worker): log loss, regret, or regret z-score.
Matrix build_targets(const EpochPanel& panel, TargetKind kind, double epsilon = 1e-8);

/// One fitted model plus the column schema and imputation medians it needs.
struct ModelBundle {
  std::vector<std::string> columns;
  std::vector<double> medians;
  GbtModel model;

  DataMatrix design(const features::FeatureMatrix& X, std::span<const std::size_t> rows) const;
  std::vector<double> predict(const features::FeatureMatrix& X, std::span<const std::size_t> rows) const;
};

struct Forecaster {
  Structure structure = Structure::PerInferer;
  TargetKind target = TargetKind::ZScore;
  std::map<std::string, ModelBundle> per_worker;
  ModelBundle global;
  int first_epoch = 0;  // training window, inclusive epoch ids
  int last_epoch = 0;
  std::uint64_t seed = 0;

  /// The per-worker model when one was trained, otherwise the global fallback.
  const ModelBundle& model_for(const std::string& worker_id) const;

  nlohmann::json to_json() const;
  static Forecaster from_json(const nlohmann::json& j);
};

inline constexpr int kForecasterFormatVersion = 1;

/// Trains on the `cfg.n_train` epochs preceding epoch index `test_begin`.
Forecaster train_forecaster(const EpochPanel& panel, const features::FeatureMatrix& X,
                            const TopicConfig& cfg, const LearnerConfig& lc,
                            std::size_t test_begin, std::uint64_t seed);

/// Predicted target per feature row in `rows`.
std::vector<double> forecast_rows(const Forecaster& f, const features::FeatureMatrix& X,
                                  std::span<const std::size_t> rows);

/// One prediction per worker present at `epoch_index`; absent otherwise.
std::vector<double> forecast_epoch(const Forecaster& f, const features::FeatureMatrix& X,
                                   std::size_t epoch_index);

}  // namespace fcomb::learn
