#pragma once

// One end-to-end experiment: roll the panel forward, build features, train
// the forecaster on the training window, then forecast, weight and combine
// every test epoch.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fcomb/core.hpp"
#include "fcomb/features.hpp"
#include "fcomb/forecaster.hpp"
#include "fcomb/metrics.hpp"
#include "fcomb/synth.hpp"

namespace fcomb::eval {

struct TrialOptions {
  learn::LearnerConfig learner;
  /// False runs the naive-only pipeline (no forecaster is trained).
  bool with_forecaster = true;
  /// Per-worker Huber fits of predicted vs true targets.
  bool diagnostics = false;
  int bootstrap_n = 1000;
};

struct EpochResult {
  int epoch = 0;
  double truth = kAbsent;
  std::vector<double> inference;
  std::vector<double> forecast;     // predicted target per worker
  std::vector<double> true_target;  // realized target per worker
  std::vector<double> weights;
  double implied = kAbsent;
  double naive = kAbsent;
  double network = kAbsent;
};

struct WorkerDiagnostics {
  std::string worker;
  double median_true = kAbsent;
  double median_pred = kAbsent;
  std::optional<HuberFit> fit;
  /// Slope above zero at the 1-sigma bootstrap band.
  bool positive = false;
};

struct TrialResult {
  std::uint64_t seed = 0;
  TopicConfig topic;
  TrialOptions options;
  std::vector<WorkerId> workers;
  std::vector<EpochResult> epochs;  // test window only

  std::vector<double> worker_rmse;  // forecast vs true target, absent without forecasts
  double implied_log_loss = kAbsent;
  double naive_log_loss = kAbsent;
  double network_log_loss = kAbsent;
  std::size_t degenerate_epochs = 0;

  std::map<std::string, std::vector<int>> lags;
  std::vector<std::string> feature_names;
  std::vector<WorkerDiagnostics> diagnostics;
};

/// Panel with naive-inference bookkeeping (or regret passthrough).
EpochPanel build_panel(const synth::ScenarioData& data, const TopicConfig& cfg);

/// Baseline features (plus market columns when present). Lag selection only
/// sees epochs before `test_begin`.
features::BaselineResult build_trial_features(const synth::ScenarioData& data, const EpochPanel& panel,
                                              const TopicConfig& cfg, std::size_t test_begin);

/// Trains and evaluates one forecaster on prepared panel and features. The
/// test window is the last `cfg.n_test` epochs.
TrialResult evaluate_forecaster(const EpochPanel& panel, const features::BaselineResult& feats,
                                const TopicConfig& cfg, const TrialOptions& opts, std::uint64_t seed);

TrialResult run_trial(const synth::ScenarioData& data, const TopicConfig& cfg, const TrialOptions& opts,
                      std::uint64_t seed);

/// Fills summary fields from the per-epoch records.
void summarize(TrialResult& r);

/// Per-worker Huber fits of predicted against true targets.
std::vector<WorkerDiagnostics> context_awareness_report(const TrialResult& r, int bootstrap_n = 1000,
                                                        std::uint64_t seed = 0);

}  // namespace fcomb::eval
