#pragma once

// Run configuration: one JSON document with topic, learner, scenario, sweep
// and diagnostics sections. Every field has a default; unknown keys are
// rejected so typos surface as validation errors.

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "fcomb/core.hpp"
#include "fcomb/forecaster.hpp"
#include "fcomb/sweep.hpp"
#include "fcomb/synth.hpp"

namespace fcomb::cli {

struct SweepSection {
  eval::SweepGrid grid;
  std::size_t repeats = 100;
  /// Test epochs per sweep trial (replaces topic.n_test for sweeps).
  int n_test = 200;

  bool operator==(const SweepSection& o) const {
    return grid.targets == o.grid.targets && grid.structures == o.grid.structures &&
           grid.span_sets == o.grid.span_sets && grid.n_trains == o.grid.n_trains && repeats == o.repeats &&
           n_test == o.n_test;
  }
};

struct RunConfig {
  TopicConfig topic;
  learn::LearnerConfig learner;
  synth::ScenarioConfig scenario;
  SweepSection sweep;
  int bootstrap_n = 1000;
  bool diagnostics = true;

  bool operator==(const RunConfig&) const = default;
};

/// Defaults for a scenario kind: regret-only benchmarks forecast regrets.
RunConfig default_run_config(synth::ScenarioKind kind);

nlohmann::json to_json(const RunConfig& cfg);
/// Fields absent from `j` keep the values in `base`.
RunConfig run_config_from_json(const nlohmann::json& j, const RunConfig& base);

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

/// 16 hex digits identifying the effective configuration.
std::string config_hash(const RunConfig& cfg);

/// Throws Validation on the first inconsistent field.
void validate(const RunConfig& cfg);

}  // namespace fcomb::cli
