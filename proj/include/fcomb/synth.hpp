#pragma once

// Seeded benchmark generators: sinusoidal regrets, fixed-interval
// outperformance, and a regime-switching GBM price path with archetypal
// inferers whose skill depends on the drift regime.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fcomb/core.hpp"
#include "fcomb/features.hpp"

namespace fcomb::synth {

// ---------------------------------------------------------------------------
// Regret-only benchmarks
// ---------------------------------------------------------------------------

struct SineSpec {
  double amplitude = 1.0;
  int period = 10;
  double noise_half_width = 1.0;

  void validate() const;
  bool operator==(const SineSpec&) const = default;
};

/// Outperformers follow amplitude*sin(2*pi*i/period) + U(-h, h); `n_random`
/// further workers draw U(-random_half_width, random_half_width). Workers are
/// named allo0, allo1, ... in that order; epochs are 0..n_epochs-1.
RegretTable gen_sinusoidal(std::size_t n_epochs, const std::vector<SineSpec>& specs, int n_random,
                           std::uint64_t seed, double random_half_width = 1.0);

struct SpikeSpec {
  double height = 1.0;
  int period = 10;
  double base_half_width = 0.5;

  void validate() const;
  bool operator==(const SpikeSpec&) const = default;
};

/// Regret = height at epochs divisible by the period, otherwise
/// U(-base_half_width, base_half_width).
std::vector<double> fixed_interval_series(std::size_t n_epochs, const SpikeSpec& spike,
                                          std::uint64_t seed);

/// One worker per spike spec followed by `n_random` uniform-noise workers.
RegretTable gen_fixed_interval(std::size_t n_epochs, const std::vector<SpikeSpec>& spikes,
                               int n_random, std::uint64_t seed, double random_half_width = 0.5);

// ---------------------------------------------------------------------------
// Regime-switching GBM
// ---------------------------------------------------------------------------

enum class Regime { Down, None, Up };

std::string_view to_string(Regime r);

struct GbmSpec {
  double init = 1000.0;
  double sigma = 0.01;
  /// Drift for DOWN, NONE, UP.
  std::array<double, 3> drift_values{-0.01, 0.0, 0.01};
  double mean_len = 5.0;
  /// Relative weight of NONE against each drift label.
  double none_weight = 3.0;
  bool allow_self_transitions = true;

  void validate() const;
  bool operator==(const GbmSpec&) const = default;
};

struct RegimeSegment {
  Regime label = Regime::None;
  std::size_t length = 1;
};

/// Successive segments: label drawn with weights {1, none_weight, 1},
/// length max(1, Poisson(mean_len)).
class SegmentSampler {
 public:
  SegmentSampler(const GbmSpec& spec, std::uint64_t seed);
  RegimeSegment next();

 private:
  GbmSpec spec_;
  std::mt19937_64 rng_;
  std::optional<Regime> last_;
};

std::vector<RegimeSegment> sample_regime_segments(std::size_t n_segments, const GbmSpec& spec,
                                                  std::uint64_t seed);

struct DriftRegime {
  std::vector<double> drift;
  std::vector<Regime> label;

  std::size_t size() const { return label.size(); }
};

struct GbmPath {
  std::vector<double> price;
  /// log(price[t] / price[t-1]); absent at t = 0.
  std::vector<double> log_return;
  /// Regime governing the return into epoch t.
  DriftRegime regime;
};

/// price[0] = init; price[t] = price[t-1] * exp(drift_t + sigma * N(0,1)).
GbmPath gen_gbm_truth(std::size_t n_epochs, const GbmSpec& spec, std::uint64_t seed);

enum class Archetype { SpecialistDown, SpecialistUp, SpecialistNone, Random, EmaFollower };

std::string_view to_string(Archetype a);

struct InfererSpec {
  std::string id;
  Archetype archetype = Archetype::Random;
  /// Noise factor range in the worker's matching regime (specialists only).
  std::array<double, 2> skilled_factor{0.1, 0.3};
  /// Noise factor range otherwise (and always for non-specialists).
  std::array<double, 2> factor{0.5, 1.0};
  int ema_span = 0;

  bool operator==(const InfererSpec&) const = default;
};

/// allo0-2 specialists (DOWN, UP, NONE), allo3-5 EMA followers (spans 5, 7,
/// 9), allo6-9 random.
std::vector<InfererSpec> default_contextual_inferers();

struct ContextualOptions {
  bool redraw_factors_per_epoch = false;
  /// Multiplies every noise standard deviation; 0 gives noiseless inferers.
  double noise_scale = 1.0;

  bool operator==(const ContextualOptions&) const = default;
};

struct ContextualInferences {
  /// Price-space submissions; epochs 1..n-1 of the path, truth = price[t].
  InferenceTable table;
  /// Predicted log returns, same shape as table.inference.
  Matrix log_return;
  /// Regime label per table epoch.
  std::vector<Regime> regime;
};

ContextualInferences gen_contextual_inferers(const GbmPath& path, const std::vector<InfererSpec>& inferers,
                                             double sigma, std::uint64_t seed,
                                             const ContextualOptions& opts = {});

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

enum class ScenarioKind { Sine, Periodic, Contextual, Replay };

std::string_view to_string(ScenarioKind k);
ScenarioKind parse_scenario_kind(std::string_view s);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Contextual;
  std::vector<SineSpec> sines{{1.0, 10, 1.0}, {1.5, 17, 1.0}};
  std::vector<SpikeSpec> spikes{{1.0, 10, 0.5}};
  int n_random = 8;
  /// Half-width of random regrets; the periodic benchmark uses the spike
  /// base half-width.
  double random_half_width = 1.0;
  GbmSpec gbm;
  std::vector<InfererSpec> inferers = default_contextual_inferers();
  ContextualOptions contextual;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Everything a trial consumes: submissions (or regrets) plus optional
/// private data.
struct ScenarioData {
  std::variant<InferenceTable, RegretTable> table;
  std::optional<MarketSeries> market;
  std::optional<features::WorkerSideColumns> side;
  /// Drift regime per epoch (contextual benchmark only).
  std::vector<Regime> regime;

  std::size_t n_epochs() const;
  const std::vector<WorkerId>& workers() const;
  const std::vector<int>& epochs() const;
  bool has_truth() const { return std::holds_alternative<InferenceTable>(table); }
};

/// Generates `n_epochs` epochs of a synthetic scenario. Replay scenarios are
/// loaded by the CLI layer instead.
ScenarioData generate_scenario(const ScenarioConfig& cfg, std::size_t n_epochs, std::uint64_t seed);

}  // namespace fcomb::synth
