#pragma once

// Repeated trials over a grid of target kinds, model structures, span sets
// and training lengths.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "fcomb/core.hpp"
#include "fcomb/features.hpp"
#include "fcomb/synth.hpp"
#include "fcomb/trial.hpp"

namespace fcomb::eval {

struct SweepGrid {
  std::vector<TargetKind> targets{TargetKind::Loss, TargetKind::Regret, TargetKind::ZScore};
  std::vector<Structure> structures{Structure::Global, Structure::PerInferer};
  std::vector<features::SpanPlan> span_sets = default_span_sets();
  /// Empty means the base config's n_train only.
  std::vector<int> n_trains;

  static std::vector<features::SpanPlan> default_span_sets();
  std::size_t n_cells() const;
  void validate() const;
};

/// "3-14" for uniform plans, "adaptive:3-7-14" otherwise.
std::string span_csv_label(const features::SpanPlan& plan);
features::SpanPlan parse_span_csv_label(const std::string& label);

struct SweepCell {
  TargetKind target = TargetKind::ZScore;
  Structure structure = Structure::PerInferer;
  features::SpanPlan spans;
  int n_train = 0;
  /// Implied mean log loss per repeat, indexed by trial.
  std::vector<double> log_loss;
  double median = kAbsent;
  /// Bootstrap standard error of `median`.
  double median_se = kAbsent;
};

struct SweepTable {
  std::vector<SweepCell> cells;
  /// Naive mean log loss per repeat (shared by every cell of that repeat).
  std::vector<double> naive;
  std::vector<std::uint64_t> seeds;
  std::size_t n_repeats = 0;

  const SweepCell& cell(TargetKind t, Structure s, const features::SpanPlan& spans, int n_train) const;
  const SweepCell& best(Structure s) const;

  /// Header: target,structure,spans,n_train,trial,seed,mean_log_loss,naive_log_loss
  void write_csv(std::ostream& out) const;
  nlohmann::json summary_json() const;
};

struct SweepOptions {
  TrialOptions trial;
  std::size_t n_repeats = 100;
  std::uint64_t base_seed = 0;
  /// 0 reads FORECAST_COMBINE_THREADS, falling back to hardware concurrency.
  unsigned threads = 0;
};

/// Builds the data for one repeat from its seed.
using DataSource = std::function<synth::ScenarioData(std::uint64_t seed)>;

/// Trial i of every cell uses seed base_seed + i for both data and learner.
/// Deterministic regardless of thread count.
SweepTable run_sweep(const DataSource& source, const TopicConfig& base, const SweepGrid& grid,
                     const SweepOptions& opts);

unsigned resolve_thread_count(unsigned requested);

}  // namespace fcomb::eval
