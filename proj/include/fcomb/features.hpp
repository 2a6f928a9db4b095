#pragma once

// Leakage-safe feature construction from network history (baseline) and
// market data (private): engineered transforms, autocorrelation lags,
// cross-sectional statistics and correlation pruning.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcomb/core.hpp"

namespace fcomb::features {

/// Window lengths for the transform families. Either one uniform set applied
/// to every family, or one span per family ordered [gradient, rolling, ema].
struct SpanPlan {
  std::vector<int> uniform{3, 14};
  std::optional<std::array<int, 3>> adaptive;

  static SpanPlan from_config(const TopicConfig& cfg);
  static SpanPlan adaptive_plan(int gradient_span, int rolling_span, int ema_span);

  std::vector<int> gradient_spans() const;
  std::vector<int> rolling_spans() const;
  std::vector<int> ema_spans() const;
  int max_span() const;
  void validate() const;
  /// "[3,14]" or "adaptive[3,7,14]".
  std::string label() const;

  bool operator==(const SpanPlan&) const = default;
};

struct NamedSeries {
  std::string name;
  std::vector<double> values;
};

/// Gradient, acceleration, momentum, EWM mean/std, rolling mean/std and
/// difference from the rolling mean of `x`. Value at t only uses x[0..t];
/// warm-up positions are absent. Names are suffixes ("grad", "mom3", ...).
std::vector<NamedSeries> transform_series(std::span<const double> x, const SpanPlan& plan);

/// Sample autocorrelation r_0..r_max_lag over present values. A zero-variance
/// series reports 0 for every lag >= 1 and sets `degenerate`.
std::vector<double> acf(std::span<const double> x, int max_lag, bool* degenerate = nullptr);

/// Partial autocorrelation via Durbin-Levinson on the ACF; index 0 is 1.
std::vector<double> pacf(std::span<const double> x, int max_lag, bool* degenerate = nullptr);

struct LagSet {
  std::vector<int> lags;
  double confidence = 0.99;
};

/// Two-sided normal significance band for a series of length n.
double significance_band(std::size_t n, double confidence);

/// Lags >= 2 significant in both ACF and PACF at `confidence`.
LagSet select_lags(std::span<const double> x, int max_lag, double confidence = 0.99);

struct CrossSection {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> z;
};

CrossSection cross_sectional_stats(std::span<const double> values, double epsilon = 1e-8);

// ---------------------------------------------------------------------------
// Feature matrix
// ---------------------------------------------------------------------------

struct FeatureColumn {
  std::string name;
  /// 0: may use the current epoch's submissions; 1: previous epoch only.
  int offset = 0;
  /// How many epochs back the newest source datum sits; must be >= offset.
  int source_shift = 0;
  std::vector<double> values;
};

struct RowKey {
  std::size_t epoch_index = 0;
  std::size_t worker = 0;
};

/// Rows keyed by (epoch, worker) in epoch-major order; column-major values.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<RowKey> keys, std::vector<int> epoch_ids,
                std::vector<std::string> worker_ids);

  std::size_t n_rows() const { return keys_.size(); }
  std::size_t n_cols() const { return columns_.size(); }
  const std::vector<RowKey>& keys() const { return keys_; }
  const std::vector<FeatureColumn>& columns() const { return columns_; }
  const std::vector<int>& epoch_ids() const { return epoch_ids_; }
  const std::vector<std::string>& worker_ids() const { return worker_ids_; }

  std::optional<std::size_t> column_index(std::string_view name) const;
  const FeatureColumn& column(std::string_view name) const;
  std::vector<std::string> column_names() const;

  void add_column(FeatureColumn col);
  /// Copy restricted to `names` (kept in this matrix's column order).
  FeatureMatrix select_columns(const std::vector<std::string>& names) const;

  std::vector<std::size_t> rows_at_epoch(std::size_t epoch_index) const;
  std::vector<std::size_t> rows_in_epochs(std::size_t begin, std::size_t end) const;

  /// Throws Feature if any column's source is newer than its availability tag.
  void check_availability() const;

  /// Header: epoch,worker_id,<name>@<offset>...
  void write_csv(std::ostream& out) const;

 private:
  std::vector<RowKey> keys_;
  std::vector<int> epoch_ids_;
  std::vector<std::string> worker_ids_;
  std::vector<FeatureColumn> columns_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::size_t> epoch_begin_;  // first row of each epoch, size n_epochs+1
};

enum class LagMode { None, Auto, Fixed };

struct LagPolicy {
  LagMode mode = LagMode::Auto;
  int max_lag = 60;
  double confidence = 0.99;
  /// Lag selection only looks at epoch indices < fit_end.
  std::size_t fit_end = static_cast<std::size_t>(-1);
  /// Family ("log_loss", "regret") -> lags, for LagMode::Fixed.
  std::map<std::string, std::vector<int>> fixed;
};

/// Optional externally supplied per-worker columns (rewards, scores);
/// epochs x workers, read at the previous epoch.
struct WorkerSideColumns {
  std::map<std::string, Matrix> columns;
};

struct BaselineResult {
  FeatureMatrix matrix;
  /// Family -> lags actually used.
  std::map<std::string, std::vector<int>> lags;
};

inline constexpr std::string_view kInfererIdColumn = "inferer_id";

/// Per (epoch, present worker) rows of network-derived features.
BaselineResult build_baseline_features(const EpochPanel& panel, const SpanPlan& plan,
                                       const LagPolicy& lags, double epsilon = 1e-8,
                                       const WorkerSideColumns* side = nullptr);

/// Per-epoch private features from market bars, shifted so that the value at
/// epoch t only uses bars strictly before t.
std::vector<FeatureColumn> build_market_features(const MarketSeries& mkt, const SpanPlan& plan);

/// Broadcasts per-epoch columns (aligned to the matrix epochs) to every row.
void attach_epoch_columns(FeatureMatrix& X, const std::vector<FeatureColumn>& cols);

/// Aligns market bars onto panel epochs (absent where no bar exists).
MarketSeries align_market(const MarketSeries& mkt, const std::vector<int>& epochs);

/// Names surviving zero-variance and pairwise-correlation pruning evaluated
/// on `rows` against target `y`. Columns in `keep` bypass pruning.
std::vector<std::string> prune_columns(const FeatureMatrix& X, std::span<const std::size_t> rows,
                                       std::span<const double> y, double var_floor = 0.0,
                                       double corr_cap = 0.95,
                                       const std::set<std::string>& keep = {});

FeatureMatrix prune_features(const FeatureMatrix& X, std::span<const std::size_t> rows,
                             std::span<const double> y, double var_floor = 0.0,
                             double corr_cap = 0.95, const std::set<std::string>& keep = {});

}  // namespace fcomb::features
