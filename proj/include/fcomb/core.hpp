#pragma once

// Shared domain types: topic configuration, worker registry, the per-epoch
// ledger and the small numeric helpers every other module leans on.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fcomb {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrorCode { Validation, Combine, Feature, Learn, Eval, Io, Parse };

std::string_view to_string(ErrorCode code);

/// Base of every error the library throws; carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Error validation_error(const std::string& msg) { return {ErrorCode::Validation, msg}; }
inline Error combine_error(const std::string& msg) { return {ErrorCode::Combine, msg}; }
inline Error feature_error(const std::string& msg) { return {ErrorCode::Feature, msg}; }
inline Error learn_error(const std::string& msg) { return {ErrorCode::Learn, msg}; }
inline Error eval_error(const std::string& msg) { return {ErrorCode::Eval, msg}; }

// ---------------------------------------------------------------------------
// Absent cells
// ---------------------------------------------------------------------------

/// Absent cells are quiet NaNs; a NaN never stands for a computed value.
inline constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();
inline bool is_absent(double v) { return std::isnan(v); }
inline bool is_present(double v) { return !std::isnan(v); }

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class TargetKind { Loss, Regret, ZScore };
enum class Structure { Global, PerInferer };
enum class LogBase { E, Ten };

std::string_view to_string(TargetKind k);
std::string_view to_string(Structure s);
TargetKind parse_target_kind(std::string_view s);
Structure parse_structure(std::string_view s);

double log_in_base(double x, LogBase base);

struct TopicConfig {
  double p = 3.0;
  double c = 0.75;
  double alpha = 0.1;
  double epsilon = 1e-8;
  double delta_z = -1.0;
  int n_train = 1000;
  int n_test = 100;
  std::vector<int> span_set{3, 14};
  /// [gradient_span, rolling_span, ema_span]; overrides span_set for transforms.
  std::optional<std::array<int, 3>> adaptive_spans;
  TargetKind target_kind = TargetKind::ZScore;
  Structure structure = Structure::PerInferer;
  LogBase log_base = LogBase::Ten;
  std::uint64_t seed = 0;
  bool normalize_ema_regrets = true;

  double loss_floor = 1e-12;
  bool use_lags = true;
  int max_lag = 60;
  double lag_confidence = 0.99;

  bool operator==(const TopicConfig&) const = default;
};

/// Returns `cfg` unchanged or throws a Validation error naming the first
/// violated invariant.
const TopicConfig& validate_config(const TopicConfig& cfg);

// ---------------------------------------------------------------------------
// Workers and panels
// ---------------------------------------------------------------------------

enum class WorkerKind { Inferer, Forecaster };

struct WorkerId {
  std::string id;
  WorkerKind kind = WorkerKind::Inferer;

  bool operator==(const WorkerId&) const = default;
};

/// Throws Validation when two workers share an id.
void check_unique(const std::vector<WorkerId>& workers);

/// Dense row-major table of doubles; absent cells are NaN.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = kAbsent)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::vector<double> row(std::size_t r) const {
    return {data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_)};
  }
  std::vector<double> column(std::size_t c) const;
  void append_row(const std::vector<double>& values);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Raw submissions for a topic: one inference per worker per epoch plus the
/// ground truth revealed after the epoch closes.
struct InferenceTable {
  std::vector<WorkerId> workers;
  std::vector<int> epochs;
  std::vector<double> truth;
  Matrix inference;  // epochs x workers

  std::size_t n_epochs() const { return epochs.size(); }
};

/// Regret-only benchmark data (no truth or loss layer).
struct RegretTable {
  std::vector<WorkerId> workers;
  std::vector<int> epochs;
  Matrix regret;

  std::size_t n_epochs() const { return epochs.size(); }
};

/// One closed epoch of the ledger.
struct EpochRecord {
  int epoch = 0;
  double truth = kAbsent;
  std::vector<double> inference;
  std::vector<double> loss;
  std::vector<double> log_loss;
  std::vector<double> regret;
  double network_inference = kAbsent;
  double network_loss = kAbsent;
  double network_log_loss = kAbsent;
  /// EMA regret per worker after this epoch's update.
  std::vector<double> ema_regret;
};

enum class PanelField { Inference, Loss, LogLoss, Regret, EmaRegret };

/// Append-only per-epoch ledger of inferences, losses and regrets.
class EpochPanel {
 public:
  EpochPanel() = default;
  explicit EpochPanel(std::vector<WorkerId> workers);

  const std::vector<WorkerId>& workers() const { return workers_; }
  std::size_t n_workers() const { return workers_.size(); }
  std::size_t n_epochs() const { return records_.size(); }
  const EpochRecord& at(std::size_t i) const { return records_.at(i); }
  const std::vector<EpochRecord>& records() const { return records_; }

  /// Appends the next epoch. Vectors must be sized to the worker count and
  /// epochs must be strictly increasing.
  void append(EpochRecord rec);

  std::vector<double> worker_series(PanelField field, std::size_t worker) const;
  std::vector<double> truth_series() const;
  std::vector<double> network_log_loss_series() const;
  std::vector<int> epoch_ids() const;

  bool is_present(std::size_t i, std::size_t j) const;
  bool has_truth() const;
  std::optional<std::size_t> worker_index(std::string_view id) const;

 private:
  std::vector<WorkerId> workers_;
  std::vector<EpochRecord> records_;
};

/// Forecaster k's view of one epoch.
struct ForecastRecord {
  int epoch = 0;
  std::vector<double> predicted_target;
  std::vector<double> weights;
  double implied = kAbsent;
};

struct ForecastPanel {
  std::vector<ForecastRecord> records;
};

/// Per-epoch market bars; only `close` is mandatory.
struct MarketSeries {
  std::vector<int> epochs;
  std::vector<double> open;
  std::vector<double> high;
  std::vector<double> low;
  std::vector<double> close;
  std::vector<double> volume;

  std::size_t size() const { return close.size(); }
  /// Throws Validation if a bar violates high/low/volume bounds.
  void validate() const;
};

}  // namespace fcomb
