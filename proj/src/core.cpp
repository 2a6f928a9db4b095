#include "fcomb/core.hpp"

#include <algorithm>
#include <set>

namespace fcomb {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return "VALIDATION";
    case ErrorCode::Combine: return "COMBINE";
    case ErrorCode::Feature: return "FEATURE";
    case ErrorCode::Learn: return "LEARN";
    case ErrorCode::Eval: return "EVAL";
    case ErrorCode::Io: return "IO";
    case ErrorCode::Parse: return "PARSE";
  }
  return "UNKNOWN";
}

std::string_view to_string(TargetKind k) {
  switch (k) {
    case TargetKind::Loss: return "LOSS";
    case TargetKind::Regret: return "REGRET";
    case TargetKind::ZScore: return "ZSCORE";
  }
  throw validation_error("unknown target kind");
}

std::string_view to_string(Structure s) {
  switch (s) {
    case Structure::Global: return "GLOBAL";
    case Structure::PerInferer: return "PER_INFERER";
  }
  throw validation_error("unknown structure");
}

TargetKind parse_target_kind(std::string_view s) {
  if (s == "LOSS" || s == "loss") return TargetKind::Loss;
  if (s == "REGRET" || s == "regret") return TargetKind::Regret;
  if (s == "ZSCORE" || s == "zscore") return TargetKind::ZScore;
  throw validation_error("unknown target kind '" + std::string(s) + "'");
}

Structure parse_structure(std::string_view s) {
  if (s == "GLOBAL" || s == "global") return Structure::Global;
  if (s == "PER_INFERER" || s == "per_inferer" || s == "per-inferer") return Structure::PerInferer;
  throw validation_error("unknown structure '" + std::string(s) + "'");
}

double log_in_base(double x, LogBase base) {
  return base == LogBase::Ten ? std::log10(x) : std::log(x);
}

const TopicConfig& validate_config(const TopicConfig& cfg) {
  if (!(cfg.p > 0.0) || !std::isfinite(cfg.p)) throw validation_error("p must be positive");
  if (!std::isfinite(cfg.c)) throw validation_error("c must be finite");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw validation_error("alpha out of range");
  if (!(cfg.epsilon > 0.0)) throw validation_error("epsilon must be positive");
  if (!std::isfinite(cfg.delta_z)) throw validation_error("delta_z must be finite");
  // An adaptive triple replaces the uniform set, which may then be empty.
  if (cfg.span_set.empty() && !cfg.adaptive_spans) throw validation_error("span set empty");
  for (std::size_t i = 0; i < cfg.span_set.size(); ++i) {
    if (cfg.span_set[i] < 2) throw validation_error("span below 2");
    if (i > 0 && cfg.span_set[i] <= cfg.span_set[i - 1])
      throw validation_error("spans not increasing");
  }
  int max_span = cfg.span_set.empty() ? 0 : cfg.span_set.back();
  if (cfg.adaptive_spans) {
    for (int s : *cfg.adaptive_spans) {
      if (s < 2) throw validation_error("span below 2");
      max_span = std::max(max_span, s);
    }
  }
  if (cfg.n_test < 1) throw validation_error("n_test must be positive");
  if (cfg.max_lag < 0) throw validation_error("max_lag must be non-negative");
  const int lag_need = cfg.use_lags ? cfg.max_lag : 0;
  if (cfg.n_train < max_span + lag_need)
    throw validation_error("n_train shorter than max span plus max lag");
  if (!(cfg.loss_floor > 0.0)) throw validation_error("loss floor must be positive");
  if (!(cfg.lag_confidence > 0.0 && cfg.lag_confidence < 1.0))
    throw validation_error("lag confidence out of range");
  return cfg;
}

void check_unique(const std::vector<WorkerId>& workers) {
  std::set<std::string> seen;
  for (const auto& w : workers)
    if (!seen.insert(w.id).second) throw validation_error("duplicate worker id '" + w.id + "'");
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::append_row(const std::vector<double>& values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw validation_error("matrix row width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

EpochPanel::EpochPanel(std::vector<WorkerId> workers) : workers_(std::move(workers)) {
  check_unique(workers_);
}

void EpochPanel::append(EpochRecord rec) {
  const std::size_t n = workers_.size();
  auto fit = [n](std::vector<double>& v) {
    if (v.empty()) v.assign(n, kAbsent);
    if (v.size() != n) throw validation_error("epoch record width mismatch");
  };
  fit(rec.inference);
  fit(rec.loss);
  fit(rec.log_loss);
  fit(rec.regret);
  fit(rec.ema_regret);
  if (!records_.empty() && rec.epoch <= records_.back().epoch)
    throw validation_error("epochs must be strictly increasing");
  for (double l : rec.loss)
    if (fcomb::is_present(l) && l < 0.0) throw validation_error("negative loss");
  records_.push_back(std::move(rec));
}

std::vector<double> EpochPanel::worker_series(PanelField field, std::size_t worker) const {
  std::vector<double> out(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    switch (field) {
      case PanelField::Inference: out[i] = r.inference[worker]; break;
      case PanelField::Loss: out[i] = r.loss[worker]; break;
      case PanelField::LogLoss: out[i] = r.log_loss[worker]; break;
      case PanelField::Regret: out[i] = r.regret[worker]; break;
      case PanelField::EmaRegret: out[i] = r.ema_regret[worker]; break;
    }
  }
  return out;
}

std::vector<double> EpochPanel::truth_series() const {
  std::vector<double> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.truth);
  return out;
}

std::vector<double> EpochPanel::network_log_loss_series() const {
  std::vector<double> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.network_log_loss);
  return out;
}

std::vector<int> EpochPanel::epoch_ids() const {
  std::vector<int> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.epoch);
  return out;
}

bool EpochPanel::is_present(std::size_t i, std::size_t j) const {
  const auto& r = records_[i];
  return fcomb::is_present(r.inference[j]) || fcomb::is_present(r.regret[j]);
}

bool EpochPanel::has_truth() const {
  return std::any_of(records_.begin(), records_.end(),
                     [](const EpochRecord& r) { return fcomb::is_present(r.truth); });
}

std::optional<std::size_t> EpochPanel::worker_index(std::string_view id) const {
  for (std::size_t j = 0; j < workers_.size(); ++j)
    if (workers_[j].id == id) return j;
  return std::nullopt;
}

void MarketSeries::validate() const {
  const std::size_t n = close.size();
  auto sized = [n](const std::vector<double>& v) { return v.empty() || v.size() == n; };
  if (!sized(open) || !sized(high) || !sized(low) || !sized(volume) || epochs.size() != n)
    throw validation_error("market columns misaligned");
  for (std::size_t i = 0; i < n; ++i) {
    const double o = open.empty() ? kAbsent : open[i];
    const double c = close[i];
    if (!high.empty() && is_present(high[i])) {
      if ((is_present(o) && high[i] < o) || high[i] < c)
        throw validation_error("market high below open/close at epoch " + std::to_string(epochs[i]));
    }
    if (!low.empty() && is_present(low[i])) {
      if ((is_present(o) && low[i] > o) || low[i] > c)
        throw validation_error("market low above open/close at epoch " + std::to_string(epochs[i]));
    }
    if (!volume.empty() && is_present(volume[i]) && volume[i] < 0.0)
      throw validation_error("negative volume at epoch " + std::to_string(epochs[i]));
  }
}

}  // namespace fcomb
