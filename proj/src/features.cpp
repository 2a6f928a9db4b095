#include "fcomb/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "fcomb/combiner.hpp"

namespace fcomb::features {

// ---------------------------------------------------------------------------
// SpanPlan
// ---------------------------------------------------------------------------

SpanPlan SpanPlan::from_config(const TopicConfig& cfg) {
  SpanPlan plan;
  plan.uniform = cfg.span_set;
  plan.adaptive = cfg.adaptive_spans;
  return plan;
}

SpanPlan SpanPlan::adaptive_plan(int gradient_span, int rolling_span, int ema_span) {
  SpanPlan plan;
  plan.uniform.clear();
  plan.adaptive = std::array<int, 3>{gradient_span, rolling_span, ema_span};
  return plan;
}

std::vector<int> SpanPlan::gradient_spans() const {
  return adaptive ? std::vector<int>{(*adaptive)[0]} : uniform;
}
std::vector<int> SpanPlan::rolling_spans() const {
  return adaptive ? std::vector<int>{(*adaptive)[1]} : uniform;
}
std::vector<int> SpanPlan::ema_spans() const {
  return adaptive ? std::vector<int>{(*adaptive)[2]} : uniform;
}

int SpanPlan::max_span() const {
  int m = 0;
  for (const auto& v : {gradient_spans(), rolling_spans(), ema_spans()})
    for (int s : v) m = std::max(m, s);
  return m;
}

void SpanPlan::validate() const {
  if (adaptive) {
    for (int s : *adaptive)
      if (s < 2) throw validation_error("span below 2");
    return;
  }
  if (uniform.empty()) throw validation_error("span set empty");
  for (std::size_t i = 0; i < uniform.size(); ++i) {
    if (uniform[i] < 2) throw validation_error("span below 2");
    if (i > 0 && uniform[i] <= uniform[i - 1]) throw validation_error("spans not increasing");
  }
}

std::string SpanPlan::label() const {
  std::ostringstream os;
  auto list = [&os](const auto& v) {
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ']';
  };
  if (adaptive) {
    os << "adaptive";
    list(*adaptive);
  } else {
    list(uniform);
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Series transforms
// ---------------------------------------------------------------------------

namespace {

std::vector<double> difference(std::span<const double> x, std::size_t lag) {
  std::vector<double> out(x.size(), kAbsent);
  for (std::size_t t = lag; t < x.size(); ++t)
    if (is_present(x[t]) && is_present(x[t - lag])) out[t] = x[t] - x[t - lag];
  return out;
}

struct Rolling {
  std::vector<double> mean;
  std::vector<double> stddev;
};

Rolling rolling(std::span<const double> x, int span) {
  const auto s = static_cast<std::size_t>(span);
  Rolling r{std::vector<double>(x.size(), kAbsent), std::vector<double>(x.size(), kAbsent)};
  for (std::size_t t = s - 1; t < x.size(); ++t) {
    double sum = 0.0;
    bool ok = true;
    for (std::size_t k = t + 1 - s; k <= t; ++k) {
      if (is_absent(x[k])) {
        ok = false;
        break;
      }
      sum += x[k];
    }
    if (!ok) continue;
    const double m = sum / static_cast<double>(s);
    double ss = 0.0;
    for (std::size_t k = t + 1 - s; k <= t; ++k) ss += (x[k] - m) * (x[k] - m);
    r.mean[t] = m;
    r.stddev[t] = std::sqrt(ss / static_cast<double>(s));
  }
  return r;
}

Rolling ewm(std::span<const double> x, int span) {
  const double a = 2.0 / (static_cast<double>(span) + 1.0);
  Rolling r{std::vector<double>(x.size(), kAbsent), std::vector<double>(x.size(), kAbsent)};
  double m = 0.0;
  double v = 0.0;
  int seen = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (is_absent(x[t])) continue;
    if (seen == 0) {
      m = x[t];
      v = 0.0;
    } else {
      const double d = x[t] - m;
      const double inc = a * d;
      m += inc;
      v = (1.0 - a) * (v + d * inc);
    }
    ++seen;
    if (seen >= span) {
      r.mean[t] = m;
      r.stddev[t] = std::sqrt(std::max(v, 0.0));
    }
  }
  return r;
}

}  // namespace

std::vector<NamedSeries> transform_series(std::span<const double> x, const SpanPlan& plan) {
  plan.validate();
  if (x.size() < static_cast<std::size_t>(plan.max_span()) + 2)
    throw feature_error("series too short for span plan " + plan.label());

  std::vector<NamedSeries> out;
  std::vector<double> grad = difference(x, 1);
  out.push_back({"accel", difference(grad, 1)});
  out.insert(out.begin(), {"grad", std::move(grad)});
  for (int s : plan.gradient_spans())
    out.push_back({"mom" + std::to_string(s), difference(x, static_cast<std::size_t>(s))});
  for (int s : plan.ema_spans()) {
    Rolling e = ewm(x, s);
    out.push_back({"ewm_mean" + std::to_string(s), std::move(e.mean)});
    out.push_back({"ewm_std" + std::to_string(s), std::move(e.stddev)});
  }
  for (int s : plan.rolling_spans()) {
    Rolling r = rolling(x, s);
    std::vector<double> diff(x.size(), kAbsent);
    for (std::size_t t = 0; t < x.size(); ++t)
      if (is_present(r.mean[t]) && is_present(x[t])) diff[t] = x[t] - r.mean[t];
    out.push_back({"roll_mean" + std::to_string(s), std::move(r.mean)});
    out.push_back({"roll_std" + std::to_string(s), std::move(r.stddev)});
    out.push_back({"diff_ma" + std::to_string(s), std::move(diff)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Autocorrelation
// ---------------------------------------------------------------------------

std::vector<double> acf(std::span<const double> x, int max_lag, bool* degenerate) {
  if (max_lag < 0) throw feature_error("negative max lag");
  std::size_t n = 0;
  double sum = 0.0;
  for (double v : x)
    if (is_present(v)) {
      sum += v;
      ++n;
    }
  if (n <= static_cast<std::size_t>(max_lag) + 1)
    throw feature_error("series too short for max lag " + std::to_string(max_lag));
  const double mean = sum / static_cast<double>(n);
  double denom = 0.0;
  for (double v : x)
    if (is_present(v)) denom += (v - mean) * (v - mean);

  std::vector<double> r(static_cast<std::size_t>(max_lag) + 1, 0.0);
  r[0] = 1.0;
  if (degenerate) *degenerate = false;
  if (!(denom > 0.0)) {
    if (degenerate) *degenerate = true;
    return r;
  }
  for (int k = 1; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t t = 0; t + static_cast<std::size_t>(k) < x.size(); ++t) {
      const double a = x[t];
      const double b = x[t + static_cast<std::size_t>(k)];
      if (is_present(a) && is_present(b)) num += (a - mean) * (b - mean);
    }
    r[static_cast<std::size_t>(k)] = num / denom;
  }
  return r;
}

std::vector<double> pacf(std::span<const double> x, int max_lag, bool* degenerate) {
  const std::vector<double> r = acf(x, max_lag, degenerate);
  const auto m = static_cast<std::size_t>(max_lag);
  std::vector<double> out(m + 1, 0.0);
  out[0] = 1.0;
  if (m == 0 || (degenerate && *degenerate)) return out;

  // Durbin-Levinson: phi holds the AR(k-1) coefficients phi_{k-1,1..k-1}.
  std::vector<double> phi(m + 1, 0.0);
  std::vector<double> next(m + 1, 0.0);
  phi[1] = r[1];
  out[1] = r[1];
  for (std::size_t k = 2; k <= m; ++k) {
    double num = r[k];
    double den = 1.0;
    for (std::size_t j = 1; j < k; ++j) {
      num -= phi[j] * r[k - j];
      den -= phi[j] * r[j];
    }
    const double phi_kk = std::abs(den) > 1e-300 ? num / den : 0.0;
    for (std::size_t j = 1; j < k; ++j) next[j] = phi[j] - phi_kk * phi[k - j];
    next[k] = phi_kk;
    std::copy(next.begin() + 1, next.begin() + static_cast<std::ptrdiff_t>(k) + 1, phi.begin() + 1);
    out[k] = phi_kk;
  }
  return out;
}

double significance_band(std::size_t n, double confidence) {
  const boost::math::normal_distribution<double> standard;
  const double z = boost::math::quantile(standard, 0.5 * (1.0 + confidence));
  return z / std::sqrt(static_cast<double>(n));
}

LagSet select_lags(std::span<const double> x, int max_lag, double confidence) {
  LagSet set;
  set.confidence = confidence;
  if (max_lag < 2) return set;
  const std::vector<double> r = acf(x, max_lag);
  const std::vector<double> pr = pacf(x, max_lag);
  const auto n = static_cast<std::size_t>(
      std::count_if(x.begin(), x.end(), [](double v) { return is_present(v); }));
  const double band = significance_band(n, confidence);
  for (int k = 2; k <= max_lag; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    if (std::abs(r[ku]) > band && std::abs(pr[ku]) > band) set.lags.push_back(k);
  }
  return set;
}

CrossSection cross_sectional_stats(std::span<const double> values, double epsilon) {
  const combine::Moments m = combine::population_moments(values);
  return {m.mean, m.stddev, combine::zscores(values, epsilon)};
}

// ---------------------------------------------------------------------------
// FeatureMatrix
// ---------------------------------------------------------------------------

FeatureMatrix::FeatureMatrix(std::vector<RowKey> keys, std::vector<int> epoch_ids,
                             std::vector<std::string> worker_ids)
    : keys_(std::move(keys)), epoch_ids_(std::move(epoch_ids)), worker_ids_(std::move(worker_ids)) {
  epoch_begin_.assign(epoch_ids_.size() + 1, keys_.size());
  for (std::size_t r = keys_.size(); r-- > 0;) {
    if (r > 0 && keys_[r].epoch_index < keys_[r - 1].epoch_index)
      throw feature_error("feature rows must be epoch-ordered");
    epoch_begin_[keys_[r].epoch_index] = r;
  }
  for (std::size_t e = epoch_ids_.size(); e-- > 0;)
    epoch_begin_[e] = std::min(epoch_begin_[e], epoch_begin_[e + 1]);
}

std::optional<std::size_t> FeatureMatrix::column_index(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const FeatureColumn& FeatureMatrix::column(std::string_view name) const {
  auto idx = column_index(name);
  if (!idx) throw feature_error("no feature column '" + std::string(name) + "'");
  return columns_[*idx];
}

std::vector<std::string> FeatureMatrix::column_names() const {
  std::vector<std::string> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.name);
  return out;
}

void FeatureMatrix::add_column(FeatureColumn col) {
  if (col.values.size() != keys_.size())
    throw feature_error("column '" + col.name + "' has wrong row count");
  if (index_.count(col.name)) throw feature_error("duplicate feature column '" + col.name + "'");
  index_.emplace(col.name, columns_.size());
  columns_.push_back(std::move(col));
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::string>& names) const {
  std::set<std::string, std::less<>> wanted(names.begin(), names.end());
  FeatureMatrix out(keys_, epoch_ids_, worker_ids_);
  for (const auto& c : columns_)
    if (wanted.count(c.name)) out.add_column(c);
  if (out.n_cols() != wanted.size()) throw feature_error("selection names unknown columns");
  return out;
}

std::vector<std::size_t> FeatureMatrix::rows_at_epoch(std::size_t epoch_index) const {
  return rows_in_epochs(epoch_index, epoch_index + 1);
}

std::vector<std::size_t> FeatureMatrix::rows_in_epochs(std::size_t begin, std::size_t end) const {
  end = std::min(end, epoch_ids_.size());
  if (begin >= end) return {};
  std::vector<std::size_t> out(epoch_begin_[end] - epoch_begin_[begin]);
  std::iota(out.begin(), out.end(), epoch_begin_[begin]);
  return out;
}

void FeatureMatrix::check_availability() const {
  for (const auto& c : columns_)
    if (c.source_shift < c.offset)
      throw feature_error("column '" + c.name + "' reads epoch data newer than its availability");
}

void FeatureMatrix::write_csv(std::ostream& out) const {
  out << "epoch,worker_id";
  for (const auto& c : columns_) out << ',' << c.name << '@' << c.offset;
  out << '\n';
  char buf[64];
  for (std::size_t r = 0; r < keys_.size(); ++r) {
    out << epoch_ids_[keys_[r].epoch_index] << ',' << worker_ids_[keys_[r].worker];
    for (const auto& c : columns_) {
      out << ',';
      if (is_present(c.values[r])) {
        std::snprintf(buf, sizeof buf, "%.17g", c.values[r]);
        out << buf;
      }
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

namespace {

bool any_present(const std::vector<std::vector<double>>& per_worker) {
  for (const auto& s : per_worker)
    for (double v : s)
      if (is_present(v)) return true;
  return false;
}

class BaselineBuilder {
 public:
  BaselineBuilder(FeatureMatrix& X, const SpanPlan& plan) : X_(X), plan_(plan) {}

  /// Raw series plus transforms, read `shift` epochs back.
  void add_family(const std::string& name, const std::vector<std::vector<double>>& series,
                  int shift, int offset) {
    if (!any_present(series)) return;
    add_shifted(name, series, shift, offset);
    std::vector<std::vector<NamedSeries>> per_worker;
    per_worker.reserve(series.size());
    for (const auto& s : series) per_worker.push_back(transform_series(s, plan_));
    for (std::size_t k = 0; k < per_worker.front().size(); ++k) {
      std::vector<std::vector<double>> col(series.size());
      for (std::size_t j = 0; j < series.size(); ++j) col[j] = std::move(per_worker[j][k].values);
      add_shifted(name + "_" + per_worker.front()[k].name, col, shift, offset);
    }
  }

  void add_shifted(const std::string& name, const std::vector<std::vector<double>>& series,
                   int shift, int offset) {
    FeatureColumn col{name, offset, shift, std::vector<double>(X_.n_rows(), kAbsent)};
    const auto s = static_cast<std::size_t>(shift);
    for (std::size_t r = 0; r < X_.n_rows(); ++r) {
      const RowKey& k = X_.keys()[r];
      if (k.epoch_index >= s) col.values[r] = series[k.worker][k.epoch_index - s];
    }
    X_.add_column(std::move(col));
  }

 private:
  FeatureMatrix& X_;
  const SpanPlan& plan_;
};

}  // namespace

BaselineResult build_baseline_features(const EpochPanel& panel, const SpanPlan& plan,
                                       const LagPolicy& lags, double epsilon,
                                       const WorkerSideColumns* side) {
  plan.validate();
  const std::size_t T = panel.n_epochs();
  const std::size_t W = panel.n_workers();
  if (T < static_cast<std::size_t>(plan.max_span()) + 2)
    throw feature_error("panel shorter than feature warm-up");

  std::vector<RowKey> keys;
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t j = 0; j < W; ++j)
      if (panel.is_present(i, j)) keys.push_back({i, j});
  std::vector<std::string> ids;
  for (const auto& w : panel.workers()) ids.push_back(w.id);

  BaselineResult result{FeatureMatrix(std::move(keys), panel.epoch_ids(), ids), {}};
  FeatureMatrix& X = result.matrix;
  BaselineBuilder b(X, plan);

  auto per_worker = [&](PanelField f) {
    std::vector<std::vector<double>> out(W);
    for (std::size_t j = 0; j < W; ++j) out[j] = panel.worker_series(f, j);
    return out;
  };
  const auto inference = per_worker(PanelField::Inference);
  const auto log_loss = per_worker(PanelField::LogLoss);
  const auto regret = per_worker(PanelField::Regret);

  {
    FeatureColumn id{std::string(kInfererIdColumn), 0, 0, {}};
    id.values.reserve(X.n_rows());
    for (const auto& k : X.keys()) id.values.push_back(static_cast<double>(k.worker));
    X.add_column(std::move(id));
  }

  b.add_family("inference", inference, 0, 0);
  if (panel.has_truth()) {
    // Log ratio of the current inference to the last revealed truth.
    const std::vector<double> truth = panel.truth_series();
    std::vector<std::vector<double>> ret(W, std::vector<double>(T, kAbsent));
    for (std::size_t j = 0; j < W; ++j)
      for (std::size_t t = 1; t < T; ++t)
        if (is_present(inference[j][t]) && is_present(truth[t - 1]) && inference[j][t] > 0.0 &&
            truth[t - 1] > 0.0)
          ret[j][t] = std::log(inference[j][t] / truth[t - 1]);
    b.add_family("inference_ret", ret, 0, 0);
  }
  b.add_family("log_loss", log_loss, 1, 1);
  b.add_family("regret", regret, 1, 1);
  {
    const std::vector<double> net = panel.network_log_loss_series();
    b.add_family("network_log_loss", std::vector<std::vector<double>>(W, net), 1, 1);
  }

  // Cross-sectional statistics of the previous epoch.
  auto add_cross_section = [&](const std::string& name, const std::vector<std::vector<double>>& s) {
    if (!any_present(s)) return;
    std::vector<std::vector<double>> mean(W, std::vector<double>(T, kAbsent));
    auto stdv = mean;
    auto z = mean;
    std::vector<double> slice(W);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j = 0; j < W; ++j) slice[j] = s[j][t];
      if (std::none_of(slice.begin(), slice.end(), [](double v) { return is_present(v); }))
        continue;
      const CrossSection cs = cross_sectional_stats(slice, epsilon);
      for (std::size_t j = 0; j < W; ++j) {
        mean[j][t] = cs.mean;
        stdv[j][t] = cs.stddev;
        z[j][t] = cs.z[j];
      }
    }
    b.add_shifted(name + "_cs_mean", mean, 1, 1);
    b.add_shifted(name + "_cs_std", stdv, 1, 1);
    b.add_shifted(name + "_cs_z", z, 1, 1);
  };
  add_cross_section("log_loss", log_loss);
  add_cross_section("regret", regret);

  // Autocorrelation lags of the performance series.
  const std::vector<std::pair<std::string, const std::vector<std::vector<double>>*>> lag_families{
      {"log_loss", &log_loss}, {"regret", &regret}};
  for (const auto& [family, series] : lag_families) {
    if (lags.mode == LagMode::None || !any_present(*series)) continue;
    std::set<int> chosen;
    if (lags.mode == LagMode::Fixed) {
      auto it = lags.fixed.find(family);
      if (it != lags.fixed.end()) chosen.insert(it->second.begin(), it->second.end());
    } else {
      const std::size_t end = std::min(lags.fit_end, T);
      for (std::size_t j = 0; j < W; ++j) {
        std::span<const double> window((*series)[j].data(), end);
        const auto n = std::count_if(window.begin(), window.end(),
                                     [](double v) { return is_present(v); });
        if (n <= static_cast<std::ptrdiff_t>(lags.max_lag) + 1) continue;
        bool degenerate = false;
        acf(window, 1, &degenerate);
        if (degenerate) continue;
        for (int k : select_lags(window, lags.max_lag, lags.confidence).lags) chosen.insert(k);
      }
    }
    std::vector<int> used;
    for (int k : chosen) {
      if (k < 2) throw feature_error("lag features start at 2");
      b.add_shifted(family + "_lag" + std::to_string(k), *series, k, 1);
      used.push_back(k);
    }
    result.lags[family] = used;
  }

  if (side) {
    for (const auto& [name, m] : side->columns) {
      if (m.rows() != T || m.cols() != W) throw feature_error("side column '" + name + "' misaligned");
      std::vector<std::vector<double>> s(W);
      for (std::size_t j = 0; j < W; ++j) s[j] = m.column(j);
      b.add_shifted(name, s, 1, 1);
    }
  }

  X.check_availability();
  return result;
}

std::vector<FeatureColumn> build_market_features(const MarketSeries& mkt, const SpanPlan& plan) {
  plan.validate();
  const std::vector<double>& c = mkt.close;
  const std::size_t T = c.size();
  if (T < static_cast<std::size_t>(plan.max_span()) + 2)
    throw feature_error("market series shorter than feature warm-up");

  std::vector<NamedSeries> raw;
  raw.push_back({"close", c});
  for (auto& s : transform_series(c, plan)) raw.push_back({"close_" + s.name, std::move(s.values)});

  std::vector<double> pct(T, kAbsent);
  std::vector<double> logret(T, kAbsent);
  for (std::size_t t = 1; t < T; ++t) {
    if (is_absent(c[t]) || is_absent(c[t - 1]) || c[t - 1] == 0.0) continue;
    pct[t] = c[t] / c[t - 1] - 1.0;
    if (c[t] > 0.0 && c[t - 1] > 0.0) logret[t] = std::log(c[t] / c[t - 1]);
  }
  raw.push_back({"close_pct", pct});
  for (int s : plan.rolling_spans()) {
    const std::string sfx = std::to_string(s);
    Rolling vol = rolling(logret, s);
    Rolling ma = rolling(c, s);
    std::vector<double> band(T, kAbsent);
    std::vector<double> ratio(T, kAbsent);
    for (std::size_t t = 0; t < T; ++t) {
      if (is_absent(ma.mean[t])) continue;
      band[t] = ma.stddev[t] > 0.0 ? (c[t] - ma.mean[t]) / (2.0 * ma.stddev[t]) : 0.0;
      if (ma.mean[t] != 0.0) ratio[t] = c[t] / ma.mean[t];
    }
    raw.push_back({"volatility" + sfx, std::move(vol.stddev)});
    raw.push_back({"bollinger" + sfx, std::move(band)});
    raw.push_back({"close_ratio" + sfx, std::move(ratio)});
  }
  if (!mkt.volume.empty()) raw.push_back({"volume", mkt.volume});
  if (!mkt.high.empty() && !mkt.low.empty()) {
    std::vector<double> range(T, kAbsent);
    for (std::size_t t = 0; t < T; ++t)
      if (is_present(mkt.high[t]) && is_present(mkt.low[t]) && c[t] != 0.0)
        range[t] = (mkt.high[t] - mkt.low[t]) / c[t];
    raw.push_back({"hl_range", std::move(range)});
  }

  std::vector<FeatureColumn> out;
  out.reserve(raw.size());
  for (auto& s : raw) {
    FeatureColumn col{"mkt_" + s.name, 1, 1, std::vector<double>(T, kAbsent)};
    for (std::size_t t = 1; t < T; ++t) col.values[t] = s.values[t - 1];
    out.push_back(std::move(col));
  }
  return out;
}

void attach_epoch_columns(FeatureMatrix& X, const std::vector<FeatureColumn>& cols) {
  for (const auto& c : cols) {
    if (c.values.size() != X.epoch_ids().size())
      throw feature_error("epoch column '" + c.name + "' misaligned with feature epochs");
    FeatureColumn row_col{c.name, c.offset, c.source_shift, std::vector<double>(X.n_rows())};
    for (std::size_t r = 0; r < X.n_rows(); ++r) row_col.values[r] = c.values[X.keys()[r].epoch_index];
    X.add_column(std::move(row_col));
  }
  X.check_availability();
}

MarketSeries align_market(const MarketSeries& mkt, const std::vector<int>& epochs) {
  std::map<int, std::size_t> at;
  for (std::size_t i = 0; i < mkt.epochs.size(); ++i) at[mkt.epochs[i]] = i;
  MarketSeries out;
  out.epochs = epochs;
  auto pick = [&](const std::vector<double>& src) {
    if (src.empty()) return std::vector<double>{};
    std::vector<double> v(epochs.size(), kAbsent);
    for (std::size_t t = 0; t < epochs.size(); ++t) {
      auto it = at.find(epochs[t]);
      if (it != at.end()) v[t] = src[it->second];
    }
    return v;
  };
  out.open = pick(mkt.open);
  out.high = pick(mkt.high);
  out.low = pick(mkt.low);
  out.close = pick(mkt.close);
  out.volume = pick(mkt.volume);
  return out;
}

// ---------------------------------------------------------------------------
// Pruning
// ---------------------------------------------------------------------------

namespace {

double pairwise_corr(const std::vector<double>& a, std::span<const double> b) {
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    const double x = a[r];
    const double y = b[r];
    if (is_absent(x) || is_absent(y)) continue;
    sa += x;
    sb += y;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
    ++n;
  }
  if (n < 2) return 0.0;
  const double dn = static_cast<double>(n);
  const double cov = sab - sa * sb / dn;
  const double va = saa - sa * sa / dn;
  const double vb = sbb - sb * sb / dn;
  if (!(va > 0.0) || !(vb > 0.0)) return 0.0;
  return cov / std::sqrt(va * vb);
}

}  // namespace

std::vector<std::string> prune_columns(const FeatureMatrix& X, std::span<const std::size_t> rows,
                                       std::span<const double> y, double var_floor, double corr_cap,
                                       const std::set<std::string>& keep) {
  if (rows.size() != y.size()) throw feature_error("pruning rows and target misaligned");

  struct Candidate {
    std::size_t index;
    std::vector<double> values;
    double target_corr;
  };
  std::vector<Candidate> cands;
  std::set<std::size_t> kept_always;
  for (std::size_t ci = 0; ci < X.n_cols(); ++ci) {
    const FeatureColumn& col = X.columns()[ci];
    if (keep.count(col.name)) {
      kept_always.insert(ci);
      continue;
    }
    std::vector<double> v(rows.size());
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      v[r] = col.values[rows[r]];
      if (is_absent(v[r])) continue;
      lo = std::min(lo, v[r]);
      hi = std::max(hi, v[r]);
      sum += v[r];
      ++n;
    }
    if (n < 2 || !(hi > lo)) continue;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double x : v)
      if (is_present(x)) ss += (x - mean) * (x - mean);
    if (ss / static_cast<double>(n) <= var_floor) continue;
    const double tc = std::abs(pairwise_corr(v, y));
    cands.push_back({ci, std::move(v), tc});
  }

  std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
    return X.columns()[a.index].name < X.columns()[b.index].name;
  });
  std::vector<bool> dropped(cands.size(), false);
  for (std::size_t a = 0; a < cands.size(); ++a) {
    if (dropped[a]) continue;
    for (std::size_t b = a + 1; b < cands.size(); ++b) {
      if (dropped[b]) continue;
      if (std::abs(pairwise_corr(cands[a].values, cands[b].values)) <= corr_cap) continue;
      // Keep the member closer to the target; ties keep the earlier name.
      if (cands[b].target_corr > cands[a].target_corr) {
        dropped[a] = true;
        break;
      }
      dropped[b] = true;
    }
  }

  std::set<std::size_t> survivors = kept_always;
  for (std::size_t a = 0; a < cands.size(); ++a)
    if (!dropped[a]) survivors.insert(cands[a].index);
  std::vector<std::string> out;
  for (std::size_t ci : survivors) out.push_back(X.columns()[ci].name);
  return out;
}

FeatureMatrix prune_features(const FeatureMatrix& X, std::span<const std::size_t> rows,
                             std::span<const double> y, double var_floor, double corr_cap,
                             const std::set<std::string>& keep) {
  return X.select_columns(prune_columns(X, rows, y, var_floor, corr_cap, keep));
}

}  // namespace fcomb::features
