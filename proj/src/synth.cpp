#include "fcomb/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fcomb/rng.hpp"

namespace fcomb::synth {

namespace {

std::string worker_name(std::size_t j) { return "allo" + std::to_string(j); }

std::mt19937_64 worker_stream(std::uint64_t seed, std::string_view id) {
  return std::mt19937_64(derive_seed(seed, "worker:" + std::string(id)));
}

RegretTable empty_regret_table(std::size_t n_epochs, std::size_t n_workers) {
  RegretTable t;
  for (std::size_t j = 0; j < n_workers; ++j) t.workers.push_back({worker_name(j), WorkerKind::Inferer});
  t.epochs.resize(n_epochs);
  for (std::size_t i = 0; i < n_epochs; ++i) t.epochs[i] = static_cast<int>(i);
  t.regret = Matrix(n_epochs, n_workers);
  return t;
}

void fill_uniform(RegretTable& t, std::size_t j, double half_width, std::uint64_t seed) {
  auto rng = worker_stream(seed, t.workers[j].id);
  std::uniform_real_distribution<double> u(-half_width, half_width);
  for (std::size_t i = 0; i < t.n_epochs(); ++i) t.regret(i, j) = half_width > 0 ? u(rng) : 0.0;
}

}  // namespace

void SineSpec::validate() const {
  if (period < 2) throw validation_error("sine period below 2");
  if (!(amplitude > 0)) throw validation_error("sine amplitude must be positive");
  if (noise_half_width < 0) throw validation_error("negative noise half-width");
}

void SpikeSpec::validate() const {
  if (period < 2) throw validation_error("spike period below 2");
  if (base_half_width < 0) throw validation_error("negative base half-width");
}

RegretTable gen_sinusoidal(std::size_t n_epochs, const std::vector<SineSpec>& specs, int n_random,
                           std::uint64_t seed, double random_half_width) {
  if (n_epochs < 1) throw validation_error("n_epochs must be at least 1");
  if (n_random < 0) throw validation_error("negative random worker count");
  for (const auto& s : specs) s.validate();
  RegretTable t = empty_regret_table(n_epochs, specs.size() + static_cast<std::size_t>(n_random));
  for (std::size_t j = 0; j < specs.size(); ++j) {
    const SineSpec& s = specs[j];
    auto rng = worker_stream(seed, t.workers[j].id);
    std::uniform_real_distribution<double> u(-s.noise_half_width, s.noise_half_width);
    for (std::size_t i = 0; i < n_epochs; ++i) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(i) / s.period;
      t.regret(i, j) = s.amplitude * std::sin(phase) + (s.noise_half_width > 0 ? u(rng) : 0.0);
    }
  }
  for (std::size_t j = specs.size(); j < t.workers.size(); ++j) fill_uniform(t, j, random_half_width, seed);
  return t;
}

std::vector<double> fixed_interval_series(std::size_t n_epochs, const SpikeSpec& spike,
                                          std::uint64_t seed) {
  spike.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-spike.base_half_width, spike.base_half_width);
  std::vector<double> out(n_epochs);
  for (std::size_t i = 0; i < n_epochs; ++i) {
    // Draw every epoch so spike placement does not shift the noise stream.
    const double noise = spike.base_half_width > 0 ? u(rng) : 0.0;
    out[i] = i % static_cast<std::size_t>(spike.period) == 0 ? spike.height : noise;
  }
  return out;
}

RegretTable gen_fixed_interval(std::size_t n_epochs, const std::vector<SpikeSpec>& spikes,
                               int n_random, std::uint64_t seed, double random_half_width) {
  if (n_epochs < 1) throw validation_error("n_epochs must be at least 1");
  if (n_random < 0) throw validation_error("negative random worker count");
  RegretTable t = empty_regret_table(n_epochs, spikes.size() + static_cast<std::size_t>(n_random));
  for (std::size_t j = 0; j < spikes.size(); ++j) {
    const auto s = fixed_interval_series(n_epochs, spikes[j], derive_seed(seed, "worker:" + t.workers[j].id));
    for (std::size_t i = 0; i < n_epochs; ++i) t.regret(i, j) = s[i];
  }
  for (std::size_t j = spikes.size(); j < t.workers.size(); ++j) fill_uniform(t, j, random_half_width, seed);
  return t;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Down: return "DOWN";
    case Regime::None: return "NONE";
    case Regime::Up: return "UP";
  }
  return "?";
}

void GbmSpec::validate() const {
  if (!(init > 0)) throw validation_error("initial price must be positive");
  if (sigma < 0) throw validation_error("negative volatility");
  if (!(mean_len > 0)) throw validation_error("mean segment length must be positive");
  if (!(none_weight > 0)) throw validation_error("none_weight must be positive");
}

SegmentSampler::SegmentSampler(const GbmSpec& spec, std::uint64_t seed) : spec_(spec), rng_(seed) {
  spec_.validate();
}

RegimeSegment SegmentSampler::next() {
  static constexpr std::array<Regime, 3> kLabels{Regime::Down, Regime::None, Regime::Up};
  std::array<double, 3> w{1.0, spec_.none_weight, 1.0};
  if (!spec_.allow_self_transitions && last_) w[static_cast<std::size_t>(*last_)] = 0.0;
  std::discrete_distribution<int> pick(w.begin(), w.end());
  std::poisson_distribution<int> len(spec_.mean_len);
  RegimeSegment seg;
  seg.label = kLabels[static_cast<std::size_t>(pick(rng_))];
  seg.length = static_cast<std::size_t>(std::max(1, len(rng_)));
  last_ = seg.label;
  return seg;
}

std::vector<RegimeSegment> sample_regime_segments(std::size_t n_segments, const GbmSpec& spec,
                                                  std::uint64_t seed) {
  SegmentSampler s(spec, seed);
  std::vector<RegimeSegment> out;
  out.reserve(n_segments);
  for (std::size_t k = 0; k < n_segments; ++k) out.push_back(s.next());
  return out;
}

GbmPath gen_gbm_truth(std::size_t n_epochs, const GbmSpec& spec, std::uint64_t seed) {
  if (n_epochs < 1) throw validation_error("n_epochs must be at least 1");
  SegmentSampler segments(spec, derive_seed(seed, "regime"));
  std::mt19937_64 rng(derive_seed(seed, "returns"));
  std::normal_distribution<double> z(0.0, 1.0);

  GbmPath p;
  p.price.resize(n_epochs);
  p.log_return.assign(n_epochs, kAbsent);
  p.regime.drift.resize(n_epochs);
  p.regime.label.resize(n_epochs);
  RegimeSegment seg = segments.next();
  std::size_t left = seg.length;
  for (std::size_t t = 0; t < n_epochs; ++t) {
    if (left == 0) {
      seg = segments.next();
      left = seg.length;
    }
    --left;
    p.regime.label[t] = seg.label;
    p.regime.drift[t] = spec.drift_values[static_cast<std::size_t>(seg.label)];
    if (t == 0) {
      p.price[0] = spec.init;
      continue;
    }
    const double r = p.regime.drift[t] + spec.sigma * z(rng);
    p.log_return[t] = r;
    p.price[t] = p.price[t - 1] * std::exp(r);
  }
  return p;
}

std::string_view to_string(Archetype a) {
  switch (a) {
    case Archetype::SpecialistDown: return "SPECIALIST_DOWN";
    case Archetype::SpecialistUp: return "SPECIALIST_UP";
    case Archetype::SpecialistNone: return "SPECIALIST_NONE";
    case Archetype::Random: return "RANDOM";
    case Archetype::EmaFollower: return "EMA_FOLLOWER";
  }
  return "?";
}

std::vector<InfererSpec> default_contextual_inferers() {
  std::vector<InfererSpec> v;
  const Archetype specialists[] = {Archetype::SpecialistDown, Archetype::SpecialistUp,
                                   Archetype::SpecialistNone};
  for (Archetype a : specialists) v.push_back({worker_name(v.size()), a, {0.1, 0.3}, {0.5, 1.0}, 0});
  for (int span : {5, 7, 9}) v.push_back({worker_name(v.size()), Archetype::EmaFollower, {0.1, 0.3}, {0.5, 1.0}, span});
  for (int k = 0; k < 4; ++k) v.push_back({worker_name(v.size()), Archetype::Random, {0.1, 0.3}, {0.2, 1.2}, 0});
  return v;
}

namespace {

std::optional<Regime> skilled_regime(Archetype a) {
  switch (a) {
    case Archetype::SpecialistDown: return Regime::Down;
    case Archetype::SpecialistUp: return Regime::Up;
    case Archetype::SpecialistNone: return Regime::None;
    default: return std::nullopt;
  }
}

}  // namespace

ContextualInferences gen_contextual_inferers(const GbmPath& path, const std::vector<InfererSpec>& inferers,
                                             double sigma, std::uint64_t seed,
                                             const ContextualOptions& opts) {
  const std::size_t m = path.price.size();
  if (m < 2) throw validation_error("price path needs at least two points");
  if (path.regime.size() != m || path.log_return.size() != m)
    throw validation_error("price path and regime are misaligned");
  if (inferers.empty()) throw validation_error("no inferers configured");
  if (opts.noise_scale < 0) throw validation_error("negative noise scale");

  const std::size_t n = m - 1;
  const std::size_t W = inferers.size();
  ContextualInferences out;
  out.table.epochs.resize(n);
  out.table.truth.resize(n);
  out.regime.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.table.epochs[i] = static_cast<int>(i + 1);
    out.table.truth[i] = path.price[i + 1];
    out.regime[i] = path.regime.label[i + 1];
  }
  for (const auto& s : inferers) out.table.workers.push_back({s.id, WorkerKind::Inferer});
  check_unique(out.table.workers);
  out.table.inference = Matrix(n, W);
  out.log_return = Matrix(n, W);

  for (std::size_t j = 0; j < W; ++j) {
    const InfererSpec& s = inferers[j];
    if (s.archetype == Archetype::EmaFollower && s.ema_span < 1)
      throw validation_error("EMA follower " + s.id + " needs a positive span");
    auto rng = worker_stream(seed, s.id);
    std::uniform_real_distribution<double> skilled_u(s.skilled_factor[0], s.skilled_factor[1]);
    std::uniform_real_distribution<double> plain_u(s.factor[0], s.factor[1]);
    std::normal_distribution<double> z(0.0, 1.0);
    double f_skilled = skilled_u(rng);
    double f_plain = plain_u(rng);
    const auto match = skilled_regime(s.archetype);
    const double a = s.ema_span > 0 ? 2.0 / (s.ema_span + 1.0) : 0.0;
    double ema = path.price[0];

    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = i + 1;
      if (opts.redraw_factors_per_epoch) {
        f_skilled = skilled_u(rng);
        f_plain = plain_u(rng);
      }
      const double prev = path.price[t - 1];
      const bool skilled = match && path.regime.label[t] == *match;
      const double sd = (skilled ? f_skilled : f_plain) * sigma * opts.noise_scale;
      const double noise = sd * z(rng);
      double r = noise;
      if (skilled) r = path.log_return[t] + noise;
      else if (s.archetype == Archetype::EmaFollower) r = std::log(ema / prev) + noise;
      out.log_return(i, j) = r;
      out.table.inference(i, j) = prev * std::exp(r);
      if (s.archetype == Archetype::EmaFollower) ema = a * path.price[t] + (1.0 - a) * ema;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Sine: return "sine";
    case ScenarioKind::Periodic: return "periodic";
    case ScenarioKind::Contextual: return "contextual";
    case ScenarioKind::Replay: return "replay";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(std::string_view s) {
  if (s == "sine") return ScenarioKind::Sine;
  if (s == "periodic") return ScenarioKind::Periodic;
  if (s == "contextual") return ScenarioKind::Contextual;
  if (s == "replay") return ScenarioKind::Replay;
  throw validation_error("unknown scenario kind '" + std::string(s) + "'");
}

std::size_t ScenarioData::n_epochs() const {
  return std::visit([](const auto& t) { return t.n_epochs(); }, table);
}

const std::vector<WorkerId>& ScenarioData::workers() const {
  return std::visit([](const auto& t) -> const std::vector<WorkerId>& { return t.workers; }, table);
}

const std::vector<int>& ScenarioData::epochs() const {
  return std::visit([](const auto& t) -> const std::vector<int>& { return t.epochs; }, table);
}

ScenarioData generate_scenario(const ScenarioConfig& cfg, std::size_t n_epochs, std::uint64_t seed) {
  ScenarioData d;
  switch (cfg.kind) {
    case ScenarioKind::Sine:
      d.table = gen_sinusoidal(n_epochs, cfg.sines, cfg.n_random, seed, cfg.random_half_width);
      break;
    case ScenarioKind::Periodic: {
      const double hw = cfg.spikes.empty() ? cfg.random_half_width : cfg.spikes.front().base_half_width;
      d.table = gen_fixed_interval(n_epochs, cfg.spikes, cfg.n_random, seed, hw);
      break;
    }
    case ScenarioKind::Contextual: {
      // One extra leading price so every kept epoch has a previous truth.
      const GbmPath path = gen_gbm_truth(n_epochs + 1, cfg.gbm, derive_seed(seed, "truth"));
      ContextualInferences ci =
          gen_contextual_inferers(path, cfg.inferers, cfg.gbm.sigma, derive_seed(seed, "inferers"), cfg.contextual);
      d.table = std::move(ci.table);
      d.regime = std::move(ci.regime);
      break;
    }
    case ScenarioKind::Replay:
      throw validation_error("replay scenarios are loaded from files, not generated");
  }
  return d;
}

}  // namespace fcomb::synth
