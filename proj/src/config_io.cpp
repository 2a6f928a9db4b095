#include "fcomb/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>

#include "fcomb/rng.hpp"

namespace fcomb::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& section) {
  if (!j.is_object()) throw validation_error("config section '" + section + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw validation_error("unknown config key '" + section + "." + k + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string log_base_name(LogBase b) { return b == LogBase::Ten ? "10" : "e"; }

LogBase parse_log_base(const std::string& s) {
  if (s == "10") return LogBase::Ten;
  if (s == "e") return LogBase::E;
  throw validation_error("log_base must be \"10\" or \"e\"");
}

synth::Archetype parse_archetype(const std::string& s) {
  using synth::Archetype;
  for (Archetype a : {Archetype::SpecialistDown, Archetype::SpecialistUp, Archetype::SpecialistNone,
                      Archetype::Random, Archetype::EmaFollower})
    if (s == synth::to_string(a)) return a;
  throw validation_error("unknown archetype '" + s + "'");
}

json topic_json(const TopicConfig& t) {
  json j{{"p", t.p},
         {"c", t.c},
         {"alpha", t.alpha},
         {"epsilon", t.epsilon},
         {"delta_z", t.delta_z},
         {"n_train", t.n_train},
         {"n_test", t.n_test},
         {"span_set", t.span_set},
         {"adaptive_spans", nullptr},
         {"target", std::string(to_string(t.target_kind))},
         {"structure", std::string(to_string(t.structure))},
         {"log_base", log_base_name(t.log_base)},
         {"seed", t.seed},
         {"normalize_ema_regrets", t.normalize_ema_regrets},
         {"loss_floor", t.loss_floor},
         {"use_lags", t.use_lags},
         {"max_lag", t.max_lag},
         {"lag_confidence", t.lag_confidence}};
  if (t.adaptive_spans) j["adaptive_spans"] = *t.adaptive_spans;
  return j;
}

void topic_from(const json& j, TopicConfig& t) {
  check_keys(j, {"p", "c", "alpha", "epsilon", "delta_z", "n_train", "n_test", "span_set", "adaptive_spans",
                 "target", "structure", "log_base", "seed", "normalize_ema_regrets", "loss_floor", "use_lags",
                 "max_lag", "lag_confidence"},
             "topic");
  read(j, "p", t.p);
  read(j, "c", t.c);
  read(j, "alpha", t.alpha);
  read(j, "epsilon", t.epsilon);
  read(j, "delta_z", t.delta_z);
  read(j, "n_train", t.n_train);
  read(j, "n_test", t.n_test);
  read(j, "span_set", t.span_set);
  if (j.contains("adaptive_spans")) {
    if (j["adaptive_spans"].is_null()) t.adaptive_spans.reset();
    else t.adaptive_spans = j["adaptive_spans"].get<std::array<int, 3>>();
  }
  if (j.contains("target")) t.target_kind = parse_target_kind(j["target"].get<std::string>());
  if (j.contains("structure")) t.structure = parse_structure(j["structure"].get<std::string>());
  if (j.contains("log_base")) t.log_base = parse_log_base(j["log_base"].get<std::string>());
  read(j, "seed", t.seed);
  read(j, "normalize_ema_regrets", t.normalize_ema_regrets);
  read(j, "loss_floor", t.loss_floor);
  read(j, "use_lags", t.use_lags);
  read(j, "max_lag", t.max_lag);
  read(j, "lag_confidence", t.lag_confidence);
}

json learner_json(const learn::LearnerConfig& l) {
  return {{"hyperparams", l.hp},
          {"tune_trials", l.tune_trials},
          {"min_train_rows", l.min_train_rows},
          {"corr_cap", l.corr_cap}};
}

void learner_from(const json& j, learn::LearnerConfig& l) {
  check_keys(j, {"hyperparams", "tune_trials", "min_train_rows", "corr_cap"}, "learner");
  if (j.contains("hyperparams")) {
    check_keys(j["hyperparams"],
               {"n_trees", "max_depth", "learning_rate", "min_samples_leaf", "row_subsample", "feature_subsample"},
               "learner.hyperparams");
    learn::from_json(j["hyperparams"], l.hp);
  }
  read(j, "tune_trials", l.tune_trials);
  read(j, "min_train_rows", l.min_train_rows);
  read(j, "corr_cap", l.corr_cap);
}

json scenario_json(const synth::ScenarioConfig& s) {
  json sines = json::array(), spikes = json::array(), inferers = json::array();
  for (const auto& x : s.sines)
    sines.push_back({{"amplitude", x.amplitude}, {"period", x.period}, {"noise_half_width", x.noise_half_width}});
  for (const auto& x : s.spikes)
    spikes.push_back({{"height", x.height}, {"period", x.period}, {"base_half_width", x.base_half_width}});
  for (const auto& x : s.inferers)
    inferers.push_back({{"id", x.id},
                        {"archetype", std::string(synth::to_string(x.archetype))},
                        {"skilled_factor", x.skilled_factor},
                        {"factor", x.factor},
                        {"ema_span", x.ema_span}});
  return {{"kind", std::string(synth::to_string(s.kind))},
          {"sines", std::move(sines)},
          {"spikes", std::move(spikes)},
          {"n_random", s.n_random},
          {"random_half_width", s.random_half_width},
          {"gbm",
           {{"init", s.gbm.init},
            {"sigma", s.gbm.sigma},
            {"drift_values", s.gbm.drift_values},
            {"mean_len", s.gbm.mean_len},
            {"none_weight", s.gbm.none_weight},
            {"allow_self_transitions", s.gbm.allow_self_transitions}}},
          {"inferers", std::move(inferers)},
          {"contextual",
           {{"redraw_factors_per_epoch", s.contextual.redraw_factors_per_epoch},
            {"noise_scale", s.contextual.noise_scale}}}};
}

void scenario_from(const json& j, synth::ScenarioConfig& s) {
  check_keys(j, {"kind", "sines", "spikes", "n_random", "random_half_width", "gbm", "inferers", "contextual"},
             "scenario");
  if (j.contains("kind")) s.kind = synth::parse_scenario_kind(j["kind"].get<std::string>());
  if (j.contains("sines")) {
    s.sines.clear();
    for (const auto& x : j["sines"]) {
      check_keys(x, {"amplitude", "period", "noise_half_width"}, "scenario.sines[]");
      synth::SineSpec v;
      read(x, "amplitude", v.amplitude);
      read(x, "period", v.period);
      read(x, "noise_half_width", v.noise_half_width);
      s.sines.push_back(v);
    }
  }
  if (j.contains("spikes")) {
    s.spikes.clear();
    for (const auto& x : j["spikes"]) {
      check_keys(x, {"height", "period", "base_half_width"}, "scenario.spikes[]");
      synth::SpikeSpec v;
      read(x, "height", v.height);
      read(x, "period", v.period);
      read(x, "base_half_width", v.base_half_width);
      s.spikes.push_back(v);
    }
  }
  read(j, "n_random", s.n_random);
  read(j, "random_half_width", s.random_half_width);
  if (j.contains("gbm")) {
    const json& g = j["gbm"];
    check_keys(g, {"init", "sigma", "drift_values", "mean_len", "none_weight", "allow_self_transitions"},
               "scenario.gbm");
    read(g, "init", s.gbm.init);
    read(g, "sigma", s.gbm.sigma);
    read(g, "drift_values", s.gbm.drift_values);
    read(g, "mean_len", s.gbm.mean_len);
    read(g, "none_weight", s.gbm.none_weight);
    read(g, "allow_self_transitions", s.gbm.allow_self_transitions);
  }
  if (j.contains("inferers")) {
    s.inferers.clear();
    for (const auto& x : j["inferers"]) {
      check_keys(x, {"id", "archetype", "skilled_factor", "factor", "ema_span"}, "scenario.inferers[]");
      synth::InfererSpec v;
      v.id = x.at("id").get<std::string>();
      if (x.contains("archetype")) v.archetype = parse_archetype(x["archetype"].get<std::string>());
      read(x, "skilled_factor", v.skilled_factor);
      read(x, "factor", v.factor);
      read(x, "ema_span", v.ema_span);
      s.inferers.push_back(v);
    }
  }
  if (j.contains("contextual")) {
    const json& c = j["contextual"];
    check_keys(c, {"redraw_factors_per_epoch", "noise_scale"}, "scenario.contextual");
    read(c, "redraw_factors_per_epoch", s.contextual.redraw_factors_per_epoch);
    read(c, "noise_scale", s.contextual.noise_scale);
  }
}

json sweep_json(const SweepSection& s) {
  json targets = json::array(), structures = json::array(), spans = json::array();
  for (auto t : s.grid.targets) targets.push_back(std::string(to_string(t)));
  for (auto t : s.grid.structures) structures.push_back(std::string(to_string(t)));
  for (const auto& p : s.grid.span_sets) spans.push_back(eval::span_csv_label(p));
  return {{"targets", std::move(targets)},
          {"structures", std::move(structures)},
          {"span_sets", std::move(spans)},
          {"n_trains", s.grid.n_trains},
          {"repeats", s.repeats},
          {"n_test", s.n_test}};
}

void sweep_from(const json& j, SweepSection& s) {
  check_keys(j, {"targets", "structures", "span_sets", "n_trains", "repeats", "n_test"}, "sweep");
  if (j.contains("targets")) {
    s.grid.targets.clear();
    for (const auto& x : j["targets"]) s.grid.targets.push_back(parse_target_kind(x.get<std::string>()));
  }
  if (j.contains("structures")) {
    s.grid.structures.clear();
    for (const auto& x : j["structures"]) s.grid.structures.push_back(parse_structure(x.get<std::string>()));
  }
  if (j.contains("span_sets")) {
    s.grid.span_sets.clear();
    for (const auto& x : j["span_sets"]) s.grid.span_sets.push_back(eval::parse_span_csv_label(x.get<std::string>()));
  }
  read(j, "n_trains", s.grid.n_trains);
  read(j, "repeats", s.repeats);
  read(j, "n_test", s.n_test);
}

}  // namespace

RunConfig default_run_config(synth::ScenarioKind kind) {
  RunConfig c;
  c.scenario.kind = kind;
  if (kind == synth::ScenarioKind::Sine || kind == synth::ScenarioKind::Periodic)
    c.topic.target_kind = TargetKind::Regret;
  return c;
}

json to_json(const RunConfig& cfg) {
  return {{"topic", topic_json(cfg.topic)},
          {"learner", learner_json(cfg.learner)},
          {"scenario", scenario_json(cfg.scenario)},
          {"sweep", sweep_json(cfg.sweep)},
          {"diagnostics", {{"enabled", cfg.diagnostics}, {"bootstrap_n", cfg.bootstrap_n}}}};
}

RunConfig run_config_from_json(const json& j, const RunConfig& base) {
  RunConfig cfg = base;
  try {
    check_keys(j, {"topic", "learner", "scenario", "sweep", "diagnostics"}, "root");
    if (j.contains("topic")) topic_from(j["topic"], cfg.topic);
    if (j.contains("learner")) learner_from(j["learner"], cfg.learner);
    if (j.contains("scenario")) scenario_from(j["scenario"], cfg.scenario);
    if (j.contains("sweep")) sweep_from(j["sweep"], cfg.sweep);
    if (j.contains("diagnostics")) {
      check_keys(j["diagnostics"], {"enabled", "bootstrap_n"}, "diagnostics");
      read(j["diagnostics"], "enabled", cfg.diagnostics);
      read(j["diagnostics"], "bootstrap_n", cfg.bootstrap_n);
    }
  } catch (const json::exception& e) {
    throw validation_error(std::string("config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, "config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j, base);
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << to_json(cfg).dump(2) << '\n';
}

std::string config_hash(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(cfg).dump())));
  return buf;
}

void validate(const RunConfig& cfg) {
  validate_config(cfg.topic);
  cfg.learner.hp.validate();
  if (cfg.learner.tune_trials < 0) throw validation_error("tune_trials must be non-negative");
  if (!(cfg.learner.corr_cap > 0 && cfg.learner.corr_cap <= 1)) throw validation_error("corr_cap out of range");
  for (const auto& s : cfg.scenario.sines) s.validate();
  for (const auto& s : cfg.scenario.spikes) s.validate();
  cfg.scenario.gbm.validate();
  if (cfg.scenario.n_random < 0) throw validation_error("n_random must be non-negative");
  cfg.sweep.grid.validate();
  if (cfg.sweep.repeats < 1) throw validation_error("sweep repeats must be positive");
  if (cfg.sweep.n_test < 1) throw validation_error("sweep n_test must be positive");
  if (cfg.bootstrap_n < 0) throw validation_error("bootstrap_n must be non-negative");
}

}  // namespace fcomb::cli
