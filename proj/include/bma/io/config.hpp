#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bma/distributions.hpp"
#include "bma/errors.hpp"
#include "bma/forecasting.hpp"
#include "bma/models/parameters.hpp"
#include "bma/smc2.hpp"

namespace bma::io {

using nlohmann::json;

/// Master seed used when neither the configuration nor the command line sets one.
inline constexpr std::uint64_t kDefaultSeed = 12345;

/// Environment variable that overrides the configured worker count.
inline constexpr const char* kThreadsEnv = "BMA_THREADS";

struct ModelConfig {
  std::string name;  // label used in output columns
  std::string kind;  // dthp | seir | seirs
  PriorMap priors;   // parameters and initial-state quantities
};

struct EngineConfig {
  Smc2Settings smc2;
  std::uint64_t seed = kDefaultSeed;
  int threads = 0;  // 0: runtime default
};

struct DataConfig {
  std::optional<std::string> path;
  std::optional<std::string> scenario;
  std::int64_t population = 50000;
  std::size_t horizon = 100;                // scenario length
  std::optional<std::size_t> fit_steps;     // fit on the first steps only
  std::string unit = "day";
};

struct ForecastConfig {
  std::size_t horizon = 0;
  ThetaMode theta = ThetaMode::kEnsemble;
};

struct OutputConfig {
  std::string directory = "run";
  std::size_t samples = 64;  // predictive quantiles per time written to samples.csv
};

struct RunConfig {
  std::vector<ModelConfig> models;
  EngineConfig engine;
  DataConfig data;
  ForecastConfig forecast;
  OutputConfig output;
  json source;  // the document as read, echoed into run.json

  void validate() const;
};

namespace detail {

inline double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": '" + key + "' has the wrong type");
  }
}

}  // namespace detail

/// Reads one prior: a bare number is a fixed value, otherwise an object with
/// a "kind" of normal, trunc_normal, uniform, uniform_discrete or fixed.
inline PriorSpec parse_prior(const json& j, const std::string& where) {
  using detail::number;
  if (j.is_number()) return PriorSpec::fixed(j.get<double>());
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw ConfigError(where + ": prior must be a number or an object with a \"kind\"");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "normal") return PriorSpec::normal(number(j, "mean", where), number(j, "sd", where));
  if (kind == "trunc_normal")
    return PriorSpec::trunc_normal(number(j, "lo", where), number(j, "hi", where), number(j, "mean", where),
                                   number(j, "sd", where));
  if (kind == "uniform") return PriorSpec::uniform(number(j, "lo", where), number(j, "hi", where));
  if (kind == "uniform_discrete") {
    if (j.contains("values")) {
      if (!j.at("values").is_array()) throw ConfigError(where + ": 'values' must be an array");
      std::vector<double> values;
      for (const auto& v : j.at("values")) {
        if (!v.is_number()) throw ConfigError(where + ": 'values' must hold numbers");
        values.push_back(v.get<double>());
      }
      return PriorSpec::uniform_discrete(std::move(values));
    }
    return PriorSpec::uniform_integers(static_cast<std::int64_t>(number(j, "lo", where)),
                                       static_cast<std::int64_t>(number(j, "hi", where)));
  }
  if (kind == "fixed") return PriorSpec::fixed(number(j, "value", where));
  throw ConfigError(where + ": unknown prior kind '" + kind + "'");
}

inline json prior_to_json(const PriorSpec& p) {
  return std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, NormalPrior>) return {{"kind", "normal"}, {"mean", k.mean}, {"sd", k.sd}};
        if constexpr (std::is_same_v<K, TruncNormalPrior>)
          return {{"kind", "trunc_normal"}, {"lo", k.lo}, {"hi", k.hi}, {"mean", k.mean}, {"sd", k.sd}};
        if constexpr (std::is_same_v<K, UniformPrior>) return {{"kind", "uniform"}, {"lo", k.lo}, {"hi", k.hi}};
        if constexpr (std::is_same_v<K, UniformDiscretePrior>) return {{"kind", "uniform_discrete"}, {"values", k.values}};
        if constexpr (std::is_same_v<K, FixedPrior>) return {{"kind", "fixed"}, {"value", k.value}};
      },
      p.kind());
}

inline RunConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  RunConfig cfg;
  cfg.source = doc;

  if (!doc.contains("models") || !doc.at("models").is_array() || doc.at("models").empty())
    throw ConfigError("configuration needs a non-empty 'models' array");
  for (std::size_t k = 0; k < doc.at("models").size(); ++k) {
    const auto& m = doc.at("models")[k];
    const std::string where = "models[" + std::to_string(k) + "]";
    ModelConfig mc;
    mc.kind = detail::get_or<std::string>(m, "model", "", where);
    if (mc.kind != "dthp" && mc.kind != "seir" && mc.kind != "seirs")
      throw ConfigError(where + ": 'model' must be dthp, seir or seirs");
    mc.name = detail::get_or<std::string>(m, "name", mc.kind, where);
    if (m.contains("priors")) {
      if (!m.at("priors").is_object()) throw ConfigError(where + ": 'priors' must be an object");
      for (const auto& [key, value] : m.at("priors").items())
        mc.priors.insert_or_assign(key, parse_prior(value, where + ".priors." + key));
    }
    if (m.contains("fixed")) {
      if (!m.at("fixed").is_object()) throw ConfigError(where + ": 'fixed' must be an object");
      for (const auto& [key, value] : m.at("fixed").items()) {
        if (!value.is_number()) throw ConfigError(where + ".fixed." + key + ": must be a number");
        if (mc.priors.contains(key))
          throw ConfigError(where + ": '" + key + "' has both a prior and a fixed value");
        mc.priors.insert_or_assign(key, PriorSpec::fixed(value.get<double>()));
      }
    }
    cfg.models.push_back(std::move(mc));
  }

  const json engine = doc.value("engine", json::object());
  auto& s = cfg.engine.smc2;
  s.n_theta = detail::get_or<std::size_t>(engine, "n_theta", s.n_theta, "engine");
  s.n_x = detail::get_or<std::size_t>(engine, "n_x", s.n_x, "engine");
  s.pmmh_moves = detail::get_or<std::size_t>(engine, "pmmh_moves", s.pmmh_moves, "engine");
  s.ess_threshold = detail::get_or<double>(engine, "ess_threshold", s.ess_threshold, "engine");
  s.window = detail::get_or<std::size_t>(engine, "window", s.window, "engine");
  s.proposal_scale = detail::get_or<double>(engine, "proposal_scale", s.proposal_scale, "engine");
  cfg.engine.seed = detail::get_or<std::uint64_t>(engine, "seed", cfg.engine.seed, "engine");
  cfg.engine.threads = detail::get_or<int>(engine, "threads", 0, "engine");

  const json data = doc.value("data", json::object());
  if (data.contains("path")) cfg.data.path = detail::get_or<std::string>(data, "path", "", "data");
  if (data.contains("scenario")) cfg.data.scenario = detail::get_or<std::string>(data, "scenario", "", "data");
  cfg.data.population = detail::get_or<std::int64_t>(data, "population", cfg.data.population, "data");
  cfg.data.horizon = detail::get_or<std::size_t>(data, "horizon", cfg.data.horizon, "data");
  if (data.contains("fit_steps")) cfg.data.fit_steps = detail::get_or<std::size_t>(data, "fit_steps", 0, "data");
  cfg.data.unit = detail::get_or<std::string>(data, "unit", cfg.data.unit, "data");

  const json forecast = doc.value("forecast", json::object());
  cfg.forecast.horizon = detail::get_or<std::size_t>(forecast, "horizon", 0, "forecast");
  cfg.forecast.theta = parse_theta_mode(detail::get_or<std::string>(forecast, "theta", "ensemble", "forecast"));

  const json output = doc.value("output", json::object());
  cfg.output.directory = detail::get_or<std::string>(output, "directory", cfg.output.directory, "output");
  cfg.output.samples = detail::get_or<std::size_t>(output, "samples", cfg.output.samples, "output");

  cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(doc);
}

inline void RunConfig::validate() const {
  if (models.empty()) throw ConfigError("at least one model is required");
  for (const auto& m : models)
    if (m.name.empty() || m.name == "ma" || m.name.find_first_of(", \t\n\"") != std::string::npos)
      throw ConfigError("model name '" + m.name + "' is reserved or contains a separator");
  for (std::size_t a = 0; a < models.size(); ++a)
    for (std::size_t b = a + 1; b < models.size(); ++b)
      if (models[a].name == models[b].name) throw ConfigError("duplicate model name '" + models[a].name + "'");
  engine.smc2.validate();
  if (engine.threads < 0) throw ConfigError("engine.threads must be non-negative");
  if (data.population <= 0) throw ConfigError("data.population must be positive");
  if (data.fit_steps && *data.fit_steps == 0) throw ConfigError("data.fit_steps must be positive");
  if (output.samples == 0) throw ConfigError("output.samples must be positive");
}

/// Worker count: command line, then BMA_THREADS, then the configuration.
inline int resolve_threads(std::optional<int> flag, int configured) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kThreadsEnv); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 0) throw ConfigError(std::string(kThreadsEnv) + " must be a non-negative integer");
    return static_cast<int>(v);
  }
  return configured;
}

}  // namespace bma::io
