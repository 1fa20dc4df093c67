#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bma/averaging.hpp"
#include "bma/ensemble.hpp"
#include "bma/errors.hpp"
#include "bma/forecasting.hpp"
#include "bma/io/config.hpp"
#include "bma/io/csv.hpp"
#include "bma/models/dthp.hpp"
#include "bma/models/parameters.hpp"
#include "bma/models/scenario.hpp"
#include "bma/models/seir.hpp"
#include "bma/parallel.hpp"
#include "bma/rng.hpp"
#include "bma/smc2.hpp"

namespace bma {

/// Observations to fit, plus the simulated truth when they come from a scenario.
struct Dataset {
  io::ObservationSeries series;
  std::optional<ScenarioData> truth;
  std::size_t fit_steps = 0;
  std::string source;
};

inline io::ObservationSeries scenario_series(const ScenarioData& data) {
  io::ObservationSeries s;
  for (std::size_t t = 0; t < data.observations.size(); ++t) {
    s.dates.push_back(std::to_string(t + 1));
    s.counts.emplace_back(data.observations[t]);
  }
  return s;
}

/// Scenario data for a master seed; `simulate` and `fit --scenario` agree.
inline ScenarioData simulate_for_seed(const ScenarioSpec& spec, std::uint64_t seed) {
  return simulate_scenario(spec, RngStream(seed));
}

inline Dataset load_dataset(const io::RunConfig& cfg, std::uint64_t seed) {
  Dataset d;
  if (cfg.data.path && cfg.data.scenario) throw ConfigError("data: give either 'path' or 'scenario', not both");
  if (cfg.data.path) {
    d.series = io::ingest_csv(*cfg.data.path);
    d.source = *cfg.data.path;
  } else if (cfg.data.scenario) {
    const auto spec = ScenarioSpec::standard(parse_scenario(*cfg.data.scenario), cfg.data.population, cfg.data.horizon);
    d.truth = simulate_for_seed(spec, seed);
    d.series = scenario_series(*d.truth);
    d.source = "scenario " + std::string(scenario_name(spec.id));
  } else {
    throw ConfigError("data: no 'path' or 'scenario' given");
  }
  d.fit_steps = cfg.data.fit_steps.value_or(d.series.size());
  if (d.fit_steps > d.series.size())
    throw ConfigError("data.fit_steps (" + std::to_string(d.fit_steps) + ") exceeds the series length (" +
                      std::to_string(d.series.size()) + ")");
  return d;
}

namespace detail {

template <class Model>
std::unique_ptr<ModelFilter> make_filter_for(const io::ModelConfig& mc, double population,
                                             const Smc2Settings& settings, const RngStream& rng) {
  PriorMap params;
  PriorMap initial;
  for (const auto& [key, spec] : mc.priors) {
    const bool is_param = std::find(Model::kParameterNames.begin(), Model::kParameterNames.end(), key) !=
                          Model::kParameterNames.end();
    const bool is_init = std::find(Model::kInitialStateNames.begin(), Model::kInitialStateNames.end(), key) !=
                         Model::kInitialStateNames.end();
    if (!is_param && !is_init)
      throw ConfigError("model '" + mc.name + "': unknown parameter '" + key + "'");
    (is_param ? params : initial).insert_or_assign(key, spec);
  }
  ParameterLayout layout(Model::kParameterNames, params, mc.name);
  if constexpr (std::is_same_v<Model, DthpModel>) {
    Model model(population, initial);
    return std::make_unique<Smc2Filter<Model>>(std::move(model), std::move(layout), settings, rng);
  } else {
    Model model(static_cast<std::int64_t>(population), initial);
    return std::make_unique<Smc2Filter<Model>>(std::move(model), std::move(layout), settings, rng);
  }
}

}  // namespace detail

inline std::unique_ptr<ModelFilter> make_filter(const io::ModelConfig& mc, double population,
                                                const Smc2Settings& settings, const RngStream& rng) {
  if (mc.kind == "dthp") return detail::make_filter_for<DthpModel>(mc, population, settings, rng);
  if (mc.kind == "seir") return detail::make_filter_for<SeirModel>(mc, population, settings, rng);
  if (mc.kind == "seirs") return detail::make_filter_for<SeirsModel>(mc, population, settings, rng);
  throw ConfigError("unknown model '" + mc.kind + "'");
}

/// Model k draws from RngStream(seed).path(kModel, k).
inline ModelEnsemble build_ensemble(const io::RunConfig& cfg, std::uint64_t seed) {
  ModelEnsemble ens;
  const RngStream root(seed);
  for (std::size_t k = 0; k < cfg.models.size(); ++k)
    ens.add(cfg.models[k].name, make_filter(cfg.models[k], static_cast<double>(cfg.data.population),
                                            cfg.engine.smc2, root.path(Purpose::kModel, k)));
  return ens;
}

/// One row of estimates.csv.
struct EstimateRow {
  std::size_t time = 0;
  std::string date;
  std::string phase;  // fit | forecast
  Observation y;
  std::vector<PosteriorSummary> model_incidence;
  std::vector<PosteriorSummary> model_rt;
  PosteriorSummary ma_incidence;
  PosteriorSummary ma_rt;
  std::vector<double> pis;
  std::vector<double> ess;  // empty in forecast rows
};

struct ParameterRow {
  std::size_t time = 0;
  std::string model;
  std::string parameter;
  PosteriorSummary summary;
};

struct DiagnosticRow {
  std::size_t time = 0;
  std::string model;
  StepDiagnostics step;
  double log_evidence = 0.0;
  double pi = 0.0;
};

/// Predictive quantiles at (j + 0.5) / K, j < K, used as equally weighted
/// samples for CRPS.
struct SampleRow {
  std::size_t time = 0;
  std::string phase;
  std::string target;
  std::string estimator;
  std::vector<double> values;
};

struct RunArtifact {
  std::vector<std::string> models;
  std::vector<EstimateRow> estimates;
  std::vector<ParameterRow> parameters;
  std::vector<DiagnosticRow> diagnostics;
  std::vector<SampleRow> samples;
  nlohmann::json metadata;
};

namespace detail {

inline std::vector<double> sample_grid(std::size_t k) {
  std::vector<double> g(k);
  for (std::size_t j = 0; j < k; ++j) g[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(k);
  return g;
}

/// Summary and sample quantiles of a mixture from one sort.
inline std::pair<PosteriorSummary, std::vector<double>> summarize_with_samples(std::span<const WeightedSample> clouds,
                                                                               std::span<const double> pis,
                                                                               std::span<const double> grid) {
  std::vector<double> probs(kSummaryProbs.begin(), kSummaryProbs.end());
  probs.insert(probs.end(), grid.begin(), grid.end());
  const auto q = mixture_quantiles(clouds, pis, probs);
  PosteriorSummary s;
  std::vector<double> means;
  for (std::size_t k = 0; k < clouds.size(); ++k) means.push_back(pis[k] > 0.0 ? weighted_mean(clouds[k]) : 0.0);
  s.mean = average_point(means, pis);
  std::copy(q.begin(), q.begin() + kSummaryProbs.size(), s.quantiles.begin());
  return {s, std::vector<double>(q.begin() + kSummaryProbs.size(), q.end())};
}

/// Fills the per-model and averaged columns of `row` from clouds and
/// appends the matching sample rows.
inline void fill_estimates(EstimateRow& row, const std::vector<std::string>& names,
                           const std::vector<WeightedSample>& inc, const std::vector<WeightedSample>& rt,
                           const std::vector<double>& pis, std::span<const double> grid,
                           std::vector<SampleRow>& samples) {
  const double one = 1.0;
  auto add = [&](const std::string& target, const std::string& estimator, std::vector<double> values) {
    samples.push_back(SampleRow{row.time, row.phase, target, estimator, std::move(values)});
  };
  for (std::size_t k = 0; k < names.size(); ++k) {
    auto [si, vi] = summarize_with_samples(std::span(&inc[k], 1), std::span(&one, 1), grid);
    auto [sr, vr] = summarize_with_samples(std::span(&rt[k], 1), std::span(&one, 1), grid);
    row.model_incidence.push_back(si);
    row.model_rt.push_back(sr);
    add("incidence", names[k], std::move(vi));
    add("rt", names[k], std::move(vr));
  }
  auto [mi, vmi] = summarize_with_samples(inc, pis, grid);
  auto [mr, vmr] = summarize_with_samples(rt, pis, grid);
  row.ma_incidence = mi;
  row.ma_rt = mr;
  row.pis = pis;
  add("incidence", "ma", std::move(vmi));
  add("rt", "ma", std::move(vmr));
}

}  // namespace detail

struct RunOptions {
  std::uint64_t seed = io::kDefaultSeed;
  std::size_t forecast_horizon = 0;
  ThetaMode theta = ThetaMode::kEnsemble;
};

/// Fits every configured model to the first fit_steps observations and,
/// when asked, appends an L-step forecast.
inline RunArtifact run_pipeline(const io::RunConfig& cfg, const Dataset& data, const RunOptions& opt) {
  RunArtifact art;
  for (const auto& m : cfg.models) art.models.push_back(m.name);
  auto ens = build_ensemble(cfg, opt.seed);
  ens.initialize();
  const auto grid = detail::sample_grid(cfg.output.samples);

  for (std::size_t t = 0; t < data.fit_steps; ++t) {
    const auto step = ens.step(data.series.counts[t]);
    EstimateRow row;
    row.time = step.time;
    row.date = data.series.dates[t];
    row.phase = "fit";
    row.y = step.y;
    detail::fill_estimates(row, art.models, ens.incidence_clouds(), ens.rt_clouds(), step.pis, grid, art.samples);
    for (std::size_t k = 0; k < ens.size(); ++k) {
      row.ess.push_back(step.models[k].ess_after);
      const auto& f = ens.model(k);
      const auto names = f.free_parameter_names();
      const auto sums = f.parameter_summaries();
      for (std::size_t j = 0; j < names.size(); ++j)
        art.parameters.push_back(ParameterRow{step.time, art.models[k], names[j], sums[j]});
      art.diagnostics.push_back(DiagnosticRow{step.time, art.models[k], step.models[k], step.log_evidence[k], step.pis[k]});
      art.diagnostics.back().step.prev_log_weights.clear();
      art.diagnostics.back().step.log_increments.clear();
    }
    art.estimates.push_back(std::move(row));
  }

  if (opt.forecast_horizon > 0) {
    const auto fc = ens.forecast(opt.forecast_horizon, opt.theta);
    for (std::size_t l = 0; l < fc.horizon; ++l) {
      EstimateRow row;
      row.time = data.fit_steps + l + 1;
      row.date = row.time <= data.series.size() ? data.series.dates[row.time - 1] : "";
      row.phase = "forecast";
      std::vector<WeightedSample> inc, rt;
      for (const auto& m : fc.models) {
        inc.push_back(m.incidence[l]);
        rt.push_back(m.rt[l]);
      }
      detail::fill_estimates(row, art.models, inc, rt, fc.pis[l], grid, art.samples);
      art.estimates.push_back(std::move(row));
    }
  }

  auto& meta = art.metadata;
  meta["seed"] = opt.seed;
  meta["data"] = {{"source", data.source}, {"unit", cfg.data.unit}, {"population", cfg.data.population},
                  {"steps", data.series.size()}, {"fit_steps", data.fit_steps}};
  meta["engine"] = {{"n_theta", cfg.engine.smc2.n_theta}, {"n_x", cfg.engine.smc2.n_x},
                    {"pmmh_moves", cfg.engine.smc2.pmmh_moves}, {"ess_threshold", cfg.engine.smc2.ess_threshold},
                    {"window", cfg.engine.smc2.window}, {"proposal_scale", cfg.engine.smc2.proposal_scale}};
  meta["forecast"] = {{"horizon", opt.forecast_horizon}, {"theta", std::string(theta_mode_name(opt.theta))}};
  meta["models"] = nlohmann::json::array();
  for (std::size_t k = 0; k < cfg.models.size(); ++k) {
    nlohmann::json priors = nlohmann::json::object();
    for (const auto& [key, spec] : cfg.models[k].priors) priors[key] = io::prior_to_json(spec);
    meta["models"].push_back({{"name", cfg.models[k].name}, {"model", cfg.models[k].kind}, {"priors", priors},
                              {"final_pi", ens.pis()[k]}});
  }
  return art;
}

}  // namespace bma
