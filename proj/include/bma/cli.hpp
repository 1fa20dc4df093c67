#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bma/errors.hpp"
#include "bma/forecasting.hpp"
#include "bma/io/artifact.hpp"
#include "bma/io/config.hpp"
#include "bma/io/csv.hpp"
#include "bma/models/scenario.hpp"
#include "bma/parallel.hpp"
#include "bma/pipeline.hpp"

namespace bma {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

namespace detail {

struct RunFlags {
  std::string config;
  std::optional<std::string> data;
  std::optional<std::string> scenario;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

inline void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "run configuration (JSON)")->required();
  auto* data = cmd->add_option("--data", f.data, "observation CSV (date,count), overrides the configuration");
  auto* scen = cmd->add_option("--scenario", f.scenario, "simulated scenario A, B or C, overrides the configuration");
  data->excludes(scen);
  cmd->add_option("--seed", f.seed, "master seed (default: configuration, else 12345)");
  cmd->add_option("--threads", f.threads, "worker threads (overrides BMA_THREADS and the configuration)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", f.out, "output directory (default: configuration)");
}

/// Loads the configuration and applies command-line overrides. Relative data
/// paths in the file are resolved against the file's directory.
inline io::RunConfig prepare_run(const RunFlags& f, std::uint64_t& seed) {
  auto cfg = io::load_config(f.config);
  if (cfg.data.path && std::filesystem::path(*cfg.data.path).is_relative())
    cfg.data.path = (std::filesystem::path(f.config).parent_path() / *cfg.data.path).string();
  if (f.data) {
    cfg.data.path = *f.data;
    cfg.data.scenario.reset();
  }
  if (f.scenario) {
    cfg.data.scenario = *f.scenario;
    cfg.data.path.reset();
  }
  if (f.out) cfg.output.directory = *f.out;
  seed = f.seed.value_or(cfg.engine.seed);
  set_thread_count(io::resolve_threads(f.threads, cfg.engine.threads));
  return cfg;
}

inline void write_run(const io::RunConfig& cfg, const Dataset& data, const RunArtifact& art) {
  const std::filesystem::path dir = cfg.output.directory;
  io::write_artifact(dir, art);
  io::write_text(dir / "observations.csv", io::format_observations(data.series));
  if (data.truth) io::write_text(dir / "truth.csv", io::format_truth(*data.truth));
}

}  // namespace detail

/// Command-line entry point. Exit codes: 0 success, 1 configuration or usage
/// error, 2 data error, 3 numerical failure.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Bayesian model averaging of epidemic models with SMC^2", "bma"};
  app.require_subcommand(1);

  std::string scenario;
  std::uint64_t sim_seed = io::kDefaultSeed;
  std::string sim_out = ".";
  std::int64_t sim_population = 50000;
  std::size_t sim_horizon = 100;
  auto* simulate = app.add_subcommand("simulate", "simulate a scenario; writes observations.csv, truth.csv and scenario.json");
  simulate->add_option("--scenario", scenario, "A, B or C")->required();
  simulate->add_option("--seed", sim_seed, "master seed (default 12345)");
  simulate->add_option("--out", sim_out, "output directory");
  simulate->add_option("--population", sim_population, "population size");
  simulate->add_option("--horizon", sim_horizon, "number of steps");

  detail::RunFlags fit_flags;
  auto* fit = app.add_subcommand("fit", "fit all configured models and average them");
  detail::add_run_flags(fit, fit_flags);

  detail::RunFlags fc_flags;
  std::optional<std::size_t> fc_horizon;
  std::optional<std::string> fc_theta;
  auto* forecast = app.add_subcommand("forecast", "fit, then append forecast rows to the run");
  detail::add_run_flags(forecast, fc_flags);
  forecast->add_option("--horizon", fc_horizon, "forecast steps (default: configuration)");
  forecast->add_option("--theta", fc_theta, "ensemble (default) or point");

  std::string eval_run;
  std::string eval_truth;
  std::optional<std::string> eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "score a run; writes scores.csv and scores.json");
  evaluate->add_option("--run", eval_run, "run directory")->required();
  evaluate->add_option("--truth", eval_truth, "truth.csv from simulate, or a date,count series")->required();
  evaluate->add_option("--out", eval_out, "output directory (default: the run directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (*simulate) {
      const auto spec = ScenarioSpec::standard(parse_scenario(scenario), sim_population, sim_horizon);
      const auto data = simulate_for_seed(spec, sim_seed);
      const std::filesystem::path dir = sim_out;
      io::write_text(dir / "observations.csv", io::format_observations(scenario_series(data)));
      io::write_text(dir / "truth.csv", io::format_truth(data));
      io::write_text(dir / "scenario.json", io::scenario_to_json(spec, sim_seed).dump(2) + "\n");
      out << "wrote observations.csv, truth.csv and scenario.json to " << dir.string() << "\n";
    } else if (*fit || *forecast) {
      auto& flags = *fit ? fit_flags : fc_flags;
      std::uint64_t seed = 0;
      auto cfg = detail::prepare_run(flags, seed);
      RunOptions opt;
      opt.seed = seed;
      if (*forecast) {
        opt.forecast_horizon = fc_horizon.value_or(cfg.forecast.horizon);
        opt.theta = fc_theta ? parse_theta_mode(*fc_theta) : cfg.forecast.theta;
        if (opt.forecast_horizon == 0) throw ConfigError("forecast horizon must be positive");
      }
      const auto data = load_dataset(cfg, seed);
      const auto art = run_pipeline(cfg, data, opt);
      detail::write_run(cfg, data, art);
      out << "wrote run to " << cfg.output.directory << "\n";
    } else if (*evaluate) {
      const auto truth = io::read_truth(eval_truth);
      const auto reports = io::evaluate_run(eval_run, truth);
      const std::filesystem::path dir = eval_out.value_or(eval_run);
      io::write_text(dir / "scores.csv", io::format_scores(reports));
      io::write_text(dir / "scores.json", io::scores_to_json(reports).dump(2) + "\n");
      out << io::format_scores(reports);
    }
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace bma
