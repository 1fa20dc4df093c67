#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "bma/errors.hpp"
#include "bma/models/seir.hpp"
#include "bma/rng.hpp"

namespace bma {

enum class ScenarioId { A, B, C };

inline ScenarioId parse_scenario(std::string_view name) {
  if (name == "A" || name == "a") return ScenarioId::A;
  if (name == "B" || name == "b") return ScenarioId::B;
  if (name == "C" || name == "c") return ScenarioId::C;
  throw ConfigError("unknown scenario '" + std::string(name) + "' (expected A, B or C)");
}

inline std::string_view scenario_name(ScenarioId id) {
  switch (id) {
    case ScenarioId::A: return "A";
    case ScenarioId::B: return "B";
    case ScenarioId::C: return "C";
  }
  return "?";
}

/// Synthetic SEIR outbreak with a prescribed transmission-rate trajectory.
struct ScenarioSpec {
  ScenarioId id = ScenarioId::A;
  std::int64_t population = 50000;
  std::size_t horizon = 100;
  double sigma = 0.5;        // mean latent period 2 steps
  double gamma = 1.0 / 6.0;  // mean infectious period 6 steps
  std::array<std::int64_t, 4> initial{50000 - 10, 0, 10, 0};

  static ScenarioSpec standard(ScenarioId id, std::int64_t population = 50000, std::size_t horizon = 100) {
    ScenarioSpec spec;
    spec.id = id;
    spec.population = population;
    spec.horizon = horizon;
    spec.initial = {population - 10, 0, 10, 0};
    return spec;
  }

  void validate() const {
    if (horizon == 0) throw ConfigError("scenario horizon must be positive");
    if (population <= 0) throw ConfigError("scenario population must be positive");
    std::int64_t total = 0;
    for (auto c : initial) {
      if (c < 0) throw ConfigError("scenario initial compartments must be non-negative");
      total += c;
    }
    if (total != population) throw ConfigError("scenario initial compartments must sum to the population");
  }
};

/// Transmission rate at step t.
///
/// A: 0.32 up to t = 40, linear ramp to 0.14 at t = 45, then 0.14.
/// B: 0.35 for t <= 45, 0.1 for 45 < t <= 80, 0.22 afterwards.
/// C: 0.28 exp(cos(2 pi t / 100) - t / 128).
inline double scenario_beta(ScenarioId id, double t) {
  switch (id) {
    case ScenarioId::A:
      if (t <= 40.0) return 0.32;
      if (t >= 45.0) return 0.14;
      return 0.32 + (0.14 - 0.32) * (t - 40.0) / 5.0;
    case ScenarioId::B:
      if (t <= 45.0) return 0.35;
      if (t <= 80.0) return 0.1;
      return 0.22;
    case ScenarioId::C:
      return 0.28 * std::exp(std::cos(2.0 * std::numbers::pi * t / 100.0) - t / 128.0);
  }
  return 0.0;
}

/// Series indexed t = 1..horizon (element 0 is step 1).
struct ScenarioData {
  std::vector<std::int64_t> observations;  // E -> I flow of each step
  std::vector<double> true_rt;             // beta_t / gamma
  std::vector<double> true_beta;
  std::vector<SeirState> states;
};

/// The flow recorded at step t is drawn from the state at t-1 with beta_{t-1},
/// matching the filter, in which the R_t reported at t drives step t+1.
inline ScenarioData simulate_scenario(const ScenarioSpec& spec, RngStream rng) {
  spec.validate();
  SeirState state;
  state.s = spec.initial[0];
  state.e = spec.initial[1];
  state.i = spec.initial[2];
  state.r = spec.initial[3];
  const SeirParams params{spec.sigma, spec.gamma, 0.0, 0.0};

  ScenarioData out;
  out.observations.reserve(spec.horizon);
  for (std::size_t t = 1; t <= spec.horizon; ++t) {
    state.beta = scenario_beta(spec.id, static_cast<double>(t - 1));
    auto step_rng = rng.path(Purpose::kScenario, t);
    state = seir_step(state, params, step_rng);
    const double beta_t = scenario_beta(spec.id, static_cast<double>(t));
    state.beta = beta_t;
    state.r_t = beta_t / spec.gamma;
    out.observations.push_back(state.lambda_ei);
    out.true_beta.push_back(beta_t);
    out.true_rt.push_back(beta_t / spec.gamma);
    out.states.push_back(state);
  }
  return out;
}

}  // namespace bma
