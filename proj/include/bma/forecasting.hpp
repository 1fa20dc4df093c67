#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "bma/averaging.hpp"
#include "bma/errors.hpp"
#include "bma/models/model.hpp"
#include "bma/particle_filter.hpp"
#include "bma/rng.hpp"

namespace bma {

/// Which parameter values drive the forecast of a fitted model.
///
/// kEnsemble propagates every theta-particle's cloud with its own parameters,
/// weighting particle (m, i) by omega_m * W_{m,i}. kPoint re-runs the filter
/// at the posterior-mean parameters and forecasts from that single cloud.
enum class ThetaMode { kEnsemble, kPoint };

inline ThetaMode parse_theta_mode(std::string_view s) {
  if (s == "ensemble") return ThetaMode::kEnsemble;
  if (s == "point") return ThetaMode::kPoint;
  throw ConfigError("unknown theta mode '" + std::string(s) + "' (expected ensemble or point)");
}

inline std::string_view theta_mode_name(ThetaMode m) { return m == ThetaMode::kPoint ? "point" : "ensemble"; }

/// Propagates each particle of `cloud` `horizon` steps without observations.
/// `visit(lead, i, state)` sees particle i after lead = 1..horizon steps.
/// Observation-driven models feed a draw from their observation model into
/// the next transition (absorb with a missing observation).
template <StateSpaceModel Model, class Visitor>
void propagate_forecast(const Model& model, const StateCloud<typename Model::State>& cloud,
                        const typename Model::Params& params, std::size_t horizon, const RngStream& rng,
                        Visitor&& visit) {
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto r = rng.split(i);
    auto state = cloud.particles[i];
    for (std::size_t lead = 1; lead <= horizon; ++lead) {
      model.propagate(state, params, r);
      model.absorb(state, std::nullopt, params, r);
      visit(lead, i, state);
    }
  }
}

/// Predictive particles of one model, indexed by lead - 1.
struct ModelForecast {
  std::vector<WeightedSample> incidence;
  std::vector<WeightedSample> rt;
};

/// L-step-ahead forecast of all models with model probabilities frozen at
/// their last fitted value.
struct ForecastResult {
  std::size_t horizon = 0;
  std::vector<std::vector<double>> pis;  // per lead
  std::vector<ModelForecast> models;
  std::vector<PosteriorSummary> incidence;  // averaged, per lead
  std::vector<PosteriorSummary> rt;
};

}  // namespace bma
