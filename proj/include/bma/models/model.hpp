#pragma once

#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "bma/rng.hpp"

namespace bma {

/// A case count; std::nullopt marks a missing observation.
using Observation = std::optional<std::int64_t>;

/// What the particle filter, SMC^2 and forecasting layers need from a model.
///
/// `propagate` draws x_t given x_{t-1}. `absorb` runs after weighting with the
/// step's observation (or its absence) and lets observation-driven models
/// record the count that feeds the next transition.
template <class M>
concept StateSpaceModel = requires(const M& model, typename M::State& state,
                                   const typename M::State& cstate,
                                   const typename M::Params& params, RngStream& rng,
                                   Observation y, std::span<const double> values) {
  { M::kName } -> std::convertible_to<std::string_view>;
  M::kParameterNames;
  M::kInitialStateNames;
  { model.make_params(values) } -> std::same_as<typename M::Params>;
  { model.sample_initial(params, rng) } -> std::same_as<typename M::State>;
  model.propagate(state, params, rng);
  model.absorb(state, y, params, rng);
  { model.incidence(cstate) } -> std::convertible_to<double>;
  { model.reproduction_number(cstate) } -> std::convertible_to<double>;
  { model.overdispersion(params) } -> std::convertible_to<double>;
};

}  // namespace bma
