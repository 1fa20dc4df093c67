#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string_view>

#include "bma/distributions.hpp"
#include "bma/errors.hpp"
#include "bma/models/model.hpp"
#include "bma/models/parameters.hpp"
#include "bma/rng.hpp"

namespace bma {

struct DthpParams {
  double mu = 0.0;     // expected imported cases per step
  double omega = 0.5;  // geometric kernel parameter
  double nu1 = 0.0;    // sd of the log R_t random walk
  double phi1 = 0.0;   // observation overdispersion
};

/// Discrete-time Hawkes latent state.
///
/// `kernel_stat` is A_t = sum_{s<=t-1} y_s (1-omega)^{t-1-s}, so the excitation
/// term of the intensity is omega * A_t. `pending_count` is the count at the
/// current step that enters A at the next transition: the observation when
/// one exists, otherwise a draw from the observation model. At t = 0 it holds
/// the initial intensity lambda_H(0), which acts as y_0.
struct DthpState {
  double lambda_h = 0.0;
  double r_t = 1.0;
  double kernel_stat = 0.0;
  double cum_cases = 0.0;
  double pending_count = 0.0;
};

/// clamp(1 - cum/N, 0, 1) * (mu + R_t * omega * A_t)
inline double dthp_intensity(const DthpState& state, const DthpParams& params, double population) {
  const double depletion = std::clamp(1.0 - state.cum_cases / population, 0.0, 1.0);
  const double excitation = params.mu + state.r_t * params.omega * state.kernel_stat;
  return std::max(0.0, depletion * excitation);
}

inline DthpState dthp_step(const DthpState& state, double y_prev, const DthpParams& params,
                           double population, RngStream& rng) {
  if (y_prev < 0.0) throw NumericError("previous case count must be non-negative");
  DthpState next = state;
  next.kernel_stat = (1.0 - params.omega) * state.kernel_stat + y_prev;
  next.cum_cases = state.cum_cases + y_prev;
  if (params.nu1 > 0.0) next.r_t = state.r_t * std::exp(params.nu1 * detail::standard_normal(rng));
  next.lambda_h = dthp_intensity(next, params, population);
  next.pending_count = 0.0;
  return next;
}

class DthpModel {
 public:
  using State = DthpState;
  using Params = DthpParams;

  static constexpr std::string_view kName = "dthp";
  static constexpr std::array<std::string_view, 4> kParameterNames{"mu", "omega", "nu1", "phi1"};
  static constexpr std::array<std::string_view, 2> kInitialStateNames{"lambda_h0", "r0"};

  DthpModel(double population, const PriorMap& initial_priors)
      : population_(population), initial_(kInitialStateNames, initial_priors, kName) {
    if (!(population > 0.0)) throw ConfigError("dthp: population must be positive");
  }

  [[nodiscard]] double population() const noexcept { return population_; }

  [[nodiscard]] Params make_params(std::span<const double> values) const {
    return Params{values[0], values[1], values[2], values[3]};
  }

  [[nodiscard]] State sample_initial(const Params& params, RngStream& rng) const {
    const auto init = initial_.sample_all(rng);
    State s;
    s.pending_count = std::max(0.0, init[0]);
    s.lambda_h = s.pending_count;
    s.r_t = std::max(init[1], 1e-12);
    (void)params;
    return s;
  }

  void propagate(State& state, const Params& params, RngStream& rng) const {
    state = dthp_step(state, state.pending_count, params, population_, rng);
  }

  void absorb(State& state, Observation y, const Params& params, RngStream& rng) const {
    state.pending_count = y ? static_cast<double>(*y)
                            : static_cast<double>(sample_negbin(state.lambda_h, params.phi1, rng));
  }

  [[nodiscard]] double incidence(const State& s) const noexcept { return s.lambda_h; }
  [[nodiscard]] double reproduction_number(const State& s) const noexcept { return s.r_t; }
  [[nodiscard]] double overdispersion(const Params& p) const noexcept { return p.phi1; }

 private:
  double population_;
  ParameterLayout initial_;
};

static_assert(StateSpaceModel<DthpModel>);

}  // namespace bma
