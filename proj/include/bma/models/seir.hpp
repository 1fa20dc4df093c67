#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>

#include "bma/distributions.hpp"
#include "bma/errors.hpp"
#include "bma/models/model.hpp"
#include "bma/models/parameters.hpp"
#include "bma/rng.hpp"

namespace bma {

struct SeirParams {
  double sigma = 0.5;  // latent-exit rate per step
  double gamma = 0.2;  // infectious-exit rate per step
  double nu2 = 0.0;    // sd of the log beta random walk
  double phi2 = 0.0;   // observation overdispersion
};

struct SeirsParams {
  double sigma = 0.5;
  double gamma = 0.2;
  double nu2 = 0.0;
  double phi2 = 0.0;
  double alpha = 0.0;    // immunity-loss rate per step
  double mu_demo = 0.0;  // recruitment / mortality rate per step

  [[nodiscard]] SeirParams base() const noexcept { return {sigma, gamma, nu2, phi2}; }
};

/// Compartment counts plus the flow observed at this step (E -> I) and the
/// transmission rate that drives the next transition.
struct SeirState {
  std::int64_t s = 0;
  std::int64_t e = 0;
  std::int64_t i = 0;
  std::int64_t r = 0;
  std::int64_t lambda_ei = 0;
  double beta = 0.0;
  double r_t = 0.0;

  [[nodiscard]] std::int64_t population() const noexcept { return s + e + i + r; }
};

namespace detail {

/// 1 - exp(-rate), exact for small rates and equal to 1 for an infinite rate.
inline double exit_probability(double rate) {
  if (rate <= 0.0) return 0.0;
  return std::clamp(-std::expm1(-rate), 0.0, 1.0);
}

struct SeirFlows {
  std::int64_t se = 0;
  std::int64_t ei = 0;
  std::int64_t ir = 0;
};

inline SeirFlows draw_seir_flows(const SeirState& state, const SeirParams& params, RngStream& rng) {
  const auto n = state.population();
  SeirFlows f;
  const double pressure = n > 0 ? state.beta * static_cast<double>(state.i) / static_cast<double>(n) : 0.0;
  f.se = sample_binomial(state.s, exit_probability(pressure), rng);
  f.ei = sample_binomial(state.e, exit_probability(params.sigma), rng);
  f.ir = sample_binomial(state.i, exit_probability(params.gamma), rng);
  return f;
}

inline void advance_beta(SeirState& state, double nu, double gamma, RngStream& rng) {
  if (nu > 0.0) state.beta *= std::exp(nu * standard_normal(rng));
  state.r_t = state.beta / gamma;
}

}  // namespace detail

inline SeirState seir_step(const SeirState& state, const SeirParams& params, RngStream& rng) {
  const auto f = detail::draw_seir_flows(state, params, rng);
  SeirState next = state;
  next.s -= f.se;
  next.e += f.se - f.ei;
  next.i += f.ei - f.ir;
  next.r += f.ir;
  next.lambda_ei = f.ei;
  detail::advance_beta(next, params.nu2, params.gamma, rng);
  return next;
}

/// SEIR plus waning immunity and demographic turnover. Deaths are binomial
/// on what remains of E, I and R after the disease flows, and recruitment
/// into S equals the total deaths, so the population is conserved exactly.
/// With alpha = mu_demo = 0 the draws coincide with seir_step.
inline SeirState seirs_step(const SeirState& state, const SeirsParams& params, RngStream& rng) {
  const auto f = detail::draw_seir_flows(state, params.base(), rng);
  const auto rs = sample_binomial(state.r, detail::exit_probability(params.alpha), rng);
  const double p_death = detail::exit_probability(params.mu_demo);
  const auto death_e = sample_binomial(state.e - f.ei, p_death, rng);
  const auto death_i = sample_binomial(state.i - f.ir, p_death, rng);
  const auto death_r = sample_binomial(state.r - rs, p_death, rng);
  const auto births = death_e + death_i + death_r;

  SeirState next = state;
  next.s += births - f.se + rs;
  next.e += f.se - f.ei - death_e;
  next.i += f.ei - f.ir - death_i;
  next.r += f.ir - rs - death_r;
  next.lambda_ei = f.ei;
  detail::advance_beta(next, params.nu2, params.gamma, rng);
  return next;
}

namespace detail {

inline SeirState seir_initial(std::int64_t population, std::span<const double> init, double gamma) {
  const auto e0 = static_cast<std::int64_t>(std::llround(std::max(0.0, init[0])));
  const auto i0 = static_cast<std::int64_t>(std::llround(std::max(0.0, init[1])));
  if (e0 + i0 > population) throw NumericError("initial exposed + infectious exceed the population");
  SeirState s;
  s.e = e0;
  s.i = i0;
  s.s = population - e0 - i0;
  s.r = 0;
  s.beta = std::max(init[2], 1e-12);
  s.r_t = s.beta / gamma;
  return s;
}

}  // namespace detail

class SeirModel {
 public:
  using State = SeirState;
  using Params = SeirParams;

  static constexpr std::string_view kName = "seir";
  static constexpr std::array<std::string_view, 4> kParameterNames{"sigma", "gamma", "nu2", "phi2"};
  static constexpr std::array<std::string_view, 3> kInitialStateNames{"e0", "i0", "beta0"};

  SeirModel(std::int64_t population, const PriorMap& initial_priors)
      : population_(population), initial_(kInitialStateNames, initial_priors, kName) {
    if (population <= 0) throw ConfigError("seir: population must be positive");
  }

  [[nodiscard]] std::int64_t population() const noexcept { return population_; }

  [[nodiscard]] Params make_params(std::span<const double> v) const {
    return Params{v[0], v[1], v[2], v[3]};
  }

  [[nodiscard]] State sample_initial(const Params& params, RngStream& rng) const {
    const auto init = initial_.sample_all(rng);
    return detail::seir_initial(population_, init, params.gamma);
  }

  void propagate(State& state, const Params& params, RngStream& rng) const {
    state = seir_step(state, params, rng);
  }

  void absorb(State&, Observation, const Params&, RngStream&) const {}

  [[nodiscard]] double incidence(const State& s) const noexcept { return static_cast<double>(s.lambda_ei); }
  [[nodiscard]] double reproduction_number(const State& s) const noexcept { return s.r_t; }
  [[nodiscard]] double overdispersion(const Params& p) const noexcept { return p.phi2; }

 private:
  std::int64_t population_;
  ParameterLayout initial_;
};

class SeirsModel {
 public:
  using State = SeirState;
  using Params = SeirsParams;

  static constexpr std::string_view kName = "seirs";
  static constexpr std::array<std::string_view, 6> kParameterNames{"sigma", "gamma", "nu2",
                                                                   "phi2", "alpha", "mu_demo"};
  static constexpr std::array<std::string_view, 3> kInitialStateNames{"e0", "i0", "beta0"};

  SeirsModel(std::int64_t population, const PriorMap& initial_priors)
      : population_(population), initial_(kInitialStateNames, initial_priors, kName) {
    if (population <= 0) throw ConfigError("seirs: population must be positive");
  }

  [[nodiscard]] std::int64_t population() const noexcept { return population_; }

  [[nodiscard]] Params make_params(std::span<const double> v) const {
    return Params{v[0], v[1], v[2], v[3], v[4], v[5]};
  }

  [[nodiscard]] State sample_initial(const Params& params, RngStream& rng) const {
    const auto init = initial_.sample_all(rng);
    return detail::seir_initial(population_, init, params.gamma);
  }

  void propagate(State& state, const Params& params, RngStream& rng) const {
    state = seirs_step(state, params, rng);
  }

  void absorb(State&, Observation, const Params&, RngStream&) const {}

  [[nodiscard]] double incidence(const State& s) const noexcept { return static_cast<double>(s.lambda_ei); }
  [[nodiscard]] double reproduction_number(const State& s) const noexcept { return s.r_t; }
  [[nodiscard]] double overdispersion(const Params& p) const noexcept { return p.phi2; }

 private:
  std::int64_t population_;
  ParameterLayout initial_;
};

static_assert(StateSpaceModel<SeirModel>);
static_assert(StateSpaceModel<SeirsModel>);

}  // namespace bma
