#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "bma/distributions.hpp"
#include "bma/errors.hpp"
#include "bma/models/model.hpp"
#include "bma/rng.hpp"

namespace bma {

/// log(1e-300): incremental log-likelihood assigned when no particle can
/// explain an observation.
inline constexpr double kDefaultLogFloor = -690.7755278982137;

/// log(sum(exp(v))) without overflow; -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

/// Normalised weights from log-weights. Returns the log normaliser.
inline double normalize_log_weights(std::span<const double> log_w, std::vector<double>& log_norm,
                                    std::vector<double>& norm) {
  const double lse = log_sum_exp(log_w);
  log_norm.resize(log_w.size());
  norm.resize(log_w.size());
  for (std::size_t i = 0; i < log_w.size(); ++i) {
    log_norm[i] = log_w[i] - lse;
    norm[i] = std::exp(log_norm[i]);
  }
  return lse;
}

/// (sum w)^2 / sum w^2.
inline double ess(std::span<const double> weights) {
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double w : weights) {
    if (w < 0.0 || std::isnan(w)) throw NumericError("ess: weights must be non-negative");
    sum += w;
    sum_sq += w * w;
  }
  if (!(sum > 0.0)) throw NumericError("ess: all weights are zero");
  return sum * sum / sum_sq;
}

/// Stratified resampling: one uniform draw in each of N equal strata of the
/// cumulative weight. Ancestor indices come out non-decreasing.
inline std::vector<std::size_t> stratified_resample(std::span<const double> weights, RngStream rng,
                                                    std::size_t count = 0) {
  const std::size_t n = weights.size();
  if (count == 0) count = n;
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || std::isnan(w)) throw NumericError("resample: weights must be non-negative");
    total += w;
  }
  if (n == 0 || !(total > 0.0) || !std::isfinite(total))
    throw NumericError("resample: degenerate weights (all zero)");

  std::vector<std::size_t> out(count);
  std::size_t j = 0;
  double cumulative = weights[0] / total;
  for (std::size_t i = 0; i < count; ++i) {
    const double u = (static_cast<double>(i) + rng.uniform01()) / static_cast<double>(count);
    while (u > cumulative && j + 1 < n) {
      ++j;
      cumulative += weights[j] / total;
    }
    out[i] = j;
  }
  return out;
}

/// N_x weighted particles of one model at one time step.
template <class State>
struct StateCloud {
  std::vector<State> particles;
  std::vector<double> log_weights;  // normalised
  std::vector<double> weights;      // normalised
  std::size_t time_index = 0;

  [[nodiscard]] std::size_t size() const noexcept { return particles.size(); }

  void set_uniform() {
    const auto n = particles.size();
    log_weights.assign(n, -std::log(static_cast<double>(n)));
    weights.assign(n, 1.0 / static_cast<double>(n));
  }
};

template <StateSpaceModel Model>
StateCloud<typename Model::State> initial_cloud(const Model& model, const typename Model::Params& params,
                                                std::size_t n_x, const RngStream& rng) {
  if (n_x == 0) throw ConfigError("number of state particles must be positive");
  StateCloud<typename Model::State> cloud;
  cloud.particles.reserve(n_x);
  const auto init = rng.split(Purpose::kInitialState);
  for (std::size_t i = 0; i < n_x; ++i) {
    auto r = init.split(i);
    cloud.particles.push_back(model.sample_initial(params, r));
  }
  cloud.set_uniform();
  return cloud;
}

struct BpfStepResult {
  double log_incremental_likelihood = 0.0;
  bool degenerate = false;
};

/// One bootstrap filter iteration, in place: resample from the previous
/// weights, propagate through the model, weight by the observation density.
///
/// A missing observation gives unit weights and a zero log increment. When
/// every particle has zero likelihood the weights are reset to uniform and the
/// increment is `log_floor`.
template <StateSpaceModel Model>
BpfStepResult bpf_step(StateCloud<typename Model::State>& cloud, Observation y,
                       const typename Model::Params& params, const Model& model, const RngStream& rng,
                       double log_floor = kDefaultLogFloor) {
  using State = typename Model::State;
  const std::size_t n = cloud.size();
  const auto ancestors = stratified_resample(cloud.weights, rng.split(Purpose::kResample));

  std::vector<State> next;
  next.reserve(n);
  std::vector<double> log_w(n, 0.0);
  const auto propagate = rng.split(Purpose::kPropagate);
  std::optional<NegBinLogPmf> density;
  if (y) density.emplace(*y, model.overdispersion(params));

  for (std::size_t i = 0; i < n; ++i) {
    auto r = propagate.split(i);
    State s = cloud.particles[ancestors[i]];
    model.propagate(s, params, r);
    if (density) log_w[i] = (*density)(model.incidence(s));
    model.absorb(s, y, params, r);
    next.push_back(std::move(s));
  }
  cloud.particles = std::move(next);
  ++cloud.time_index;

  BpfStepResult result;
  const double lse = normalize_log_weights(log_w, cloud.log_weights, cloud.weights);
  if (lse == kNegInf) {
    cloud.set_uniform();
    result.degenerate = true;
    result.log_incremental_likelihood = log_floor;
  } else {
    result.log_incremental_likelihood = lse - std::log(static_cast<double>(n));
  }
  return result;
}

template <class State>
struct FilterResult {
  StateCloud<State> cloud;  // at the final time step
  std::vector<double> log_incremental;
  double log_marginal_likelihood = 0.0;
  std::size_t degenerate_steps = 0;
  std::vector<StateCloud<State>> history;  // per step, only when requested
};

struct FilterOptions {
  double log_floor = kDefaultLogFloor;
  bool keep_history = false;
};

/// Bootstrap particle filter over a full series.
template <StateSpaceModel Model>
FilterResult<typename Model::State> run_bpf(std::span<const Observation> ys, const typename Model::Params& params,
                                            const Model& model, std::size_t n_x, const RngStream& rng,
                                            const FilterOptions& options = {}) {
  if (ys.empty()) throw DataError("particle filter needs at least one observation");
  FilterResult<typename Model::State> result;
  result.cloud = initial_cloud(model, params, n_x, rng);
  result.log_incremental.reserve(ys.size());
  const auto steps = rng.split(Purpose::kFilterStep);
  for (std::size_t t = 0; t < ys.size(); ++t) {
    const auto step = bpf_step(result.cloud, ys[t], params, model, steps.split(t + 1), options.log_floor);
    result.log_incremental.push_back(step.log_incremental_likelihood);
    result.log_marginal_likelihood += step.log_incremental_likelihood;
    if (step.degenerate) ++result.degenerate_steps;
    if (options.keep_history) result.history.push_back(result.cloud);
  }
  return result;
}

}  // namespace bma
