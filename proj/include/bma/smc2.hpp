#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bma/averaging.hpp"
#include "bma/distributions.hpp"
#include "bma/errors.hpp"
#include "bma/forecasting.hpp"
#include "bma/models/model.hpp"
#include "bma/models/parameters.hpp"
#include "bma/parallel.hpp"
#include "bma/particle_filter.hpp"
#include "bma/rng.hpp"

namespace bma {

struct Smc2Settings {
  std::size_t n_theta = 400;
  std::size_t n_x = 200;
  std::size_t pmmh_moves = 5;
  double ess_threshold = 0.5;  // rejuvenate when ESS < ess_threshold * n_theta
  std::size_t window = 1;      // evidence window t_w, in steps
  double proposal_scale = 0.5;
  double log_floor = kDefaultLogFloor;

  void validate() const {
    if (n_theta == 0) throw ConfigError("n_theta must be positive");
    if (n_x == 0) throw ConfigError("n_x must be positive");
    if (!(ess_threshold > 0.0 && ess_threshold <= 1.0)) throw ConfigError("ess_threshold must lie in (0, 1]");
    if (window == 0) throw ConfigError("evidence window must be at least one step");
    if (!(proposal_scale > 0.0) || !std::isfinite(proposal_scale))
      throw ConfigError("proposal_scale must be positive");
    if (!(log_floor < 0.0)) throw ConfigError("log_floor must be negative");
  }
};

/// What happened to one model during one time step.
struct StepDiagnostics {
  std::size_t time = 0;
  bool observed = false;
  double ess = 0.0;  // after reweighting, before any rejuvenation
  bool rejuvenated = false;
  double ess_after = 0.0;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t off_support = 0;
  double log_evidence_term = 0.0;  // log sum_m W_{t-1}^m p(y_t | y_{1:t-1}, theta_m)
  std::size_t degenerate_filters = 0;
  std::vector<double> prev_log_weights;  // normalised theta log-weights before the step
  std::vector<double> log_increments;

  [[nodiscard]] double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
};

/// Weighted mean and covariance of the rows of `points`, with weights
/// normalised internally.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> weighted_moments(const std::vector<std::vector<double>>& points,
                                                                    std::span<const double> weights) {
  if (points.empty() || points.size() != weights.size()) throw NumericError("weighted moments: size mismatch");
  const auto dim = static_cast<Eigen::Index>(points.front().size());
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw NumericError("weighted moments: no mass");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (std::size_t m = 0; m < points.size(); ++m)
    mean += (weights[m] / total) * Eigen::Map<const Eigen::VectorXd>(points[m].data(), dim);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t m = 0; m < points.size(); ++m) {
    const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(points[m].data(), dim) - mean;
    cov.noalias() += (weights[m] / total) * d * d.transpose();
  }
  return {mean, cov};
}

/// Independent Gaussian proposal N(mean, scale * cov) for PMMH moves. A
/// collapsed covariance gets a small diagonal floor so that the proposal
/// keeps a density.
class GaussianProposal {
 public:
  GaussianProposal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, double scale)
      : factor_(mean, floored(mean, scale * cov), /*jitter=*/true) {}

  [[nodiscard]] std::vector<double> sample(RngStream& rng) const {
    const Eigen::VectorXd x = factor_.sample(rng);
    return {x.data(), x.data() + x.size()};
  }

  [[nodiscard]] double log_density(std::span<const double> x) const {
    return factor_.log_density(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
  }

 private:
  static Eigen::MatrixXd floored(const Eigen::VectorXd& mean, Eigen::MatrixXd cov) {
    for (Eigen::Index j = 0; j < cov.rows(); ++j) {
      const double floor = 1e-12 * std::max(1.0, mean[j] * mean[j]);
      cov(j, j) = std::max(cov(j, j), floor);
    }
    return cov;
  }

  MvnFactor factor_;
};

/// log sum_m exp(prev_log_w[m] + log_inc[m]): the one-step predictive
/// likelihood averaged over the parameter weights in force before the step.
inline double weighted_evidence_term(std::span<const double> prev_log_w, std::span<const double> log_inc) {
  if (prev_log_w.size() != log_inc.size()) throw NumericError("one increment per weight required");
  std::vector<double> combined(prev_log_w.size());
  for (std::size_t m = 0; m < combined.size(); ++m) combined[m] = prev_log_w[m] + log_inc[m];
  return log_sum_exp(combined);
}

/// Log Metropolis-Hastings ratio for moving a parameter particle from the
/// current value to a candidate under an independent proposal q.
inline double pmmh_log_acceptance(double log_lik_candidate, double log_prior_candidate, double log_lik_current,
                                  double log_prior_current, double log_q_current, double log_q_candidate) {
  if (log_prior_candidate == kNegInf) return kNegInf;
  return (log_lik_candidate - log_lik_current) + (log_prior_candidate - log_prior_current) +
         (log_q_current - log_q_candidate);
}

/// A fitted model as seen by the ensemble and output layers.
class ModelFilter {
 public:
  virtual ~ModelFilter() = default;

  [[nodiscard]] virtual std::string_view kind() const = 0;
  [[nodiscard]] virtual const Smc2Settings& settings() const = 0;
  virtual void initialize() = 0;
  /// Advances to t = history.size(); history holds y_1..y_t.
  virtual StepDiagnostics step(std::span<const Observation> history) = 0;
  /// Sum of the evidence terms in the current window.
  [[nodiscard]] virtual double log_evidence() const = 0;
  [[nodiscard]] virtual double ess() const = 0;
  [[nodiscard]] virtual WeightedSample incidence_posterior() const = 0;
  [[nodiscard]] virtual WeightedSample rt_posterior() const = 0;
  [[nodiscard]] virtual std::vector<std::string> free_parameter_names() const = 0;
  [[nodiscard]] virtual std::vector<PosteriorSummary> parameter_summaries() const = 0;
  [[nodiscard]] virtual ModelForecast forecast(std::size_t horizon, ThetaMode mode,
                                               std::span<const Observation> history) const = 0;
};

/// One parameter particle with its state filter.
template <StateSpaceModel Model>
struct ThetaParticle {
  std::vector<double> theta;  // free entries only
  typename Model::Params params{};
  double log_prior = 0.0;
  double log_weight = 0.0;  // normalised across particles
  StateCloud<typename Model::State> cloud;
  double log_marginal_likelihood = 0.0;  // running log p^(y_{1:t} | theta)
};

/// SMC^2 for one model: N_theta parameter particles, each carrying a
/// bootstrap filter with N_x state particles, rejuvenated by PMMH moves when
/// the parameter ESS drops.
template <StateSpaceModel Model>
class Smc2Filter final : public ModelFilter {
 public:
  using State = typename Model::State;
  using Params = typename Model::Params;

  Smc2Filter(Model model, ParameterLayout layout, Smc2Settings settings, RngStream rng)
      : model_(std::move(model)), layout_(std::move(layout)), settings_(settings), rng_(rng) {
    settings_.validate();
  }

  [[nodiscard]] std::string_view kind() const override { return Model::kName; }
  [[nodiscard]] const Smc2Settings& settings() const override { return settings_; }
  [[nodiscard]] const Model& model() const noexcept { return model_; }
  [[nodiscard]] const ParameterLayout& layout() const noexcept { return layout_; }
  [[nodiscard]] const std::vector<ThetaParticle<Model>>& particles() const noexcept { return particles_; }
  [[nodiscard]] std::size_t time() const noexcept { return time_; }
  [[nodiscard]] const std::deque<double>& evidence_buffer() const noexcept { return evidence_; }

  void initialize() override {
    const std::size_t n = settings_.n_theta;
    particles_.assign(n, ThetaParticle<Model>{});
    time_ = 0;
    evidence_.clear();
    parallel_for(n, [&](std::size_t m) {
      auto& p = particles_[m];
      auto prior_rng = rng_.path(Purpose::kPrior, m);
      p.theta = layout_.sample_free(prior_rng);
      p.log_prior = layout_.log_prior(p.theta);
      p.params = model_.make_params(layout_.expand(p.theta));
      p.cloud = initial_cloud(model_, p.params, settings_.n_x, rng_.path(Purpose::kInitialState, m));
      p.log_weight = -std::log(static_cast<double>(n));
      p.log_marginal_likelihood = 0.0;
    });
  }

  StepDiagnostics step(std::span<const Observation> history) override {
    if (particles_.empty()) throw NumericError("filter used before initialize()");
    if (history.size() != time_ + 1) throw DataError("observations must be supplied one step at a time");
    const std::size_t t = history.size();
    const Observation y = history.back();
    const std::size_t n = particles_.size();

    StepDiagnostics diag;
    diag.time = t;
    diag.observed = y.has_value();
    diag.prev_log_weights.resize(n);
    for (std::size_t m = 0; m < n; ++m) diag.prev_log_weights[m] = particles_[m].log_weight;

    diag.log_increments.assign(n, 0.0);
    std::vector<char> degenerate(n, 0);
    parallel_for(n, [&](std::size_t m) {
      auto& p = particles_[m];
      const auto r = bpf_step(p.cloud, y, p.params, model_, rng_.path(Purpose::kFilterStep, t, m), settings_.log_floor);
      diag.log_increments[m] = r.log_incremental_likelihood;
      degenerate[m] = r.degenerate ? 1 : 0;
      p.log_marginal_likelihood += r.log_incremental_likelihood;
    });
    diag.degenerate_filters = static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));

    std::vector<double> combined(n);
    for (std::size_t m = 0; m < n; ++m) combined[m] = diag.prev_log_weights[m] + diag.log_increments[m];
    diag.log_evidence_term = weighted_evidence_term(diag.prev_log_weights, diag.log_increments);
    if (!std::isfinite(diag.log_evidence_term)) throw NumericError("evidence term is not finite");
    reweight(combined);
    time_ = t;

    diag.ess = ess();
    diag.ess_after = diag.ess;
    if (diag.ess < settings_.ess_threshold * static_cast<double>(n)) {
      rejuvenate(history, diag);
      diag.ess_after = ess();
    }

    evidence_.push_back(diag.log_evidence_term);
    while (evidence_.size() > settings_.window) evidence_.pop_front();
    return diag;
  }

  /// Resamples the parameter particles and applies PMMH moves targeting
  /// p(theta | y_{1:t}). The proposal moments come from the weighted
  /// particles before resampling.
  void rejuvenate(std::span<const Observation> history, StepDiagnostics& diag) {
    const std::size_t t = history.size();
    const std::size_t n = particles_.size();
    std::vector<double> w(n);
    for (std::size_t m = 0; m < n; ++m) w[m] = std::exp(particles_[m].log_weight);

    std::optional<GaussianProposal> proposal;
    if (layout_.free_size() > 0 && settings_.pmmh_moves > 0) {
      std::vector<std::vector<double>> thetas(n);
      for (std::size_t m = 0; m < n; ++m) thetas[m] = particles_[m].theta;
      const auto [mean, cov] = weighted_moments(thetas, w);
      proposal.emplace(mean, cov, settings_.proposal_scale);
    }

    const auto ancestors = stratified_resample(w, rng_.path(Purpose::kThetaResample, t));
    std::vector<ThetaParticle<Model>> next;
    next.reserve(n);
    for (auto a : ancestors) next.push_back(particles_[a]);
    particles_ = std::move(next);
    for (auto& p : particles_) p.log_weight = -std::log(static_cast<double>(n));
    diag.rejuvenated = true;
    if (!proposal) return;

    std::vector<std::size_t> proposals(n, 0), accepted(n, 0), off_support(n, 0);
    parallel_for(n, [&](std::size_t m) {
      auto& p = particles_[m];
      double log_q_current = proposal->log_density(p.theta);
      for (std::size_t j = 0; j < settings_.pmmh_moves; ++j) {
        ++proposals[m];
        auto prop_rng = rng_.path(Purpose::kPmmhProposal, t, m, j);
        auto candidate = proposal->sample(prop_rng);
        const double log_prior = layout_.log_prior(candidate);
        if (log_prior == kNegInf) {
          ++off_support[m];
          continue;
        }
        const auto params = model_.make_params(layout_.expand(candidate));
        auto fit = run_bpf(history, params, model_, settings_.n_x, rng_.path(Purpose::kPmmhFilter, t, m, j),
                           FilterOptions{settings_.log_floor, false});
        const double log_q_candidate = proposal->log_density(candidate);
        const double log_alpha = pmmh_log_acceptance(fit.log_marginal_likelihood, log_prior, p.log_marginal_likelihood,
                                                     p.log_prior, log_q_current, log_q_candidate);
        auto accept_rng = rng_.path(Purpose::kPmmhAccept, t, m, j);
        if (std::log(accept_rng.uniform01()) < log_alpha) {
          ++accepted[m];
          p.theta = std::move(candidate);
          p.params = params;
          p.log_prior = log_prior;
          p.cloud = std::move(fit.cloud);
          p.log_marginal_likelihood = fit.log_marginal_likelihood;
          log_q_current = log_q_candidate;
        }
      }
    });
    for (std::size_t m = 0; m < n; ++m) {
      diag.proposals += proposals[m];
      diag.accepted += accepted[m];
      diag.off_support += off_support[m];
    }
  }

  [[nodiscard]] double log_evidence() const override {
    if (evidence_.empty()) throw NumericError("model evidence requested before any observation");
    double total = 0.0;
    for (double v : evidence_) total += v;
    return total;
  }

  [[nodiscard]] std::vector<double> theta_weights() const {
    std::vector<double> w(particles_.size());
    for (std::size_t m = 0; m < w.size(); ++m) w[m] = std::exp(particles_[m].log_weight);
    return w;
  }

  [[nodiscard]] double ess() const override { return bma::ess(theta_weights()); }

  [[nodiscard]] WeightedSample incidence_posterior() const override {
    return pooled([this](const State& s) { return static_cast<double>(model_.incidence(s)); });
  }

  [[nodiscard]] WeightedSample rt_posterior() const override {
    return pooled([this](const State& s) { return static_cast<double>(model_.reproduction_number(s)); });
  }

  [[nodiscard]] std::vector<std::string> free_parameter_names() const override { return layout_.free_names(); }

  [[nodiscard]] std::vector<PosteriorSummary> parameter_summaries() const override {
    const auto w = theta_weights();
    std::vector<PosteriorSummary> out;
    for (std::size_t j = 0; j < layout_.free_size(); ++j) {
      WeightedSample s;
      s.masses = w;
      s.values.reserve(particles_.size());
      for (const auto& p : particles_) s.values.push_back(p.theta[j]);
      out.push_back(summarize(s));
    }
    return out;
  }

  /// Posterior-mean free parameter vector.
  [[nodiscard]] std::vector<double> posterior_mean_theta() const {
    const auto w = theta_weights();
    std::vector<double> mean(layout_.free_size(), 0.0);
    for (std::size_t m = 0; m < particles_.size(); ++m)
      for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += w[m] * particles_[m].theta[j];
    return mean;
  }

  [[nodiscard]] ModelForecast forecast(std::size_t horizon, ThetaMode mode,
                                       std::span<const Observation> history) const override {
    if (particles_.empty() || time_ == 0) throw NumericError("forecast requested before fitting");
    const auto base = rng_.split(Purpose::kForecast);
    ModelForecast out;
    out.incidence.resize(horizon);
    out.rt.resize(horizon);

    if (mode == ThetaMode::kPoint) {
      const auto theta = posterior_mean_theta();
      const auto params = model_.make_params(layout_.expand(theta));
      const auto fit = run_bpf(history, params, model_, settings_.n_x, rng_.split(Purpose::kPointFilter),
                               FilterOptions{settings_.log_floor, false});
      for (std::size_t l = 0; l < horizon; ++l) {
        out.incidence[l].values.resize(fit.cloud.size());
        out.rt[l].values.resize(fit.cloud.size());
        out.incidence[l].masses = fit.cloud.weights;
        out.rt[l].masses = fit.cloud.weights;
      }
      propagate_forecast(model_, fit.cloud, params, horizon, base, [&](std::size_t lead, std::size_t i, const State& s) {
        out.incidence[lead - 1].values[i] = static_cast<double>(model_.incidence(s));
        out.rt[lead - 1].values[i] = static_cast<double>(model_.reproduction_number(s));
      });
      return out;
    }

    const std::size_t n = particles_.size();
    const std::size_t nx = settings_.n_x;
    const auto w = theta_weights();
    for (std::size_t l = 0; l < horizon; ++l) {
      out.incidence[l].values.resize(n * nx);
      out.incidence[l].masses.resize(n * nx);
      out.rt[l].values.resize(n * nx);
    }
    parallel_for(n, [&](std::size_t m) {
      const auto& p = particles_[m];
      for (std::size_t l = 0; l < horizon; ++l)
        for (std::size_t i = 0; i < p.cloud.size(); ++i) out.incidence[l].masses[m * nx + i] = w[m] * p.cloud.weights[i];
      propagate_forecast(model_, p.cloud, p.params, horizon, base.split(m),
                         [&](std::size_t lead, std::size_t i, const State& s) {
                           out.incidence[lead - 1].values[m * nx + i] = static_cast<double>(model_.incidence(s));
                           out.rt[lead - 1].values[m * nx + i] = static_cast<double>(model_.reproduction_number(s));
                         });
    });
    for (std::size_t l = 0; l < horizon; ++l) out.rt[l].masses = out.incidence[l].masses;
    return out;
  }

 private:
  void reweight(std::span<const double> log_w) {
    const double lse = log_sum_exp(log_w);
    for (std::size_t m = 0; m < particles_.size(); ++m) particles_[m].log_weight = log_w[m] - lse;
  }

  template <class F>
  WeightedSample pooled(F&& value) const {
    WeightedSample out;
    const auto w = theta_weights();
    std::size_t total = 0;
    for (const auto& p : particles_) total += p.cloud.size();
    out.values.reserve(total);
    out.masses.reserve(total);
    for (std::size_t m = 0; m < particles_.size(); ++m) {
      const auto& c = particles_[m].cloud;
      for (std::size_t i = 0; i < c.size(); ++i) {
        out.values.push_back(value(c.particles[i]));
        out.masses.push_back(w[m] * c.weights[i]);
      }
    }
    return out;
  }

  Model model_;
  ParameterLayout layout_;
  Smc2Settings settings_;
  RngStream rng_;
  std::vector<ThetaParticle<Model>> particles_;
  std::size_t time_ = 0;
  std::deque<double> evidence_;
};

/// Windowed log evidence of one model.
inline double model_evidence(const ModelFilter& filter) { return filter.log_evidence(); }

/// pi_k proportional to exp(log_evidence_k), computed stably.
inline std::vector<double> posterior_model_probs(std::span<const double> log_evidences) {
  if (log_evidences.empty()) throw NumericError("no models to weigh");
  const double lse = log_sum_exp(log_evidences);
  if (!std::isfinite(lse)) throw NumericError("model evidences are not finite");
  std::vector<double> pis(log_evidences.size());
  for (std::size_t k = 0; k < pis.size(); ++k) pis[k] = std::exp(log_evidences[k] - lse);
  return pis;
}

}  // namespace bma
