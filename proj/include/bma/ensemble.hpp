#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bma/averaging.hpp"
#include "bma/errors.hpp"
#include "bma/forecasting.hpp"
#include "bma/models/model.hpp"
#include "bma/smc2.hpp"

namespace bma {

/// Everything recorded for one time step of the ensemble.
struct EnsembleStep {
  std::size_t time = 0;
  Observation y;
  std::vector<StepDiagnostics> models;
  std::vector<double> log_evidence;
  std::vector<double> pis;
};

/// Runs k >= 1 model filters side by side on one observation series and
/// keeps their posterior model probabilities (equal prior weight per model).
class ModelEnsemble {
 public:
  void add(std::string name, std::unique_ptr<ModelFilter> filter) {
    if (!filter) throw ConfigError("null model filter");
    names_.push_back(std::move(name));
    filters_.push_back(std::move(filter));
  }

  [[nodiscard]] std::size_t size() const noexcept { return filters_.size(); }
  [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
  [[nodiscard]] const ModelFilter& model(std::size_t k) const { return *filters_.at(k); }
  [[nodiscard]] ModelFilter& model(std::size_t k) { return *filters_.at(k); }
  [[nodiscard]] const std::vector<double>& pis() const noexcept { return pis_; }
  [[nodiscard]] const std::vector<Observation>& history() const noexcept { return history_; }

  void initialize() {
    if (filters_.empty()) throw ConfigError("at least one model is required");
    history_.clear();
    pis_.assign(filters_.size(), 1.0 / static_cast<double>(filters_.size()));
    for (auto& f : filters_) f->initialize();
  }

  EnsembleStep step(Observation y) {
    history_.push_back(y);
    EnsembleStep out;
    out.time = history_.size();
    out.y = y;
    for (auto& f : filters_) {
      out.models.push_back(f->step(history_));
      out.log_evidence.push_back(model_evidence(*f));
    }
    pis_ = posterior_model_probs(out.log_evidence);
    out.pis = pis_;
    return out;
  }

  /// Per-model clouds of the current filtering distribution.
  [[nodiscard]] std::vector<WeightedSample> incidence_clouds() const {
    std::vector<WeightedSample> out;
    for (const auto& f : filters_) out.push_back(f->incidence_posterior());
    return out;
  }

  [[nodiscard]] std::vector<WeightedSample> rt_clouds() const {
    std::vector<WeightedSample> out;
    for (const auto& f : filters_) out.push_back(f->rt_posterior());
    return out;
  }

  /// Forecast of every model with model probabilities frozen at their value
  /// after the last observation.
  [[nodiscard]] ForecastResult forecast(std::size_t horizon, ThetaMode mode) const {
    if (history_.empty()) throw NumericError("forecast requested before fitting");
    ForecastResult out;
    out.horizon = horizon;
    for (const auto& f : filters_) out.models.push_back(f->forecast(horizon, mode, history_));
    for (std::size_t l = 0; l < horizon; ++l) {
      out.pis.push_back(pis_);
      std::vector<WeightedSample> inc, rt;
      for (const auto& m : out.models) {
        inc.push_back(m.incidence[l]);
        rt.push_back(m.rt[l]);
      }
      out.incidence.push_back(summarize_mixture(inc, pis_));
      out.rt.push_back(summarize_mixture(rt, pis_));
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::unique_ptr<ModelFilter>> filters_;
  std::vector<Observation> history_;
  std::vector<double> pis_;
};

}  // namespace bma
