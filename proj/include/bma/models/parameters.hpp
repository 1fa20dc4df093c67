#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bma/distributions.hpp"
#include "bma/errors.hpp"
#include "bma/rng.hpp"

namespace bma {

using PriorMap = std::map<std::string, PriorSpec, std::less<>>;

/// Maps a model's named quantities onto priors and splits them into the free
/// (estimated) entries and the fixed ones.
///
/// Free values are stored densely in declaration order; `expand` restores the
/// full vector that model constructors consume.
class ParameterLayout {
 public:
  ParameterLayout() = default;

  ParameterLayout(std::span<const std::string_view> names, const PriorMap& priors,
                  std::string_view model_name) {
    for (const auto name : names) {
      const auto it = priors.find(name);
      if (it == priors.end())
        throw ConfigError("model '" + std::string(model_name) + "': no prior or fixed value for '" +
                          std::string(name) + "'");
      names_.emplace_back(name);
      priors_.push_back(it->second);
      if (it->second.is_fixed()) {
        fixed_values_.push_back(std::get<FixedPrior>(it->second.kind()).value);
      } else {
        free_indices_.push_back(names_.size() - 1);
        fixed_values_.push_back(0.0);
      }
    }
    for (const auto& [key, spec] : priors) {
      bool known = false;
      for (const auto name : names) known = known || name == key;
      if (!known)
        throw ConfigError("model '" + std::string(model_name) + "': unknown parameter '" + key + "'");
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }
  [[nodiscard]] std::size_t free_size() const noexcept { return free_indices_.size(); }
  [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
  [[nodiscard]] const PriorSpec& prior(std::size_t i) const { return priors_.at(i); }

  [[nodiscard]] std::vector<std::string> free_names() const {
    std::vector<std::string> out;
    for (auto i : free_indices_) out.push_back(names_[i]);
    return out;
  }

  [[nodiscard]] std::vector<double> expand(std::span<const double> free) const {
    std::vector<double> full = fixed_values_;
    for (std::size_t j = 0; j < free_indices_.size(); ++j) full[free_indices_[j]] = free[j];
    return full;
  }

  [[nodiscard]] std::vector<double> sample_free(RngStream& rng) const {
    std::vector<double> out;
    out.reserve(free_indices_.size());
    for (std::size_t j = 0; j < free_indices_.size(); ++j)
      out.push_back(priors_[free_indices_[j]].sample(rng));
    return out;
  }

  /// Full vector drawn from the priors; fixed entries take their value.
  [[nodiscard]] std::vector<double> sample_all(RngStream& rng) const {
    std::vector<double> out;
    out.reserve(priors_.size());
    for (const auto& p : priors_) out.push_back(p.sample(rng));
    return out;
  }

  [[nodiscard]] double log_prior(std::span<const double> free) const {
    double total = 0.0;
    for (std::size_t j = 0; j < free_indices_.size(); ++j) {
      total += priors_[free_indices_[j]].log_density(free[j]);
      if (total == kNegInf) break;
    }
    return total;
  }

 private:
  std::vector<std::string> names_;
  std::vector<PriorSpec> priors_;
  std::vector<double> fixed_values_;
  std::vector<std::size_t> free_indices_;
};

}  // namespace bma
