#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "bma/errors.hpp"

namespace bma {

/// Quantile grid reported for every posterior summary.
inline constexpr std::array<double, 5> kSummaryProbs{0.025, 0.25, 0.5, 0.75, 0.975};

/// Particle values with (not necessarily normalised) masses.
struct WeightedSample {
  std::vector<double> values;
  std::vector<double> masses;

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

inline double weighted_mean(const WeightedSample& sample) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    num += sample.masses[i] * sample.values[i];
    den += sample.masses[i];
  }
  if (!(den > 0.0)) throw NumericError("weighted mean of a sample without mass");
  return num / den;
}

/// sum_k pi_k * estimate_k
inline double average_point(std::span<const double> estimates, std::span<const double> pis) {
  if (estimates.size() != pis.size()) throw NumericError("one model probability per estimate required");
  double out = 0.0;
  for (std::size_t k = 0; k < estimates.size(); ++k)
    if (pis[k] > 0.0) out += pis[k] * estimates[k];
  return out;
}

/// Quantiles of the mixture sum_k pi_k * cloud_k, where each cloud is first
/// normalised. Uses the left-continuous inverse CDF, Q(p) = inf{x : F(x) >= p};
/// p = 0 gives the smallest supported value.
inline std::vector<double> mixture_quantiles(std::span<const WeightedSample> clouds, std::span<const double> pis,
                                             std::span<const double> probs) {
  if (clouds.size() != pis.size()) throw NumericError("one model probability per cloud required");
  std::vector<std::pair<double, double>> pooled;
  std::size_t total = 0;
  for (const auto& c : clouds) total += c.size();
  pooled.reserve(total);
  for (std::size_t k = 0; k < clouds.size(); ++k) {
    if (!(pis[k] > 0.0)) continue;
    const auto& c = clouds[k];
    if (c.size() == 0) throw NumericError("mixture component without particles");
    const double mass = std::accumulate(c.masses.begin(), c.masses.end(), 0.0);
    if (!(mass > 0.0)) throw NumericError("mixture component without mass");
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c.masses[i] > 0.0) pooled.emplace_back(c.values[i], pis[k] * c.masses[i] / mass);
  }
  if (pooled.empty()) throw NumericError("mixture has no mass");
  std::sort(pooled.begin(), pooled.end());

  std::vector<double> cumulative(pooled.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    acc += pooled[i].second;
    cumulative[i] = acc;
  }
  constexpr double kTol = 1e-12;
  std::vector<double> out;
  out.reserve(probs.size());
  for (double p : probs) {
    const double target = std::clamp(p, 0.0, 1.0) * acc - kTol;
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), target);
    if (it == cumulative.end()) --it;
    out.push_back(pooled[static_cast<std::size_t>(it - cumulative.begin())].first);
  }
  return out;
}

inline std::vector<double> weighted_quantiles(const WeightedSample& sample, std::span<const double> probs) {
  const double one = 1.0;
  return mixture_quantiles(std::span(&sample, 1), std::span(&one, 1), probs);
}

/// Mean and summary quantiles of one posterior.
struct PosteriorSummary {
  double mean = 0.0;
  std::array<double, kSummaryProbs.size()> quantiles{};
};

/// Averaged estimate of one quantity: mixture mean plus mixture quantiles.
inline PosteriorSummary summarize_mixture(std::span<const WeightedSample> clouds, std::span<const double> pis) {
  std::vector<double> means;
  means.reserve(clouds.size());
  for (std::size_t k = 0; k < clouds.size(); ++k)
    means.push_back(pis[k] > 0.0 ? weighted_mean(clouds[k]) : 0.0);
  PosteriorSummary s;
  s.mean = average_point(means, pis);
  const auto q = mixture_quantiles(clouds, pis, kSummaryProbs);
  std::copy(q.begin(), q.end(), s.quantiles.begin());
  return s;
}

inline PosteriorSummary summarize(const WeightedSample& sample) {
  const double one = 1.0;
  return summarize_mixture(std::span(&sample, 1), std::span(&one, 1));
}

}  // namespace bma
