#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bma/errors.hpp"

namespace bma {

/// Root mean squared error; time points without a truth value are skipped.
inline double rmse(std::span<const std::optional<double>> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) throw NumericError("rmse: series lengths differ");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (!truth[t]) continue;
    const double d = *truth[t] - predicted[t];
    sum += d * d;
    ++count;
  }
  if (count == 0) throw NumericError("rmse: no overlapping observations");
  return std::sqrt(sum / static_cast<double>(count));
}

inline double rmse(std::span<const double> truth, std::span<const double> predicted) {
  std::vector<std::optional<double>> t(truth.begin(), truth.end());
  return rmse(t, predicted);
}

/// Fraction of truths inside the closed interval [lo, hi].
inline double coverage(std::span<const std::optional<double>> truth,
                       std::span<const std::pair<double, double>> intervals) {
  if (truth.size() != intervals.size()) throw NumericError("coverage: series lengths differ");
  std::size_t hits = 0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (!truth[t]) continue;
    const auto [lo, hi] = intervals[t];
    if (lo > hi) throw NumericError("coverage: interval with lo > hi");
    ++count;
    if (lo <= *truth[t] && *truth[t] <= hi) ++hits;
  }
  if (count == 0) throw NumericError("coverage: empty series");
  return static_cast<double>(hits) / static_cast<double>(count);
}

inline double coverage(std::span<const double> truth, std::span<const std::pair<double, double>> intervals) {
  std::vector<std::optional<double>> t(truth.begin(), truth.end());
  return coverage(t, intervals);
}

/// CRPS of an equally weighted particle set against one truth:
/// (1/N) sum |z - x_i| - (1/2N^2) sum_i sum_j |x_i - x_j|.
/// The pairwise term uses sorted values: sum_{i<j} (x_j - x_i) = sum_j (2j - N + 1) x_(j).
inline double crps_sample(double truth, std::span<const double> particles) {
  const std::size_t n = particles.size();
  if (n == 0) throw NumericError("crps: empty particle set");
  std::vector<double> x(particles.begin(), particles.end());
  std::sort(x.begin(), x.end());
  double abs_err = 0.0;
  double pair = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    abs_err += std::abs(truth - x[j]);
    pair += (2.0 * static_cast<double>(j) - static_cast<double>(n) + 1.0) * x[j];
  }
  const double nn = static_cast<double>(n);
  return abs_err / nn - pair / (nn * nn);
}

/// Time-averaged particle CRPS; times without a truth value are skipped.
inline double crps_particles(std::span<const std::optional<double>> truth,
                             std::span<const std::vector<double>> particle_sets,
                             std::vector<double>* per_time = nullptr) {
  if (truth.size() != particle_sets.size()) throw NumericError("crps: series lengths differ");
  double sum = 0.0;
  std::size_t count = 0;
  if (per_time) per_time->assign(truth.size(), std::nan(""));
  for (std::size_t t = 0; t < truth.size(); ++t) {
    if (particle_sets[t].empty()) throw NumericError("crps: empty particle set");
    if (!truth[t]) continue;
    const double c = crps_sample(*truth[t], particle_sets[t]);
    if (per_time) (*per_time)[t] = c;
    sum += c;
    ++count;
  }
  if (count == 0) throw NumericError("crps: empty series");
  return sum / static_cast<double>(count);
}

inline double crps_particles(std::span<const double> truth, std::span<const std::vector<double>> particle_sets,
                             std::vector<double>* per_time = nullptr) {
  std::vector<std::optional<double>> t(truth.begin(), truth.end());
  return crps_particles(t, particle_sets, per_time);
}

enum class ScoreTarget { kIncidence, kRt };
enum class ScorePhase { kInSample, kForecast };

inline std::string_view target_name(ScoreTarget t) { return t == ScoreTarget::kRt ? "rt" : "incidence"; }
inline std::string_view phase_name(ScorePhase p) { return p == ScorePhase::kForecast ? "forecast" : "in_sample"; }

/// Scores of one estimator (a single model or the average) for one target.
struct ScoreReport {
  std::string estimator;
  ScoreTarget target = ScoreTarget::kIncidence;
  ScorePhase phase = ScorePhase::kInSample;
  double rmse = 0.0;
  double coverage = 0.0;
  double crps = 0.0;
  std::vector<double> crps_series;
};

}  // namespace bma
