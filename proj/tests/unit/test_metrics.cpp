#include <gtest/gtest.h>

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "bma/metrics.hpp"

using namespace bma;

namespace {

double crps_pairwise(double z, const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double a = 0.0, b = 0.0;
  for (double xi : x) {
    a += std::abs(z - xi);
    for (double xj : x) b += std::abs(xi - xj);
  }
  return a / n - b / (2.0 * n * n);
}

}  // namespace

TEST(Rmse, ExamplesAndMissingTruth) {
  const std::vector<double> truth{1.0, 2.0, 3.0};
  const std::vector<double> pred{1.0, 2.0, 3.0};
  EXPECT_EQ(rmse(truth, pred), 0.0);
  const std::vector<double> off{2.0, 3.0, 4.0};
  EXPECT_NEAR(rmse(truth, off), 1.0, 1e-15);
  const std::vector<std::optional<double>> partial{1.0, std::nullopt, 3.0};
  const std::vector<double> p2{4.0, 100.0, 3.0};
  EXPECT_NEAR(rmse(partial, p2), std::sqrt(4.5), 1e-15);
  EXPECT_THROW(rmse(std::vector<double>{}, std::vector<double>{}), NumericError);
}

TEST(Coverage, ClosedIntervals) {
  const std::vector<double> truth{1.0, 2.0, 3.0, 4.0};
  const std::vector<std::pair<double, double>> iv{{1.0, 1.0}, {0.0, 1.9}, {3.0, 5.0}, {0.0, 4.0}};
  EXPECT_NEAR(coverage(truth, iv), 0.75, 1e-15);
  const std::vector<std::pair<double, double>> all{{0, 9}, {0, 9}, {0, 9}, {0, 9}};
  EXPECT_EQ(coverage(truth, all), 1.0);
  const std::vector<std::pair<double, double>> none{{5, 9}, {5, 9}, {5, 9}, {5, 9}};
  EXPECT_EQ(coverage(truth, none), 0.0);
}

TEST(Crps, TrivialCases) {
  const std::vector<double> same{3.0, 3.0, 3.0};
  EXPECT_EQ(crps_sample(3.0, same), 0.0);
  const std::vector<double> one{2.0};
  EXPECT_NEAR(crps_sample(5.5, one), 3.5, 1e-15);
  EXPECT_THROW(crps_sample(0.0, std::vector<double>{}), NumericError);
}

TEST(Crps, TwoPointClosedForm) {
  const std::vector<double> x{1.0, 4.0};
  for (double z : {-2.0, 1.0, 2.5, 4.0, 9.0})
    EXPECT_NEAR(crps_sample(z, x), (std::abs(z - 1) + std::abs(z - 4)) / 2.0 - 3.0 / 4.0, 1e-14);
}

TEST(Crps, MatchesPairwiseDefinition) {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> size(1, 200);
  std::normal_distribution<double> normal(5.0, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> x(static_cast<std::size_t>(size(gen)));
    for (auto& v : x) v = normal(gen);
    if (rep % 5 == 0)
      for (auto& v : x) v = std::round(v);  // ties
    const double z = normal(gen);
    EXPECT_NEAR(crps_sample(z, x), crps_pairwise(z, x), 1e-10);
  }
}

TEST(Crps, TranslationInvariant) {
  const std::vector<double> x{0.3, 1.7, -2.0, 5.5, 1.7};
  std::vector<double> shifted;
  for (double v : x) shifted.push_back(v + 1000.0);
  EXPECT_NEAR(crps_sample(0.9, x), crps_sample(1000.9, shifted), 1e-9);
}

TEST(Crps, SeriesAverageSkipsMissingTruth) {
  const std::vector<std::optional<double>> truth{1.0, std::nullopt, 3.0};
  const std::vector<std::vector<double>> sets{{1.0}, {7.0}, {5.0}};
  std::vector<double> per_time;
  EXPECT_NEAR(crps_particles(truth, sets, &per_time), 1.0, 1e-15);
  EXPECT_EQ(per_time[0], 0.0);
  EXPECT_TRUE(std::isnan(per_time[1]));
  EXPECT_EQ(per_time[2], 2.0);
}
