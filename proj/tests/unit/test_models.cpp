#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "bma/errors.hpp"
#include "bma/models/dthp.hpp"
#include "bma/models/parameters.hpp"
#include "bma/models/seir.hpp"

using namespace bma;

namespace {

PriorMap dthp_initial(double lambda0, double r0) {
  return {{"lambda_h0", PriorSpec::fixed(lambda0)}, {"r0", PriorSpec::fixed(r0)}};
}

PriorMap seir_initial(double e0, double i0, double beta0) {
  return {{"e0", PriorSpec::fixed(e0)}, {"i0", PriorSpec::fixed(i0)}, {"beta0", PriorSpec::fixed(beta0)}};
}

}  // namespace

TEST(Dthp, KernelStatisticMatchesDirectSum) {
  const double population = 1000.0;
  const DthpParams params{0.3, 0.25, 0.0, 0.0};
  const DthpModel model(population, dthp_initial(2.0, 1.4));
  RngStream rng(1);
  auto state = model.sample_initial(params, rng);
  const std::vector<double> ys{2.0, 4, 0, 7, 3, 11, 5, 0, 9};  // first entry is lambda_h(0)
  std::vector<double> seen{ys[0]};
  for (std::size_t t = 1; t < ys.size(); ++t) {
    model.propagate(state, params, rng);
    double direct = 0.0;
    double cum = 0.0;
    for (std::size_t s = 0; s < seen.size(); ++s) {
      direct += seen[s] * std::pow(1.0 - params.omega, static_cast<double>(seen.size() - 1 - s));
      cum += seen[s];
    }
    EXPECT_NEAR(state.kernel_stat, direct, 1e-12);
    const double expected = (1.0 - cum / population) * (params.mu + 1.4 * params.omega * direct);
    EXPECT_NEAR(state.lambda_h, expected, 1e-12);
    EXPECT_DOUBLE_EQ(state.r_t, 1.4);
    model.absorb(state, static_cast<std::int64_t>(ys[t]), params, rng);
    seen.push_back(ys[t]);
  }
}

TEST(Dthp, DepletionClampsAtZero) {
  DthpState s;
  s.kernel_stat = 10.0;
  s.cum_cases = 150.0;
  s.r_t = 2.0;
  EXPECT_EQ(dthp_intensity(s, DthpParams{1.0, 0.5, 0.0, 0.0}, 100.0), 0.0);
}

TEST(Dthp, MissingObservationFeedsAModelDraw) {
  const DthpModel model(1e6, dthp_initial(0.0, 1.0));
  const DthpParams params{0.0, 0.5, 0.0, 0.2};
  RngStream rng(4);
  double sum = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    DthpState s;
    s.lambda_h = 6.0;
    model.absorb(s, std::nullopt, params, rng);
    sum += s.pending_count;
  }
  EXPECT_NEAR(sum / n, 6.0, 5.0 * std::sqrt((6.0 + 0.2 * 36.0) / n));
}

TEST(Dthp, RandomWalkOnlyWhenNuPositive) {
  const DthpModel model(1e6, dthp_initial(1.0, 1.5));
  RngStream a(5);
  auto s = model.sample_initial(DthpParams{}, a);
  auto untouched = a;
  model.propagate(s, DthpParams{0.0, 0.3, 0.0, 0.1}, a);
  EXPECT_EQ(a(), untouched());
  EXPECT_EQ(s.r_t, 1.5);
  model.propagate(s, DthpParams{0.0, 0.3, 0.1, 0.1}, a);
  EXPECT_NE(s.r_t, 1.5);
}

TEST(Seir, ConservesPopulation) {
  const SeirModel model(50000, seir_initial(3, 10, 0.4));
  const SeirParams params{0.5, 1.0 / 6.0, 0.1, 0.05};
  RngStream rng(11);
  auto s = model.sample_initial(params, rng);
  EXPECT_EQ(s.s, 50000 - 13);
  for (int t = 0; t < 200; ++t) {
    model.propagate(s, params, rng);
    ASSERT_EQ(s.population(), 50000);
    ASSERT_GE(s.s, 0);
    ASSERT_GE(s.e, 0);
    ASSERT_GE(s.i, 0);
    ASSERT_GE(s.r, 0);
    ASSERT_NEAR(s.r_t, s.beta / params.gamma, 1e-12);
  }
}

TEST(Seir, ExtinctEpidemicStaysExtinct) {
  const SeirModel model(1000, seir_initial(0, 0, 0.5));
  const SeirParams params{0.5, 0.2, 0.1, 0.05};
  RngStream rng(2);
  auto s = model.sample_initial(params, rng);
  for (int t = 0; t < 20; ++t) {
    model.propagate(s, params, rng);
    EXPECT_EQ(model.incidence(s), 0.0);
  }
  EXPECT_EQ(s.s, 1000);
}

TEST(Seir, FlowMeansMatchBinomialProbabilities) {
  SeirState s;
  s.s = 10000;
  s.e = 400;
  s.i = 600;
  s.r = 0;
  s.beta = 0.5;
  const SeirParams params{0.5, 0.2, 0.0, 0.0};
  RngStream rng(3);
  const int n = 20000;
  double ei = 0.0;
  double se = 0.0;
  for (int k = 0; k < n; ++k) {
    const auto next = seir_step(s, params, rng);
    ei += static_cast<double>(next.lambda_ei);
    se += static_cast<double>(s.s - next.s);
  }
  const double p_ei = 1.0 - std::exp(-0.5);
  const double p_se = 1.0 - std::exp(-0.5 * 600.0 / 11000.0);
  EXPECT_NEAR(ei / n, 400 * p_ei, 5.0 * std::sqrt(400 * p_ei * (1 - p_ei) / n));
  EXPECT_NEAR(se / n, 10000 * p_se, 5.0 * std::sqrt(10000 * p_se * (1 - p_se) / n));
}

TEST(Seirs, ConservesPopulationWithTurnover) {
  const SeirsModel model(20000, seir_initial(5, 20, 0.6));
  const SeirsParams params{0.5, 0.2, 0.1, 0.05, 0.05, 0.01};
  RngStream rng(12);
  auto s = model.sample_initial(params, rng);
  for (int t = 0; t < 300; ++t) {
    model.propagate(s, params, rng);
    ASSERT_EQ(s.population(), 20000);
    ASSERT_GE(s.e, 0);
    ASSERT_GE(s.i, 0);
    ASSERT_GE(s.r, 0);
  }
}

TEST(Seirs, ReducesToSeirWithoutWaningOrTurnover) {
  const SeirState start{9900, 30, 60, 10, 0, 0.45, 0.0};
  const SeirParams base{0.5, 0.2, 0.1, 0.05};
  const SeirsParams full{0.5, 0.2, 0.1, 0.05, 0.0, 0.0};
  RngStream a(99), b(99);
  auto x = start, y = start;
  for (int t = 0; t < 50; ++t) {
    x = seir_step(x, base, a);
    y = seirs_step(y, full, b);
    ASSERT_EQ(x.s, y.s);
    ASSERT_EQ(x.e, y.e);
    ASSERT_EQ(x.i, y.i);
    ASSERT_EQ(x.r, y.r);
    ASSERT_EQ(x.beta, y.beta);
  }
}

TEST(Seir, InitialStateRejectsOversizedCompartments) {
  const SeirModel model(10, seir_initial(6, 6, 0.3));
  RngStream rng(1);
  EXPECT_THROW((void)model.sample_initial(SeirParams{}, rng), NumericError);
}

TEST(ParameterLayout, MissingPriorNamesTheParameter) {
  PriorMap priors{{"sigma", PriorSpec::fixed(0.5)}, {"gamma", PriorSpec::uniform(0.1, 0.3)},
                  {"phi2", PriorSpec::fixed(0.0)}};
  try {
    ParameterLayout layout(SeirModel::kParameterNames, priors, "seir");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'nu2'"), std::string::npos) << e.what();
  }
}

TEST(ParameterLayout, UnknownParameterIsRejected) {
  PriorMap priors{{"sigma", PriorSpec::fixed(0.5)}, {"gamma", PriorSpec::fixed(0.2)},
                  {"nu2", PriorSpec::fixed(0.1)},   {"phi2", PriorSpec::fixed(0.0)},
                  {"delta", PriorSpec::fixed(1.0)}};
  EXPECT_THROW(ParameterLayout(SeirModel::kParameterNames, priors, "seir"), ConfigError);
}

TEST(ParameterLayout, ExpandsFreeEntriesAroundFixedOnes) {
  PriorMap priors{{"mu", PriorSpec::fixed(0.0)}, {"omega", PriorSpec::uniform(0.0, 1.0)},
                  {"nu1", PriorSpec::fixed(0.1)}, {"phi1", PriorSpec::uniform(0.0, 0.2)}};
  const ParameterLayout layout(DthpModel::kParameterNames, priors, "dthp");
  EXPECT_EQ(layout.free_size(), 2u);
  EXPECT_EQ(layout.free_names(), (std::vector<std::string>{"omega", "phi1"}));
  const std::vector<double> free{0.3, 0.05};
  EXPECT_EQ(layout.expand(free), (std::vector<double>{0.0, 0.3, 0.1, 0.05}));
  EXPECT_NEAR(layout.log_prior(free), std::log(1.0) + std::log(5.0), 1e-12);
  const std::vector<double> off{1.3, 0.05};
  EXPECT_EQ(layout.log_prior(off), kNegInf);
}
