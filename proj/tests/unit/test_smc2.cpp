#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bma/parallel.hpp"
#include "bma/smc2.hpp"
#include "support/builders.hpp"

using namespace bma;
using namespace bma::testing;

namespace {

double poisson_log_pmf(double y, double lambda) { return y * std::log(lambda) - lambda - std::lgamma(y + 1.0); }

std::vector<Observation> counts(std::initializer_list<std::int64_t> ys) { return {ys.begin(), ys.end()}; }

}  // namespace

TEST(WeightedMoments, TwoPointExample) {
  const std::vector<std::vector<double>> pts{{0.0, 0.0}, {2.0, 2.0}};
  const std::vector<double> w{0.5, 0.5};
  const auto [mean, cov] = weighted_moments(pts, w);
  EXPECT_NEAR(mean[0], 1.0, 1e-15);
  EXPECT_NEAR(mean[1], 1.0, 1e-15);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(cov(i, j), 1.0, 1e-15);
}

TEST(WeightedMoments, UnnormalisedWeights) {
  const std::vector<std::vector<double>> pts{{1.0}, {4.0}};
  const std::vector<double> w{3.0, 1.0};
  const auto [mean, cov] = weighted_moments(pts, w);
  EXPECT_NEAR(mean[0], 1.75, 1e-15);
  EXPECT_NEAR(cov(0, 0), 0.75 * 0.75 * 0.75 + 0.25 * 2.25 * 2.25, 1e-14);
}

TEST(EvidenceTerm, WeightedAverageOfIncrements) {
  const std::vector<double> w{std::log(0.5), std::log(0.5)};
  const std::vector<double> inc{std::log(0.2), std::log(0.4)};
  EXPECT_NEAR(std::exp(weighted_evidence_term(w, inc)), 0.3, 1e-15);
}

TEST(ModelProbabilities, Examples) {
  const std::vector<double> equal{-3.0, -3.0};
  const auto a = posterior_model_probs(equal);
  EXPECT_NEAR(a[0], 0.5, 1e-15);
  EXPECT_NEAR(a[1], 0.5, 1e-15);

  const std::vector<double> ratio{std::log(0.3), std::log(0.1)};
  const auto b = posterior_model_probs(ratio);
  EXPECT_NEAR(b[0], 0.75, 1e-15);
  EXPECT_NEAR(b[1], 0.25, 1e-15);

  const std::vector<double> floored{kDefaultLogFloor, std::log(0.2)};
  const auto c = posterior_model_probs(floored);
  EXPECT_LT(c[0], 1e-290);
  EXPECT_NEAR(c[1], 1.0, 1e-15);

  const std::vector<double> windowed{std::log(0.3) + std::log(0.5), std::log(0.1) + std::log(0.5)};
  EXPECT_NEAR(posterior_model_probs(windowed)[0], 0.75, 1e-15);

  EXPECT_THROW(posterior_model_probs(std::vector<double>{}), NumericError);
  EXPECT_THROW(posterior_model_probs(std::vector<double>{kNegInf, kNegInf}), NumericError);
}

TEST(PmmhAcceptance, IdentityMoveAlwaysAccepted) {
  EXPECT_EQ(pmmh_log_acceptance(-12.5, -1.2, -12.5, -1.2, 0.7, 0.7), 0.0);
  EXPECT_EQ(pmmh_log_acceptance(0.0, kNegInf, -10.0, 0.0, 0.0, 0.0), kNegInf);
  EXPECT_NEAR(pmmh_log_acceptance(-10.0, -1.0, -11.0, -2.0, -0.5, -0.25), 2.0 - 0.25, 1e-15);
}

TEST(Smc2, DeterministicModelEvidenceIsPoissonWindow) {
  auto s = small_settings(8, 4);
  s.window = 3;
  auto f = deterministic_dthp(1e5, 2.0, 1.5, 0.2, 0.4, s, 1);
  f.initialize();
  const auto ys = counts({3, 4, 6, 5, 9, 8, 12});

  std::vector<double> history{2.0};
  std::vector<double> terms;
  for (std::size_t t = 0; t < ys.size(); ++t) {
    double excitation = 0.0, cum = 0.0;
    for (std::size_t k = 0; k < history.size(); ++k) {
      excitation += history[k] * std::pow(0.6, static_cast<double>(history.size() - 1 - k));
      cum += history[k];
    }
    const double lambda = (1.0 - cum / 1e5) * (0.2 + 1.5 * 0.4 * excitation);
    terms.push_back(poisson_log_pmf(static_cast<double>(*ys[t]), lambda));
    history.push_back(static_cast<double>(*ys[t]));

    const auto diag = f.step(std::span(ys).first(t + 1));
    EXPECT_NEAR(diag.log_evidence_term, terms.back(), 1e-9);
    double expected = 0.0;
    for (std::size_t k = terms.size() >= 3 ? terms.size() - 3 : 0; k < terms.size(); ++k) expected += terms[k];
    EXPECT_NEAR(f.log_evidence(), expected, 1e-9);
    EXPECT_LE(f.evidence_buffer().size(), 3u);
  }
}

TEST(Smc2, MissingObservationLeavesWeightsAndAddsNothing) {
  auto f = small_seir(5000, small_settings(), 3);
  f.initialize();
  std::vector<Observation> ys{4, 6};
  f.step(std::span(ys).first(1));
  f.step(std::span(ys).first(2));
  const auto before = f.theta_weights();
  ys.push_back(std::nullopt);
  const auto diag = f.step(ys);
  EXPECT_FALSE(diag.observed);
  EXPECT_EQ(diag.log_evidence_term, 0.0);
  EXPECT_FALSE(diag.rejuvenated);
  const auto after = f.theta_weights();
  for (std::size_t m = 0; m < before.size(); ++m) EXPECT_NEAR(after[m], before[m], 1e-14);
}

TEST(Smc2, RejuvenationRestoresFullEss) {
  auto s = small_settings(30, 16);
  s.ess_threshold = 1.0;
  auto f = small_seir(5000, s, 4);
  f.initialize();
  const auto ys = counts({3, 5, 8, 12, 15});
  bool any = false;
  for (std::size_t t = 0; t < ys.size(); ++t) {
    const auto diag = f.step(std::span(ys).first(t + 1));
    if (!diag.rejuvenated) continue;
    any = true;
    EXPECT_NEAR(diag.ess_after, 30.0, 1e-9);
    EXPECT_EQ(diag.proposals, 30u * s.pmmh_moves);
    EXPECT_LE(diag.accepted + diag.off_support, diag.proposals);
  }
  EXPECT_TRUE(any);
}

TEST(Smc2, OffSupportCandidatesAreRejected) {
  auto s = small_settings(20, 8);
  s.ess_threshold = 1.0;
  s.proposal_scale = 400.0;
  s.pmmh_moves = 4;
  auto f = small_seir(5000, s, 5);
  f.initialize();
  const auto ys = counts({3, 5, 8, 12});
  std::size_t off = 0;
  for (std::size_t t = 0; t < ys.size(); ++t) off += f.step(std::span(ys).first(t + 1)).off_support;
  EXPECT_GT(off, 0u);
  for (const auto& p : f.particles()) {
    EXPECT_GE(p.theta[0], 0.2);
    EXPECT_LE(p.theta[0], 0.7);
    EXPECT_TRUE(std::isfinite(p.log_prior));
  }
}

TEST(Smc2, StepOrderIsEnforced) {
  auto f = small_seir(5000, small_settings(), 6);
  f.initialize();
  const auto ys = counts({3, 5});
  EXPECT_THROW(f.step(ys), DataError);
}

TEST(Smc2, ThreadCountDoesNotChangeResults) {
  const auto ys = counts({3, 5, 8, 12, 15, 14, 18, 22});
  auto run = [&](int threads) {
    set_thread_count(threads);
    auto s = small_settings(24, 16);
    s.ess_threshold = 0.8;
    auto f = small_seir(5000, s, 7);
    f.initialize();
    std::vector<double> trace;
    for (std::size_t t = 0; t < ys.size(); ++t) {
      const auto d = f.step(std::span(ys).first(t + 1));
      trace.push_back(d.log_evidence_term);
      trace.push_back(static_cast<double>(d.accepted));
    }
    for (const auto& p : f.particles()) trace.insert(trace.end(), p.theta.begin(), p.theta.end());
    return trace;
  };
  const auto one = run(1);
  const auto four = run(4);
  set_thread_count(1);
  EXPECT_EQ(one, four);
}

TEST(Smc2, SettingsValidation) {
  Smc2Settings s;
  s.window = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s = Smc2Settings{};
  s.ess_threshold = 1.5;
  EXPECT_THROW(s.validate(), ConfigError);
}
