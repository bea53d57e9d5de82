#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "vclass/criteria.hpp"
#include "vclass/errors.hpp"
#include "vclass/fitting.hpp"

namespace vclass {
namespace {

SourceParams operating_params() {
  SourceParams p;
  p.eta = 0.91;
  p.pump_mw = 225.0;
  p.p_th_mw = 445.0;
  p.t_coupler = 0.1;
  p.intracavity_loss = 0.005;
  return p;
}

VarianceDataset synthetic(double eg, double p_th, double tl, double noise_db,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, noise_db);
  VarianceDataset d;
  for (double pump = 25.0; pump <= 375.0; pump += 25.0) {
    const auto [s, a] = squeezer_model_db(pump, eg, p_th, tl, FitFixed{});
    d.rows.push_back({pump, s + (noise_db > 0 ? n(rng) : 0.0),
                      a + (noise_db > 0 ? n(rng) : 0.0)});
  }
  return d;
}

TEST(SqueezerModelDb, MatchesSourceModel) {
  const auto [s, a] = squeezer_model_db(325.0, 0.91, 445.0, 0.105, FitFixed{});
  EXPECT_NEAR(s, to_db(0.102215958057659), 1e-12);
  EXPECT_NEAR(a, to_db(67.8783794370761), 1e-10);
}

TEST(FitSqueezer, NoiselessRecovery) {
  const auto r = fit_squeezer_model(synthetic(0.91, 445.0, 0.105, 0.0, 0), FitFixed{});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.eta_gamma, 0.91, 0.91 * 1e-6);
  EXPECT_NEAR(r.p_th_mw, 445.0, 445.0 * 1e-6);
  EXPECT_NEAR(r.t_plus_l, 0.105, 0.105 * 1e-6);
  EXPECT_LT(r.residual_rms_db, 1e-8);
}

TEST(FitSqueezer, NoiselessRecoveryAwayFromDefaults) {
  const auto r = fit_squeezer_model(synthetic(0.62, 900.0, 0.04, 0.0, 0), FitFixed{});
  EXPECT_NEAR(r.eta_gamma, 0.62, 0.62 * 1e-6);
  EXPECT_NEAR(r.p_th_mw, 900.0, 900.0 * 1e-6);
  EXPECT_NEAR(r.t_plus_l, 0.04, 0.04 * 1e-6);
}

TEST(FitSqueezer, NoisyRoundTrip) {
  int good = 0;
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto r = fit_squeezer_model(synthetic(0.91, 445.0, 0.105, 0.1, 1000 + seed),
                                      FitFixed{});
    good += std::abs(r.eta_gamma - 0.91) <= 0.01 && std::abs(r.p_th_mw / 445.0 - 1.0) <= 0.05;
  }
  EXPECT_GE(good, 18);
}

TEST(FitSqueezer, ObjectiveTraceNonIncreasing) {
  const auto r = fit_squeezer_model(synthetic(0.91, 445.0, 0.105, 0.1, 5), FitFixed{});
  ASSERT_FALSE(r.objective_trace.empty());
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
    EXPECT_LE(r.objective_trace[i], r.objective_trace[i - 1]);
  }
  EXPECT_DOUBLE_EQ(r.objective_trace.back(), r.objective);
}

TEST(FitSqueezer, QuotedPointDataset) {
  VarianceDataset d;
  // The quoted 325 mW observation plus model points rounded to 0.1 dB.
  d.rows = {{50.0, -4.9, 5.6},   {100.0, -6.7, 8.3},  {175.0, -8.4, 11.7},
            {225.0, -9.1, 13.9}, {275.0, -9.6, 16.2}, {325.0, -9.9, 18.4}};
  const auto r = fit_squeezer_model(d, FitFixed{});
  EXPECT_LE(r.residual_rms_db, 0.2);
  EXPECT_NEAR(r.eta_gamma, 0.91, 0.03);
  EXPECT_NEAR(r.p_th_mw, 445.0, 0.1 * 445.0);
}

TEST(FitSqueezer, Deterministic) {
  const auto d = synthetic(0.91, 445.0, 0.105, 0.1, 9);
  const auto a = fit_squeezer_model(d, FitFixed{});
  const auto b = fit_squeezer_model(d, FitFixed{});
  EXPECT_EQ(a.eta_gamma, b.eta_gamma);
  EXPECT_EQ(a.p_th_mw, b.p_th_mw);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(FitSqueezer, InvalidDatasets) {
  VarianceDataset two;
  two.rows = {{100.0, -5.0, 7.0}, {200.0, -7.0, 11.0}};
  EXPECT_THROW(fit_squeezer_model(two, FitFixed{}), std::invalid_argument);
  VarianceDataset dup;
  dup.rows = {{100.0, -5.0, 7.0}, {100.0, -5.1, 7.1}, {200.0, -7.0, 11.0}};
  EXPECT_THROW(fit_squeezer_model(dup, FitFixed{}), std::invalid_argument);
  VarianceDataset bad_weight;
  bad_weight.rows = {{100.0, -5.0, 7.0, 0.0}, {150.0, -6.0, 9.0}, {200.0, -7.0, 11.0}};
  EXPECT_THROW(bad_weight.validate(), std::invalid_argument);
}

TEST(VarianceCsv, ParsesWithCommentsAndWeights) {
  const auto d = parse_variance_csv(
      "# measured\npump_mw,sqz_db,asqz_db,weight\n100,-5.1,7.0,2\n\n200,-7.5,11.2,1\n");
  ASSERT_EQ(d.rows.size(), 2u);
  EXPECT_DOUBLE_EQ(d.rows[0].weight, 2.0);
  EXPECT_DOUBLE_EQ(d.rows[1].asqz_db, 11.2);
  const auto plain = parse_variance_csv("pump_mw,sqz_db,asqz_db\n50,-3,3.9\n");
  EXPECT_DOUBLE_EQ(plain.rows[0].weight, 1.0);
}

TEST(VarianceCsv, ErrorsCarryLineNumbers) {
  auto message = [](const std::string& text) {
    try {
      parse_variance_csv(text);
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("pump,sqz,asqz\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("pump_mw,sqz_db,asqz_db\n100,-5,7\n200,abc,9\n").find("line 3"),
            std::string::npos);
  EXPECT_NE(message("pump_mw,sqz_db,asqz_db\n100,-5\n").find("line 2"), std::string::npos);
}

TEST(FitExcessNoise, BaselineTargetGivesZero) {
  const auto p = operating_params();
  const double base = condvar_p_with_noise(p, 0.09, NoiseLocation::AtDetectors, Quadrature::P, 0.0);
  EXPECT_DOUBLE_EQ(fit_excess_noise(p, 0.09, base), 0.0);
}

TEST(FitExcessNoise, InversionAndMonotonicity) {
  const auto p = operating_params();
  double last = -1.0;
  for (double target : {2.0, 2.1, 2.3, 2.6, 3.0, 5.0}) {
    const double eps = fit_excess_noise(p, 0.09, target);
    EXPECT_GT(eps, last);
    last = eps;
    EXPECT_NEAR(condvar_p_with_noise(p, 0.09, NoiseLocation::AtDetectors, Quadrature::P, eps),
                target, 1e-9);
  }
}

TEST(FitExcessNoise, SolvesQuotedProductLeavingAmplitudeUntouched) {
  const auto p = operating_params();
  const auto clean = epr_product(extract_two_mode_stats(build_vclass_state(p), 0, 1));
  const double eps = fit_excess_noise(p, 0.09, 0.502 / clean.condvar_x_ab);
  EXPECT_NEAR(eps, 0.196000886861031, 1e-9);
  const auto noisy = epr_product(extract_two_mode_stats(
      build_vclass_state(p, std::nullopt, std::nullopt,
                         ExcessNoise{NoiseLocation::AtDetectors, Quadrature::P, eps}),
      0, 1));
  EXPECT_NEAR(noisy.product_ab, 0.502, 1e-9);
  EXPECT_NEAR(noisy.condvar_x_ab, clean.condvar_x_ab, 1e-12);
}

TEST(FitExcessNoise, InfeasibleTargets) {
  const auto p = operating_params();
  EXPECT_THROW(fit_excess_noise(p, 0.09, 1.0), InfeasibleTargetError);
  // Noise injected before the splitter saturates: Var(P_A | P_B) stays below 2.
  EXPECT_THROW(fit_excess_noise(p, 0.09, 2.5, NoiseLocation::AtSource), InfeasibleTargetError);
}

}  // namespace
}  // namespace vclass
