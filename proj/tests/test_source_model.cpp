#include <cmath>

#include <gtest/gtest.h>

#include "vclass/errors.hpp"
#include "vclass/source_model.hpp"

namespace vclass {
namespace {

// Operating parameters of the fitted source: eta*gamma = 0.91, P_th = 445 mW,
// T + L = 0.105, l = 79.8 mm, f = 5 MHz.
SourceParams fitted(double pump_mw) {
  SourceParams p;
  p.eta = 0.91;
  p.gamma = 1.0;
  p.pump_mw = pump_mw;
  p.p_th_mw = 445.0;
  p.t_coupler = 0.1;
  p.intracavity_loss = 0.005;
  p.roundtrip_m = 0.0798;
  p.freq_hz = 5e6;
  return p;
}

TEST(SourceParams, DerivedRates) {
  const auto p = fitted(0.0);
  EXPECT_NEAR(p.decay_rate(), 0.105 * 2.99792458e8 / 0.0798, 1e-3);
  // mpmath: 2 pi f / kappa
  EXPECT_NEAR(p.k_factor(), 0.0796421108341639, 1e-15);
}

TEST(SqueezerVariances, NoPumpIsVacuum) {
  const auto v = squeezer_variances(fitted(0.0));
  EXPECT_DOUBLE_EQ(v.v_sqz, 1.0);
  EXPECT_DOUBLE_EQ(v.v_asqz, 1.0);
}

TEST(SqueezerVariances, MeasuredPoint325) {
  const auto v = squeezer_variances(fitted(325.0));
  // Frozen from an independent 30-digit evaluation of the model.
  EXPECT_NEAR(v.v_sqz, 0.102215958057659, 1e-13);
  EXPECT_NEAR(v.v_asqz, 67.8783794370761, 1e-10);
  EXPECT_NEAR(to_db(v.v_sqz), -9.9, 0.1);
  EXPECT_NEAR(to_db(v.v_asqz), 18.4, 0.2);
}

TEST(SqueezerVariances, OperatingPoint225) {
  const auto v = squeezer_variances(fitted(225.0));
  EXPECT_NEAR(v.v_sqz, 0.123542856773221, 1e-13);
  EXPECT_NEAR(v.v_asqz, 24.7778196928390, 1e-10);
}

TEST(PureStateVariances, OperatingPoint225) {
  const auto v = pure_state_variances(fitted(225.0));
  EXPECT_NEAR(v.v_sqz, 0.0368602821683745, 1e-13);
  EXPECT_NEAR(v.v_asqz, 27.1294721899330, 1e-10);
  EXPECT_NEAR(pure_state_variances(fitted(0.0)).v_sqz, 1.0, 0.0);
}

TEST(PureStateVariances, MinimumUncertaintyAtEveryPump) {
  // (1 - 4x/D+)(1 + 4x/D-) = 1 identically in K, so the unit-efficiency
  // model describes a pure state even at finite sideband frequency.
  for (double f : {1e5, 5e6, 5e7, 2e8}) {
    for (double pump = 5.0; pump < 445.0; pump += 20.0) {
      auto p = fitted(pump);
      p.freq_hz = f;
      const auto v = pure_state_variances(p);
      EXPECT_NEAR(v.v_sqz * v.v_asqz, 1.0, 1e-12) << pump << " mW, " << f << " Hz";
    }
  }
}

TEST(PureStateVariances, LossReproducesDetectedModel) {
  for (double pump = 0.0; pump < 445.0; pump += 15.0) {
    const auto pure = pure_state_variances(fitted(pump));
    const auto det = squeezer_variances(fitted(pump));
    const auto lossy =
        loss_channel(squeezed_state(pure.v_sqz, pure.v_asqz, 0.0), 0, 0.09);
    EXPECT_NEAR(lossy.cov()(0, 0), det.v_sqz, 1e-12);
    EXPECT_NEAR(lossy.cov()(1, 1), det.v_asqz, 1e-12 * det.v_asqz);
  }
}

TEST(SqueezerVariances, AboveThresholdIsError) {
  EXPECT_THROW(squeezer_variances(fitted(445.0)), AboveThresholdError);
  EXPECT_THROW(squeezer_variances(fitted(500.0)), AboveThresholdError);
}

TEST(SqueezerVariances, InvalidParams) {
  auto p = fitted(100.0);
  p.eta = 0.0;
  EXPECT_THROW(squeezer_variances(p), std::invalid_argument);
  p = fitted(100.0);
  p.t_coupler = 1.0;
  EXPECT_THROW(squeezer_variances(p), std::invalid_argument);
  p = fitted(-1.0);
  EXPECT_THROW(squeezer_variances(p), std::invalid_argument);
}

TEST(SqueezerVariances, MonotoneInPump) {
  double last_sqz = 1.0 + 1e-15, last_asqz = 1.0 - 1e-15;
  for (double pump = 0.0; pump < 445.0; pump += 4.0) {
    const auto v = squeezer_variances(fitted(pump));
    EXPECT_LT(v.v_sqz, last_sqz);
    EXPECT_GT(v.v_asqz, last_asqz);
    last_sqz = v.v_sqz;
    last_asqz = v.v_asqz;
  }
}

TEST(SqueezerVariances, FrequencyRollOff) {
  double last = 2.0;
  for (double f = 1e5; f < 1e9; f *= 1.7) {
    auto p = fitted(225.0);
    p.freq_hz = f;
    const double depth = 1.0 - squeezer_variances(p).v_sqz;
    EXPECT_LT(depth, last);
    last = depth;
  }
}

TEST(SqueezerVariances, LinearInEfficiency) {
  const auto pure = pure_state_variances(fitted(300.0));
  for (double eg : {0.1, 0.5, 0.77, 1.0}) {
    auto p = fitted(300.0);
    p.eta = eg;
    const auto v = squeezer_variances(p);
    EXPECT_NEAR(1.0 - v.v_sqz, eg * (1.0 - pure.v_sqz), 1e-14);
    EXPECT_NEAR(v.v_asqz - 1.0, eg * (pure.v_asqz - 1.0), 1e-12);
  }
  // Only the product enters.
  auto a = fitted(300.0);
  a.eta = 0.7;
  a.gamma = 0.9;
  auto b = fitted(300.0);
  b.eta = 0.9;
  b.gamma = 0.7;
  EXPECT_DOUBLE_EQ(squeezer_variances(a).v_sqz, squeezer_variances(b).v_sqz);
}

TEST(BuildVClass, Vacuum) {
  auto p = fitted(0.0);
  const auto s = build_vclass_state(p, 0.0, 0.0);
  EXPECT_TRUE(s.cov().isApprox(Eigen::MatrixXd::Identity(4, 4), 1e-14));
  const auto lossy = build_vclass_state(fitted(300.0), 1.0, 1.0);
  EXPECT_TRUE(lossy.cov().isApprox(Eigen::MatrixXd::Identity(4, 4), 1e-14));
}

TEST(BuildVClass, OperatingPointBlock) {
  const auto s = build_vclass_state(fitted(225.0));  // losses default to 0.09
  const double vs = 0.91 * 0.0368602821683745 + 0.09;
  EXPECT_NEAR(s.cov()(0, 0), (vs + 1.0) / 2.0, 1e-13);
  EXPECT_NEAR(s.cov()(0, 0), 0.562, 1e-3);
  EXPECT_NEAR(s.cov()(0, 2), (vs - 1.0) / 2.0, 1e-13);
  EXPECT_NEAR(s.cov()(0, 2), -0.438, 1e-3);
}

TEST(BuildVClass, SymmetricLossEqualsSourceLoss) {
  for (double pump : {50.0, 225.0, 400.0}) {
    for (double mu : {0.0, 0.09, 0.4, 0.9}) {
      const auto pure = pure_state_variances(fitted(pump));
      const auto at_source = beam_splitter(
          tensor(loss_channel(squeezed_state(pure.v_sqz, pure.v_asqz, 0.0), 0, mu),
                 vacuum(1)),
          0, 1, 0.5);
      const auto built = build_vclass_state(fitted(pump), mu, mu);
      EXPECT_LT((built.cov() - at_source.cov()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(BuildVClass, ExcessNoisePlacement) {
  const auto p = fitted(225.0);
  const auto clean = build_vclass_state(p);
  const auto det = build_vclass_state(
      p, std::nullopt, std::nullopt,
      ExcessNoise{NoiseLocation::AtDetectors, Quadrature::P, 0.2});
  Eigen::MatrixXd diff = det.cov() - clean.cov();
  EXPECT_NEAR(diff(1, 1), 0.2, 1e-12);
  EXPECT_NEAR(diff(3, 3), 0.2, 1e-12);
  diff(1, 1) = diff(3, 3) = 0.0;
  EXPECT_LT(diff.cwiseAbs().maxCoeff(), 1e-14);

  const auto src = build_vclass_state(
      p, std::nullopt, std::nullopt,
      ExcessNoise{NoiseLocation::AtSource, Quadrature::P, 0.2});
  // Source noise passes the splitter and the loss: correlated, scaled by 0.91/2.
  EXPECT_NEAR(src.cov()(1, 1) - clean.cov()(1, 1), 0.91 * 0.1, 1e-12);
  EXPECT_NEAR(src.cov()(1, 3) - clean.cov()(1, 3), 0.91 * 0.1, 1e-12);
  EXPECT_NEAR(src.cov()(0, 0), clean.cov()(0, 0), 1e-14);
}

}  // namespace
}  // namespace vclass
