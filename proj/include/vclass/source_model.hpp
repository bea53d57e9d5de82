#pragma once

#include <optional>

#include "vclass/gaussian_state.hpp"

namespace vclass {

inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s

/// Below-threshold optical parametric amplifier seen through a lossy
/// detection chain. Powers in milliwatts, lengths in meters.
struct SourceParams {
  double eta = 1.0;              // detection efficiency
  double gamma = 1.0;            // cavity escape efficiency
  double pump_mw = 0.0;
  double p_th_mw = 445.0;
  double t_coupler = 0.1;        // output coupler transmission T
  double intracavity_loss = 0.005;  // L
  double roundtrip_m = 0.0798;
  double freq_hz = 5e6;

  double eta_gamma() const { return eta * gamma; }
  /// Cavity decay rate (T+L) c / l in 1/s.
  double decay_rate() const;
  /// Normalized sideband frequency 2 pi f / kappa.
  double k_factor() const;

  /// Throws std::invalid_argument on out-of-range fields and
  /// AboveThresholdError when pump_mw >= p_th_mw.
  void validate() const;
};

struct VariancePair {
  double v_sqz;
  double v_asqz;
};

enum class NoiseLocation { AtSource, AtDetectors };

struct ExcessNoise {
  NoiseLocation location = NoiseLocation::AtDetectors;
  Quadrature quadrature = Quadrature::P;
  double eps = 0.0;
};

/// Detected squeezed / anti-squeezed variances:
///   V = 1 -/+ eta*gamma * 4 sqrt(P/Pth) / ((1 +/- sqrt(P/Pth))^2 + 4 K^2)
VariancePair squeezer_variances(const SourceParams& params);

/// Same model with eta = gamma = 1.
VariancePair pure_state_variances(const SourceParams& params);

/**
 * Squeezed mode (squeezed along X) mixed with vacuum on a balanced beam
 * splitter, followed by per-arm loss and optional excess noise.
 *
 * Mode 0 is Alice, mode 1 is Bob. Missing losses default to 1 - eta*gamma.
 * Source-located noise is added to the squeezed mode before the beam
 * splitter; detector-located noise is added independently to both arms.
 */
GaussianState build_vclass_state(const SourceParams& params,
                                 std::optional<double> mu_a = std::nullopt,
                                 std::optional<double> mu_b = std::nullopt,
                                 std::optional<ExcessNoise> noise = std::nullopt);

/// Same pipeline starting from explicit pure-source variances.
GaussianState build_vclass_state(const VariancePair& source, double mu_a,
                                 double mu_b,
                                 std::optional<ExcessNoise> noise = std::nullopt);

}  // namespace vclass
