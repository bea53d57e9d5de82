#include "vclass/source_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "vclass/errors.hpp"

namespace vclass {

namespace {

VariancePair evaluate(const SourceParams& params, double efficiency) {
  params.validate();
  const double x = std::sqrt(params.pump_mw / params.p_th_mw);
  const double k2 = 4.0 * params.k_factor() * params.k_factor();
  const double sqz = 4.0 * x / ((1.0 + x) * (1.0 + x) + k2);
  const double asqz = 4.0 * x / ((1.0 - x) * (1.0 - x) + k2);
  return {1.0 - efficiency * sqz, 1.0 + efficiency * asqz};
}

}  // namespace

double SourceParams::decay_rate() const {
  return (t_coupler + intracavity_loss) * kSpeedOfLight / roundtrip_m;
}

double SourceParams::k_factor() const {
  return 2.0 * std::numbers::pi * freq_hz / decay_rate();
}

void SourceParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(eta > 0.0 && eta <= 1.0, "eta must lie in (0, 1]");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
  require(pump_mw >= 0.0, "pump power must be non-negative");
  require(p_th_mw > 0.0, "threshold power must be positive");
  require(t_coupler > 0.0 && t_coupler < 1.0, "coupler transmission must lie in (0, 1)");
  require(intracavity_loss >= 0.0 && intracavity_loss < 1.0,
          "intracavity loss must lie in [0, 1)");
  require(roundtrip_m > 0.0, "round-trip length must be positive");
  require(freq_hz > 0.0, "sideband frequency must be positive");
  if (!(pump_mw < p_th_mw)) {
    throw AboveThresholdError(fmt::format(
        "pump {} mW is not below threshold {} mW", pump_mw, p_th_mw));
  }
}

VariancePair squeezer_variances(const SourceParams& params) {
  return evaluate(params, params.eta_gamma());
}

VariancePair pure_state_variances(const SourceParams& params) {
  return evaluate(params, 1.0);
}

GaussianState build_vclass_state(const VariancePair& source, double mu_a,
                                 double mu_b, std::optional<ExcessNoise> noise) {
  GaussianState squeezed = squeezed_state(source.v_sqz, source.v_asqz, 0.0);
  if (noise && noise->location == NoiseLocation::AtSource) {
    squeezed = add_classical_noise(squeezed, 0, noise->quadrature, noise->eps);
  }
  GaussianState state = beam_splitter(tensor(squeezed, vacuum(1)), 0, 1, 0.5);
  state = loss_channel(state, 0, mu_a);
  state = loss_channel(state, 1, mu_b);
  if (noise && noise->location == NoiseLocation::AtDetectors) {
    state = add_classical_noise(state, 0, noise->quadrature, noise->eps);
    state = add_classical_noise(state, 1, noise->quadrature, noise->eps);
  }
  return state;
}

GaussianState build_vclass_state(const SourceParams& params,
                                 std::optional<double> mu_a,
                                 std::optional<double> mu_b,
                                 std::optional<ExcessNoise> noise) {
  const double default_loss = 1.0 - params.eta_gamma();
  return build_vclass_state(pure_state_variances(params),
                            mu_a.value_or(default_loss),
                            mu_b.value_or(default_loss), noise);
}

}  // namespace vclass
