#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vclass/source_model.hpp"

namespace vclass {

struct VarianceRow {
  double pump_mw;
  double sqz_db;
  double asqz_db;
  double weight = 1.0;
};

struct VarianceDataset {
  std::vector<VarianceRow> rows;

  /// Pumps strictly positive and distinct, dB values finite, weights > 0.
  void validate() const;
};

/// Parses `pump_mw,sqz_db,asqz_db[,weight]`. Errors carry the line number.
VarianceDataset read_variance_csv(const std::filesystem::path& path);
VarianceDataset parse_variance_csv(const std::string& text);

/// Quantities held fixed during a squeezer fit.
struct FitFixed {
  double roundtrip_m = 0.0798;
  double freq_hz = 5e6;
};

/// Only the product eta*gamma is identifiable from variance data.
struct FitResult {
  double eta_gamma = 0.0;
  double p_th_mw = 0.0;
  double t_plus_l = 0.0;
  double residual_rms_db = 0.0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  /// Winning start: objective at the start and after each accepted step.
  std::vector<double> objective_trace;
};

/// Squeezer-model prediction in dB for a candidate parameter set.
std::pair<double, double> squeezer_model_db(double pump_mw, double eta_gamma,
                                            double p_th_mw, double t_plus_l,
                                            const FitFixed& fixed);

/**
 * Weighted least squares of the squeezer model in dB over both branches.
 *
 * Bounds are enforced by reparameterization: eta*gamma and T+L through a
 * logistic map onto (0, 1), P_th through max_pump * (1 + exp(u)) so every
 * iterate stays above threshold. Levenberg-Marquardt (Ceres) runs from the
 * initial guess and from an 8-point start grid; the lowest objective wins
 * (ties: lowest start index).
 */
FitResult fit_squeezer_model(const VarianceDataset& data, const FitFixed& fixed,
                             std::optional<FitResult> init = std::nullopt);

/// Conditional P variance (A|B) of the v-class state for a given noise level.
double condvar_p_with_noise(const SourceParams& params, double mu,
                            NoiseLocation location, Quadrature quadrature,
                            double eps);

/**
 * Smallest eps >= 0 such that the A|B conditional variance of the noisy
 * quadrature equals `target_condvar`, solved by bisection to 1e-14 relative.
 * Throws InfeasibleTargetError when the target is below the noiseless value
 * or out of reach for eps up to 1e4 vacuum units.
 */
double fit_excess_noise(const SourceParams& params, double mu,
                        double target_condvar,
                        NoiseLocation location = NoiseLocation::AtDetectors,
                        Quadrature quadrature = Quadrature::P);

}  // namespace vclass
