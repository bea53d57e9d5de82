#pragma once

#include <span>
#include <vector>

#include "vclass/gaussian_state.hpp"

namespace vclass {

/// A|B conditions Alice's outcome on Bob's; B|A the reverse.
enum class Direction { AGivenB, BGivenA };

struct ConditionalVariance {
  double value;
  double gain;  // minimizing g in Var(a - g b)
};

/// Reid EPR quantities in both inference directions.
struct EprResult {
  double condvar_x_ab, condvar_p_ab, condvar_x_ba, condvar_p_ba;
  double gain_x_ab, gain_p_ab, gain_x_ba, gain_p_ba;
  double product_ab, product_ba;

  bool epr_entangled_ab() const { return product_ab < 1.0; }
  bool epr_entangled_ba() const { return product_ba < 1.0; }
  double product_mean() const { return 0.5 * (product_ab + product_ba); }
};

/// min_g Var(Q_A - g Q_B) with g* = Cov/Var_B. A vanishing conditioning
/// variance yields (Var_A, 0).
ConditionalVariance conditional_variance(const TwoModeStats& stats,
                                         Quadrature q, Direction dir);

EprResult epr_product(const TwoModeStats& stats);

/// Reid product for a pure squeezed mode mixed with vacuum: 4/(2 + Va + Vs).
double epr_pure_vclass(double v_sqz, double v_asqz);

/// (1 - Vs)^2 (1 - mu) (1/3 - mu); positive iff the Reid product under
/// symmetric loss mu stays below 1.
double vclass_loss_margin(double v_sqz, double mu);

struct DuanResult {
  double value;
  double bound = 4.0;
  bool inseparable() const { return value < bound; }
};

/// min over s, s' in {+1,-1} of Var(X_A + s X_B) + Var(P_A + s' P_B).
DuanResult duan_inseparability(const TwoModeStats& stats);

/// Smallest symplectic eigenvalue of the partially transposed block.
double pt_min_symplectic_eigenvalue(const TwoModeStats& stats);

/// Entanglement of formation (bits) of a symmetric two-mode Gaussian state.
/// Throws UnsupportedStateError if the A and B marginals differ by more than
/// 1e-6.
double eof_symmetric(const TwoModeStats& stats);

/// Von Neumann entropy (bits) of a single mode with symplectic eigenvalue nu.
double mode_entropy(double nu);

struct PhaseInvarianceReport {
  std::vector<double> thetas;
  std::vector<EprResult> results;
  double max_deviation = 0.0;  // over both direction products, vs theta = 0
};

/// Rotates both modes by the same angle and recomputes the Reid products.
PhaseInvarianceReport phase_invariance_check(const GaussianState& state,
                                             std::span<const double> thetas);

}  // namespace vclass
