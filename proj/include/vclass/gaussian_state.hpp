#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Dense>

namespace vclass {

enum class Quadrature { X, P };

std::string to_string(Quadrature q);

/// Tolerance on the Heisenberg bound nu >= 1 for symplectic eigenvalues.
inline constexpr double kPhysicalityTol = 1e-9;

/**
 * Gaussian state of n optical modes in the covariance-matrix picture.
 *
 * Quadratures are interleaved (X1, P1, X2, P2, ...) and normalized so that
 * the vacuum has unit variance in every quadrature. The covariance matrix is
 * symmetrized on construction and must satisfy the Heisenberg bound: every
 * symplectic eigenvalue >= 1 - kPhysicalityTol.
 */
class GaussianState {
 public:
  GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  std::size_t n_modes() const { return n_modes_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }

  double variance(std::size_t mode, Quadrature q) const;

 private:
  std::size_t n_modes_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

/// Covariance of (X_A, P_A, X_B, P_B) for a chosen pair of modes.
class TwoModeStats {
 public:
  explicit TwoModeStats(const Eigen::Matrix4d& block);

  const Eigen::Matrix4d& block() const { return block_; }

  double var(std::size_t idx) const { return block_(idx, idx); }
  double cov(std::size_t i, std::size_t j) const { return block_(i, j); }

  // Indices into block().
  static constexpr std::size_t kXA = 0, kPA = 1, kXB = 2, kPB = 3;

 private:
  Eigen::Matrix4d block_;
};

/// Symplectic form Omega for n modes, blocks [[0,1],[-1,0]].
Eigen::MatrixXd symplectic_form(std::size_t n_modes);

GaussianState vacuum(std::size_t n_modes);

/// Single-mode squeezed state; the squeezed axis sits at `angle` from X.
GaussianState squeezed_state(double v_sqz, double v_asqz, double angle);

/// Tensor product, modes of `a` first.
GaussianState tensor(const GaussianState& a, const GaussianState& b);

/**
 * Beam splitter between modes i and j with power transmissivity t:
 *   out_i = sqrt(t) in_i + sqrt(1-t) in_j
 *   out_j = sqrt(1-t) in_i - sqrt(t) in_j
 * applied identically to X and P.
 */
GaussianState beam_splitter(const GaussianState& state, std::size_t mode_i,
                            std::size_t mode_j, double transmissivity);

/// Vacuum admixture: V -> (1-mu) V + mu on `mode`, mean scaled by sqrt(1-mu).
GaussianState loss_channel(const GaussianState& state, std::size_t mode,
                           double mu);

GaussianState add_classical_noise(const GaussianState& state, std::size_t mode,
                                  Quadrature q, double eps);

GaussianState phase_rotation(const GaussianState& state, std::size_t mode,
                             double theta);

/// Sorted descending, one value per mode.
Eigen::VectorXd symplectic_eigenvalues(const GaussianState& state);

/// Works on any 2n x 2n symmetric positive-definite matrix, physical or not
/// (e.g. partially transposed covariances). Throws std::logic_error when the
/// matrix is not symmetric.
Eigen::VectorXd symplectic_eigenvalues(const Eigen::MatrixXd& cov);

/// 1/sqrt(det cov); equals 1 for pure states.
double purity(const GaussianState& state);

TwoModeStats extract_two_mode_stats(const GaussianState& state,
                                    std::size_t mode_a, std::size_t mode_b);

/// 10 log10(v); negative for squeezing.
double to_db(double variance);
double from_db(double db);

}  // namespace vclass
