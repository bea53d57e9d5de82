#include "vclass/gaussian_state.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include <fmt/format.h>

#include "vclass/errors.hpp"

namespace vclass {

namespace {

constexpr double kSymmetryTol = 1e-12;

void check_mode(const GaussianState& state, std::size_t mode) {
  if (mode >= state.n_modes()) {
    throw std::out_of_range(fmt::format("mode index {} out of range for {} modes",
                                        mode, state.n_modes()));
  }
}

// Apply a real linear map S acting on the quadratures of a mode subset.
GaussianState apply_linear(const GaussianState& state,
                           const Eigen::MatrixXd& s) {
  return GaussianState(s * state.mean(), s * state.cov() * s.transpose());
}

}  // namespace

std::string to_string(Quadrature q) { return q == Quadrature::X ? "X" : "P"; }

GaussianState::GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() == 0 || cov_.rows() != cov_.cols() || cov_.rows() % 2 != 0) {
    throw std::invalid_argument(
        fmt::format("covariance must be 2n x 2n, got {} x {}", cov_.rows(),
                    cov_.cols()));
  }
  if (mean_.size() != cov_.rows()) {
    throw std::invalid_argument("mean and covariance sizes differ");
  }
  if (!cov_.allFinite() || !mean_.allFinite()) {
    throw std::invalid_argument("non-finite entries in Gaussian state");
  }
  n_modes_ = static_cast<std::size_t>(cov_.rows() / 2);
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();

  const Eigen::VectorXd nu = symplectic_eigenvalues(cov_);
  const double nu_min = nu.minCoeff();
  if (!(nu_min >= 1.0 - kPhysicalityTol)) {
    throw UnphysicalStateError(fmt::format(
        "smallest symplectic eigenvalue {:.12g} violates the bound 1", nu_min));
  }
}

double GaussianState::variance(std::size_t mode, Quadrature q) const {
  check_mode(*this, mode);
  const auto idx = static_cast<Eigen::Index>(2 * mode + (q == Quadrature::P));
  return cov_(idx, idx);
}

TwoModeStats::TwoModeStats(const Eigen::Matrix4d& block)
    : block_(0.5 * (block + block.transpose())) {
  if (!block_.allFinite()) {
    throw std::invalid_argument("non-finite entries in two-mode block");
  }
  for (int i = 0; i < 4; ++i) {
    if (block_(i, i) < 0.0) {
      throw std::invalid_argument(
          fmt::format("negative variance {:.6g} on diagonal entry {}",
                      block_(i, i), i));
    }
  }
}

Eigen::MatrixXd symplectic_form(std::size_t n_modes) {
  const auto n = static_cast<Eigen::Index>(2 * n_modes);
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; k += 2) {
    omega(k, k + 1) = 1.0;
    omega(k + 1, k) = -1.0;
  }
  return omega;
}

GaussianState vacuum(std::size_t n_modes) {
  if (n_modes == 0) {
    throw std::invalid_argument("vacuum needs at least one mode");
  }
  const auto n = static_cast<Eigen::Index>(2 * n_modes);
  return GaussianState(Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n));
}

GaussianState squeezed_state(double v_sqz, double v_asqz, double angle) {
  if (!(v_sqz > 0.0) || !(v_asqz > 0.0)) {
    throw std::invalid_argument("squeezed-state variances must be positive");
  }
  if (v_sqz * v_asqz < 1.0 - kPhysicalityTol) {
    throw UnphysicalStateError(fmt::format(
        "variance product {:.12g} below the uncertainty bound", v_sqz * v_asqz));
  }
  Eigen::Matrix2d rot;
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  const Eigen::Matrix2d diag = Eigen::Vector2d(v_sqz, v_asqz).asDiagonal();
  return GaussianState(Eigen::VectorXd::Zero(2), rot * diag * rot.transpose());
}

GaussianState tensor(const GaussianState& a, const GaussianState& b) {
  const auto na = a.cov().rows();
  const auto nb = b.cov().rows();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(na + nb, na + nb);
  cov.topLeftCorner(na, na) = a.cov();
  cov.bottomRightCorner(nb, nb) = b.cov();
  Eigen::VectorXd mean(na + nb);
  mean << a.mean(), b.mean();
  return GaussianState(std::move(mean), std::move(cov));
}

GaussianState beam_splitter(const GaussianState& state, std::size_t mode_i,
                            std::size_t mode_j, double transmissivity) {
  check_mode(state, mode_i);
  check_mode(state, mode_j);
  if (mode_i == mode_j) {
    throw std::invalid_argument("beam splitter needs two distinct modes");
  }
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0)) {
    throw std::invalid_argument(
        fmt::format("transmissivity {} outside [0, 1]", transmissivity));
  }
  const double tau = std::sqrt(transmissivity);
  const double rho = std::sqrt(1.0 - transmissivity);
  const auto n = state.cov().rows();
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index q = 0; q < 2; ++q) {
    const auto i = static_cast<Eigen::Index>(2 * mode_i) + q;
    const auto j = static_cast<Eigen::Index>(2 * mode_j) + q;
    s(i, i) = tau;
    s(i, j) = rho;
    s(j, i) = rho;
    s(j, j) = -tau;
  }
  return apply_linear(state, s);
}

GaussianState loss_channel(const GaussianState& state, std::size_t mode,
                           double mu) {
  check_mode(state, mode);
  if (!(mu >= 0.0 && mu <= 1.0)) {
    throw std::invalid_argument(fmt::format("loss {} outside [0, 1]", mu));
  }
  // Couple to an ancillary vacuum and trace it out again.
  const std::size_t n = state.n_modes();
  const GaussianState dilated =
      beam_splitter(tensor(state, vacuum(1)), mode, n, 1.0 - mu);
  const auto dim = static_cast<Eigen::Index>(2 * n);
  return GaussianState(dilated.mean().head(dim),
                       dilated.cov().topLeftCorner(dim, dim));
}

GaussianState add_classical_noise(const GaussianState& state, std::size_t mode,
                                  Quadrature q, double eps) {
  check_mode(state, mode);
  if (!(eps >= 0.0)) {
    throw std::invalid_argument(fmt::format("noise variance {} is negative", eps));
  }
  Eigen::MatrixXd cov = state.cov();
  const auto idx = static_cast<Eigen::Index>(2 * mode + (q == Quadrature::P));
  cov(idx, idx) += eps;
  return GaussianState(state.mean(), std::move(cov));
}

GaussianState phase_rotation(const GaussianState& state, std::size_t mode,
                             double theta) {
  check_mode(state, mode);
  const auto n = state.cov().rows();
  const auto k = static_cast<Eigen::Index>(2 * mode);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
  s(k, k) = std::cos(theta);
  s(k, k + 1) = -std::sin(theta);
  s(k + 1, k) = std::sin(theta);
  s(k + 1, k + 1) = std::cos(theta);
  return apply_linear(state, s);
}

Eigen::VectorXd symplectic_eigenvalues(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() % 2 != 0 || cov.rows() == 0) {
    throw std::logic_error("symplectic spectrum needs a 2n x 2n matrix");
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw std::logic_error("covariance matrix is not symmetric");
  }
  const auto n_modes = static_cast<std::size_t>(cov.rows() / 2);

  // |eig(i sqrt(C) Omega sqrt(C))| is Hermitian and numerically stable.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym(cov);
  if (sym.eigenvalues().minCoeff() <= 0.0) {
    throw UnphysicalStateError("covariance matrix is not positive definite");
  }
  const Eigen::MatrixXd root = sym.operatorSqrt();
  const Eigen::MatrixXd m = root * symplectic_form(n_modes) * root;
  const Eigen::MatrixXcd herm = std::complex<double>(0.0, 1.0) * m.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm,
                                                         Eigen::EigenvaluesOnly);
  // Eigenvalues come in +/- pairs, sorted ascending; the top half is positive.
  const Eigen::VectorXd all = solver.eigenvalues();
  Eigen::VectorXd nu(static_cast<Eigen::Index>(n_modes));
  for (std::size_t k = 0; k < n_modes; ++k) {
    nu(static_cast<Eigen::Index>(k)) =
        all(all.size() - 1 - static_cast<Eigen::Index>(k));
  }
  return nu;
}

Eigen::VectorXd symplectic_eigenvalues(const GaussianState& state) {
  return symplectic_eigenvalues(state.cov());
}

double purity(const GaussianState& state) {
  return 1.0 / std::sqrt(state.cov().determinant());
}

TwoModeStats extract_two_mode_stats(const GaussianState& state,
                                    std::size_t mode_a, std::size_t mode_b) {
  check_mode(state, mode_a);
  check_mode(state, mode_b);
  if (mode_a == mode_b) {
    throw std::invalid_argument("two-mode statistics need distinct modes");
  }
  const Eigen::Index idx[4] = {
      static_cast<Eigen::Index>(2 * mode_a), static_cast<Eigen::Index>(2 * mode_a + 1),
      static_cast<Eigen::Index>(2 * mode_b), static_cast<Eigen::Index>(2 * mode_b + 1)};
  Eigen::Matrix4d block;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      block(r, c) = state.cov()(idx[r], idx[c]);
    }
  }
  return TwoModeStats(block);
}

double to_db(double variance) { return 10.0 * std::log10(variance); }

double from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace vclass
