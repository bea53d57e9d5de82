#include "vclass/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "vclass/errors.hpp"

namespace vclass {

namespace {

constexpr double kSymmetricMarginalTol = 1e-6;

std::size_t quad_index(Quadrature q, bool alice) {
  const std::size_t base = alice ? TwoModeStats::kXA : TwoModeStats::kXB;
  return base + (q == Quadrature::P ? 1 : 0);
}

}  // namespace

ConditionalVariance conditional_variance(const TwoModeStats& stats,
                                         Quadrature q, Direction dir) {
  const bool a_given_b = dir == Direction::AGivenB;
  const std::size_t target = quad_index(q, a_given_b);
  const std::size_t cond = quad_index(q, !a_given_b);
  const double var_t = stats.var(target);
  const double var_c = stats.var(cond);
  if (var_t < 0.0 || var_c < 0.0) {
    throw std::invalid_argument("negative variance in two-mode statistics");
  }
  if (var_c == 0.0) {
    return {var_t, 0.0};
  }
  const double c = stats.cov(target, cond);
  const double gain = c / var_c;
  return {std::max(0.0, var_t - c * gain), gain};
}

EprResult epr_product(const TwoModeStats& stats) {
  const auto xab = conditional_variance(stats, Quadrature::X, Direction::AGivenB);
  const auto pab = conditional_variance(stats, Quadrature::P, Direction::AGivenB);
  const auto xba = conditional_variance(stats, Quadrature::X, Direction::BGivenA);
  const auto pba = conditional_variance(stats, Quadrature::P, Direction::BGivenA);
  EprResult r{};
  r.condvar_x_ab = xab.value;
  r.condvar_p_ab = pab.value;
  r.condvar_x_ba = xba.value;
  r.condvar_p_ba = pba.value;
  r.gain_x_ab = xab.gain;
  r.gain_p_ab = pab.gain;
  r.gain_x_ba = xba.gain;
  r.gain_p_ba = pba.gain;
  r.product_ab = r.condvar_x_ab * r.condvar_p_ab;
  r.product_ba = r.condvar_x_ba * r.condvar_p_ba;
  return r;
}

double epr_pure_vclass(double v_sqz, double v_asqz) {
  if (!(v_sqz > 0.0) || !(v_asqz > 0.0)) {
    throw std::invalid_argument("variances must be positive");
  }
  return 4.0 / (2.0 + v_asqz + v_sqz);
}

double vclass_loss_margin(double v_sqz, double mu) {
  if (!(v_sqz > 0.0 && v_sqz <= 1.0)) {
    throw std::invalid_argument("v_sqz must lie in (0, 1]");
  }
  if (!(mu >= 0.0 && mu <= 1.0)) {
    throw std::invalid_argument("loss must lie in [0, 1]");
  }
  const double d = 1.0 - v_sqz;
  return d * d * (1.0 - mu) * (1.0 / 3.0 - mu);
}

DuanResult duan_inseparability(const TwoModeStats& stats) {
  using S = TwoModeStats;
  auto sum_var = [&](std::size_t a, std::size_t b, double s) {
    return stats.var(a) + stats.var(b) + 2.0 * s * stats.cov(a, b);
  };
  const double x = std::min(sum_var(S::kXA, S::kXB, 1.0), sum_var(S::kXA, S::kXB, -1.0));
  const double p = std::min(sum_var(S::kPA, S::kPB, 1.0), sum_var(S::kPA, S::kPB, -1.0));
  return {x + p};
}

double pt_min_symplectic_eigenvalue(const TwoModeStats& stats) {
  // Transposition flips the sign of Bob's momentum.
  const Eigen::Vector4d flip(1.0, 1.0, 1.0, -1.0);
  const Eigen::Matrix4d pt = flip.asDiagonal() * stats.block() * flip.asDiagonal();
  return symplectic_eigenvalues(Eigen::MatrixXd(pt)).minCoeff();
}

double mode_entropy(double nu) {
  if (nu <= 1.0) return 0.0;
  const double hi = 0.5 * (nu + 1.0);
  const double lo = 0.5 * (nu - 1.0);
  return hi * std::log2(hi) - lo * std::log2(lo);
}

double eof_symmetric(const TwoModeStats& stats) {
  const Eigen::Matrix2d a = stats.block().topLeftCorner<2, 2>();
  const Eigen::Matrix2d b = stats.block().bottomRightCorner<2, 2>();
  const double asym = (a - b).cwiseAbs().maxCoeff();
  if (asym > kSymmetricMarginalTol) {
    throw UnsupportedStateError(fmt::format(
        "entanglement of formation needs symmetric marginals (mismatch {:.3g})", asym));
  }
  const double nu = pt_min_symplectic_eigenvalue(stats);
  if (nu >= 1.0 - 1e-12) return 0.0;
  const double up = 0.25 * std::pow(1.0 / std::sqrt(nu) + std::sqrt(nu), 2);
  const double down = 0.25 * std::pow(1.0 / std::sqrt(nu) - std::sqrt(nu), 2);
  const double down_term = down > 0.0 ? down * std::log2(down) : 0.0;
  return up * std::log2(up) - down_term;
}

PhaseInvarianceReport phase_invariance_check(const GaussianState& state,
                                             std::span<const double> thetas) {
  PhaseInvarianceReport report;
  const EprResult reference = epr_product(extract_two_mode_stats(state, 0, 1));
  for (double theta : thetas) {
    const GaussianState rotated =
        phase_rotation(phase_rotation(state, 0, theta), 1, theta);
    const EprResult r = epr_product(extract_two_mode_stats(rotated, 0, 1));
    report.max_deviation = std::max(
        {report.max_deviation, std::abs(r.product_ab - reference.product_ab),
         std::abs(r.product_ba - reference.product_ba)});
    report.thetas.push_back(theta);
    report.results.push_back(r);
  }
  return report;
}

}  // namespace vclass
