#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vclass/gaussian_state.hpp"

namespace vclass {

enum class Party { A, B };

std::string to_string(Party p);

/// One homodyne record: vacuum-normalized quadrature outcomes.
struct SampleBatch {
  Party mode;
  Quadrature quadrature;
  std::uint64_t seed;
  std::vector<double> values;

  std::size_t count() const { return values.size(); }
};

struct EstimateReport {
  double point_estimate;
  double std_error;
  std::size_t count;
};

/**
 * Standard normal stream with a fixed, documented layout.
 *
 * Engine: std::mt19937_64 (its output sequence is fixed by the standard).
 * Uniforms: u = ((w >> 11) + 0.5) * 2^-53, strictly inside (0, 1).
 * Normals: basic Box-Muller on consecutive uniform pairs (u1, u2),
 *   z1 = sqrt(-2 ln u1) cos(2 pi u2), z2 = sqrt(-2 ln u1) sin(2 pi u2).
 * Normal pair k consumes engine words 2k and 2k+1, so seek(k) positions the
 * stream at pair k regardless of how earlier pairs were consumed.
 */
class NormalPairStream {
 public:
  explicit NormalPairStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::pair<double, double> next();
  void seek(std::uint64_t pair_index);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer applied to seed ^ stream; used to give independent
/// acquisitions (X run, P run) their own seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/**
 * Joint draws of one quadrature on both modes of a two-mode state.
 *
 * Time index i uses normal pair i: (a_i, b_i) = mean + L (z1, z2) with L the
 * lower Cholesky factor of the 2x2 block. Throws if X-P cross moments of the
 * state exceed 1e-9, since the marginal draw would then drop correlations.
 */
std::pair<SampleBatch, SampleBatch> sample_joint_quadratures(
    const GaussianState& state, Quadrature q, std::size_t count,
    std::uint64_t seed);

/// Unbiased sample variance; std_error = var * sqrt(2 / (n - 1)).
EstimateReport estimate_variance(std::span<const double> values);
EstimateReport estimate_variance(const SampleBatch& batch);

struct ConditionalEstimate {
  EstimateReport report;
  double gain;
};

/// Sample analogue of min_g Var(a - g b) with g = cov(a,b) / var(b).
ConditionalEstimate estimate_conditional_variance(const SampleBatch& target,
                                                  const SampleBatch& condition);

struct EprEstimate {
  ConditionalEstimate x_ab, p_ab, x_ba, p_ba;
  EstimateReport product_ab;
  EstimateReport product_ba;
};

/// Products of conditional-variance estimates with first-order error
/// propagation: se = product * sqrt((se_x/x)^2 + (se_p/p)^2).
EprEstimate estimate_epr_product(const SampleBatch& xa, const SampleBatch& xb,
                                 const SampleBatch& pa, const SampleBatch& pb);

/// Sample covariance of two equally long records (n - 1 denominator).
double sample_covariance(std::span<const double> a, std::span<const double> b);

/// `index,value` rows, values at 12 significant digits.
std::string format_batch_csv(const SampleBatch& batch);

/// Sidecar metadata: mode, quadrature, seed, count, state, provenance.
std::string batch_metadata_json(const SampleBatch& batch,
                                const std::string& state_description,
                                const std::string& provenance_json = "{}");

/// Writes `index,value` CSV plus a JSON sidecar (`<path>.json`) holding mode,
/// quadrature, seed, count and the given state description.
void write_batch(const std::filesystem::path& csv_path, const SampleBatch& batch,
                 const std::string& state_description,
                 const std::string& provenance_json = "{}");

SampleBatch read_batch(const std::filesystem::path& csv_path);

}  // namespace vclass
