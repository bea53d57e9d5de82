#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vclass/source_model.hpp"

namespace vclass::app {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * Run configuration read from a flat key-value file.
 *
 * Grammar, one entry per line:
 *   line    := blank | comment | entry
 *   comment := '#' anything
 *   entry   := key '=' value          (whitespace around both is ignored)
 * Lists are comma separated. Keys may appear once; unknown keys are errors.
 * See README for the key table.
 */
struct RunConfig {
  SourceParams source;
  std::optional<double> mu_a;
  std::optional<double> mu_b;

  NoiseLocation noise_location = NoiseLocation::AtDetectors;
  Quadrature noise_quadrature = Quadrature::P;
  double noise_eps = 0.0;
  /// When set, eps is solved so the A|B Reid product at pump_mw hits this.
  std::optional<double> noise_target_epr;

  std::vector<double> sweep_pumps_mw;
  std::size_t sample_count = 1'000'000;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> fit_dataset;

  /// Canonical text (sorted key=value lines) the digest is computed from.
  std::string canonical;
  /// SHA-256 of `canonical`, lowercase hex.
  std::string digest;

  double loss_a() const { return mu_a.value_or(1.0 - source.eta_gamma()); }
  double loss_b() const { return mu_b.value_or(1.0 - source.eta_gamma()); }
};

/// Parses and validates; `seed_override` replaces the file's seed before the
/// digest is taken. Throws ConfigError with the offending line on failure.
RunConfig parse_config(const std::string& text,
                       std::optional<std::uint64_t> seed_override = std::nullopt);

RunConfig load_config(const std::filesystem::path& path,
                      std::optional<std::uint64_t> seed_override = std::nullopt);

std::string sha256_hex(const std::string& bytes);

}  // namespace vclass::app
