#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vclass/app/config.hpp"
#include "vclass/criteria.hpp"
#include "vclass/fitting.hpp"

namespace vclass::app {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNumerical = 3,
  kExitIo = 4,
};

/// Frozen sweep header.
inline constexpr const char* kSweepHeader =
    "pump_mw,var_sqz_db,var_asqz_db,condvar_x_ab,condvar_p_ab,condvar_x_ba,"
    "condvar_p_ba,epr_ab,epr_ba,duan,eof,margin_eq3";

/// Every derived quantity at one pump power.
struct OperatingPoint {
  double pump_mw;
  VariancePair detected;
  VariancePair pure;
  double mu_a, mu_b;
  ExcessNoise noise;
  EprResult epr;
  DuanResult duan;
  double eof;  // NaN when the state is asymmetric
  double margin;  // NaN when mu_a != mu_b
};

/// Excess noise implied by the config: noise_eps, or the value solved at
/// config.source.pump_mw when noise_target_epr is set.
ExcessNoise resolve_noise(const RunConfig& config);

OperatingPoint evaluate_point(const RunConfig& config, double pump_mw,
                              const ExcessNoise& noise);

nlohmann::ordered_json provenance(const RunConfig& config,
                                  const std::vector<std::uint64_t>& seeds);

std::string sweep_csv(const RunConfig& config);
nlohmann::ordered_json sweep_json(const RunConfig& config);
nlohmann::ordered_json criteria_json(const RunConfig& config);

/// Writes <prefix>.{xa,xb,pa,pb}.csv with sidecars and <prefix>.summary.json.
/// Returns the summary.
nlohmann::ordered_json run_sample(const RunConfig& config,
                                  const std::filesystem::path& prefix);

nlohmann::ordered_json fit_json(const std::filesystem::path& dataset,
                                const FitFixed& fixed, const std::string& digest);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace vclass::app
