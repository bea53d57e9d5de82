#include "vclass/app/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "vclass/app/output.hpp"
#include "vclass/errors.hpp"
#include "vclass/sampling.hpp"

namespace vclass::app {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string location_name(NoiseLocation l) {
  return l == NoiseLocation::AtSource ? "source" : "detectors";
}

SourceParams at_pump(const RunConfig& config, double pump_mw) {
  SourceParams p = config.source;
  p.pump_mw = pump_mw;
  return p;
}

std::string describe_state(const RunConfig& config, const ExcessNoise& noise) {
  return fmt::format(
      "v-class: pump_mw={} eta_gamma={} mu_a={} mu_b={} noise={}:{}:{}",
      format_number(config.source.pump_mw), format_number(config.source.eta_gamma()),
      format_number(config.loss_a()), format_number(config.loss_b()),
      location_name(noise.location), to_string(noise.quadrature),
      format_number(noise.eps));
}

nlohmann::ordered_json epr_json(const EprResult& r) {
  nlohmann::ordered_json j;
  j["condvar_x_ab"] = json_number(r.condvar_x_ab);
  j["condvar_p_ab"] = json_number(r.condvar_p_ab);
  j["condvar_x_ba"] = json_number(r.condvar_x_ba);
  j["condvar_p_ba"] = json_number(r.condvar_p_ba);
  j["gain_x_ab"] = json_number(r.gain_x_ab);
  j["gain_p_ab"] = json_number(r.gain_p_ab);
  j["gain_x_ba"] = json_number(r.gain_x_ba);
  j["gain_p_ba"] = json_number(r.gain_p_ba);
  j["product_ab"] = json_number(r.product_ab);
  j["product_ba"] = json_number(r.product_ba);
  j["product_mean"] = json_number(r.product_mean());
  j["epr_entangled_ab"] = r.epr_entangled_ab();
  j["epr_entangled_ba"] = r.epr_entangled_ba();
  return j;
}

nlohmann::ordered_json variance_json(const VariancePair& v) {
  nlohmann::ordered_json j;
  j["v_sqz"] = json_number(v.v_sqz);
  j["v_asqz"] = json_number(v.v_asqz);
  j["v_sqz_db"] = json_number(to_db(v.v_sqz));
  j["v_asqz_db"] = json_number(to_db(v.v_asqz));
  j["product"] = json_number(v.v_sqz * v.v_asqz);
  return j;
}

nlohmann::ordered_json point_json(const OperatingPoint& p) {
  nlohmann::ordered_json j;
  j["pump_mw"] = json_number(p.pump_mw);
  j["mu_a"] = json_number(p.mu_a);
  j["mu_b"] = json_number(p.mu_b);
  j["noise"] = {{"location", location_name(p.noise.location)},
                {"quadrature", to_string(p.noise.quadrature)},
                {"eps", json_number(p.noise.eps)}};
  j["detected_variances"] = variance_json(p.detected);
  j["pure_source_variances"] = variance_json(p.pure);
  j["epr"] = epr_json(p.epr);
  j["duan"] = {{"value", json_number(p.duan.value)},
               {"bound", json_number(p.duan.bound)},
               {"inseparable", p.duan.inseparable()}};
  j["eof_bits"] = json_number(p.eof);
  j["loss_margin"] = json_number(p.margin);
  return j;
}

std::string sweep_row(const OperatingPoint& p) {
  const double values[] = {p.pump_mw,
                           to_db(p.detected.v_sqz),
                           to_db(p.detected.v_asqz),
                           p.epr.condvar_x_ab,
                           p.epr.condvar_p_ab,
                           p.epr.condvar_x_ba,
                           p.epr.condvar_p_ba,
                           p.epr.product_ab,
                           p.epr.product_ba,
                           p.duan.value,
                           p.eof,
                           p.margin};
  std::string row;
  for (double v : values) {
    if (!row.empty()) row += ',';
    row += format_number(v);
  }
  return row + "\n";
}

std::vector<double> sweep_pumps(const RunConfig& config) {
  if (config.sweep_pumps_mw.empty()) return {config.source.pump_mw};
  return config.sweep_pumps_mw;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes to stdout, or atomically to `out` plus an optional `<out>.json` sidecar.
void emit(const std::optional<std::filesystem::path>& out, const std::string& content,
          const std::optional<nlohmann::ordered_json>& sidecar = std::nullopt) {
  if (!out) {
    std::cout << content;
    return;
  }
  OutputSet files;
  files.add(*out, content);
  if (sidecar) files.add(out->string() + ".json", sidecar->dump(2) + "\n");
  files.commit();
}

nlohmann::ordered_json csv_sidecar(const RunConfig& config, const ExcessNoise& noise) {
  nlohmann::ordered_json j;
  j["provenance"] = provenance(config, {});
  j["columns"] = kSweepHeader;
  j["noise"] = {{"location", location_name(noise.location)},
                {"quadrature", to_string(noise.quadrature)},
                {"eps", json_number(noise.eps)}};
  return j;
}

nlohmann::ordered_json quadrature_summary(const SampleBatch& a, const SampleBatch& b,
                                          const TwoModeStats& stats) {
  const auto qa = a.quadrature == Quadrature::X ? TwoModeStats::kXA : TwoModeStats::kPA;
  const auto qb = qa + 2;
  std::vector<double> diff(a.count());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.values[i] - b.values[i];
  const auto var_a = estimate_variance(a);
  const auto var_b = estimate_variance(b);
  const auto var_diff = estimate_variance(diff);
  nlohmann::ordered_json j;
  j["var_a"] = json_number(var_a.point_estimate);
  j["var_a_analytic"] = json_number(stats.var(qa));
  j["var_b"] = json_number(var_b.point_estimate);
  j["var_b_analytic"] = json_number(stats.var(qb));
  j["cov_ab"] = json_number(sample_covariance(a.values, b.values));
  j["cov_ab_analytic"] = json_number(stats.cov(qa, qb));
  j["difference_std"] = json_number(std::sqrt(var_diff.point_estimate));
  j["difference_std_analytic"] =
      json_number(std::sqrt(stats.var(qa) + stats.var(qb) - 2.0 * stats.cov(qa, qb)));
  return j;
}

}  // namespace

ExcessNoise resolve_noise(const RunConfig& config) {
  ExcessNoise noise{config.noise_location, config.noise_quadrature, config.noise_eps};
  if (!config.noise_target_epr) return noise;

  const double mu = config.loss_a();
  if (config.loss_b() != mu) {
    throw ConfigError("noise_target_epr needs mu_a == mu_b");
  }
  const SourceParams params = at_pump(config, config.source.pump_mw);
  const GaussianState clean = build_vclass_state(params, mu, mu);
  const EprResult base = epr_product(extract_two_mode_stats(clean, 0, 1));
  const double other = noise.quadrature == Quadrature::P ? base.condvar_x_ab
                                                         : base.condvar_p_ab;
  noise.eps = fit_excess_noise(params, mu, *config.noise_target_epr / other,
                               noise.location, noise.quadrature);
  return noise;
}

OperatingPoint evaluate_point(const RunConfig& config, double pump_mw,
                              const ExcessNoise& noise) {
  const SourceParams params = at_pump(config, pump_mw);
  OperatingPoint p{};
  p.pump_mw = pump_mw;
  p.detected = squeezer_variances(params);
  p.pure = pure_state_variances(params);
  p.mu_a = config.loss_a();
  p.mu_b = config.loss_b();
  p.noise = noise;
  const GaussianState state = build_vclass_state(params, p.mu_a, p.mu_b, noise);
  const TwoModeStats stats = extract_two_mode_stats(state, 0, 1);
  p.epr = epr_product(stats);
  p.duan = duan_inseparability(stats);
  try {
    p.eof = eof_symmetric(stats);
  } catch (const UnsupportedStateError&) {
    p.eof = kNaN;
  }
  p.margin = p.mu_a == p.mu_b ? vclass_loss_margin(p.pure.v_sqz, p.mu_a) : kNaN;
  return p;
}

nlohmann::ordered_json provenance(const RunConfig& config,
                                  const std::vector<std::uint64_t>& seeds) {
  nlohmann::ordered_json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["config_digest"] = config.digest;
  j["seeds"] = seeds;
  return j;
}

std::string sweep_csv(const RunConfig& config) {
  const ExcessNoise noise = resolve_noise(config);
  std::string out = std::string(kSweepHeader) + "\n";
  for (double pump : sweep_pumps(config)) {
    out += sweep_row(evaluate_point(config, pump, noise));
  }
  return out;
}

nlohmann::ordered_json sweep_json(const RunConfig& config) {
  const ExcessNoise noise = resolve_noise(config);
  nlohmann::ordered_json j;
  j["provenance"] = provenance(config, {});
  j["rows"] = nlohmann::ordered_json::array();
  for (double pump : sweep_pumps(config)) {
    j["rows"].push_back(point_json(evaluate_point(config, pump, noise)));
  }
  return j;
}

nlohmann::ordered_json criteria_json(const RunConfig& config) {
  const ExcessNoise noise = resolve_noise(config);
  nlohmann::ordered_json j;
  j["provenance"] = provenance(config, {});
  j["point"] = point_json(evaluate_point(config, config.source.pump_mw, noise));
  return j;
}

nlohmann::ordered_json run_sample(const RunConfig& config,
                                  const std::filesystem::path& prefix) {
  const ExcessNoise noise = resolve_noise(config);
  const SourceParams params = at_pump(config, config.source.pump_mw);
  const GaussianState state =
      build_vclass_state(params, config.loss_a(), config.loss_b(), noise);
  const TwoModeStats stats = extract_two_mode_stats(state, 0, 1);

  const std::uint64_t seed_x = derive_seed(config.seed, 1);
  const std::uint64_t seed_p = derive_seed(config.seed, 2);
  const auto [xa, xb] = sample_joint_quadratures(state, Quadrature::X, config.sample_count, seed_x);
  const auto [pa, pb] = sample_joint_quadratures(state, Quadrature::P, config.sample_count, seed_p);

  const std::string prov = provenance(config, {config.seed, seed_x, seed_p}).dump();
  const std::string description = describe_state(config, noise);

  const EprResult analytic = epr_product(stats);
  const EprEstimate empirical = estimate_epr_product(xa, xb, pa, pb);
  auto product_json = [](const EstimateReport& r, double exact) {
    nlohmann::ordered_json j;
    j["estimate"] = json_number(r.point_estimate);
    j["std_error"] = json_number(r.std_error);
    j["analytic"] = json_number(exact);
    j["deviation_in_std_errors"] =
        json_number(r.std_error > 0.0 ? (r.point_estimate - exact) / r.std_error : 0.0);
    return j;
  };

  nlohmann::ordered_json summary;
  summary["provenance"] = nlohmann::ordered_json::parse(prov);
  summary["state"] = description;
  summary["count"] = config.sample_count;
  summary["X"] = quadrature_summary(xa, xb, stats);
  summary["P"] = quadrature_summary(pa, pb, stats);
  summary["condvar_x_ab"] = product_json(empirical.x_ab.report, analytic.condvar_x_ab);
  summary["condvar_p_ab"] = product_json(empirical.p_ab.report, analytic.condvar_p_ab);
  summary["condvar_x_ba"] = product_json(empirical.x_ba.report, analytic.condvar_x_ba);
  summary["condvar_p_ba"] = product_json(empirical.p_ba.report, analytic.condvar_p_ba);
  summary["epr_ab"] = product_json(empirical.product_ab, analytic.product_ab);
  summary["epr_ba"] = product_json(empirical.product_ba, analytic.product_ba);

  OutputSet files;
  const std::pair<const char*, const SampleBatch*> batches[] = {
      {"xa", &xa}, {"xb", &xb}, {"pa", &pa}, {"pb", &pb}};
  for (const auto& [tag, batch] : batches) {
    const std::filesystem::path csv = prefix.string() + "." + tag + ".csv";
    files.add(csv, format_batch_csv(*batch));
    files.add(csv.string() + ".json", batch_metadata_json(*batch, description, prov));
  }
  files.add(prefix.string() + ".summary.json", summary.dump(2) + "\n");
  files.commit();
  return summary;
}

nlohmann::ordered_json fit_json(const std::filesystem::path& dataset,
                                const FitFixed& fixed, const std::string& digest) {
  const std::string bytes = read_file(dataset);
  const VarianceDataset data = parse_variance_csv(bytes);
  const FitResult fit = fit_squeezer_model(data, fixed);

  nlohmann::ordered_json j;
  j["provenance"] = {{"tool", kToolName},
                     {"version", kToolVersion},
                     {"config_digest", digest},
                     {"seeds", nlohmann::ordered_json::array()}};
  j["input_digest"] = sha256_hex(bytes);
  j["rows"] = data.rows.size();
  j["fixed"] = {{"roundtrip_m", json_number(fixed.roundtrip_m)},
                {"freq_hz", json_number(fixed.freq_hz)}};
  j["eta_gamma"] = json_number(fit.eta_gamma);
  j["p_th_mw"] = json_number(fit.p_th_mw);
  j["t_plus_l"] = json_number(fit.t_plus_l);
  j["residual_rms_db"] = json_number(fit.residual_rms_db);
  j["objective"] = json_number(fit.objective);
  j["gradient_norm"] = json_number(fit.gradient_norm);
  j["iterations"] = fit.iterations;
  j["evaluations"] = fit.evaluations;
  j["converged"] = fit.converged;
  return j;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Squeezed-light v-class entanglement toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::string format;
  std::string dataset;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "key = value run configuration");
    if (config_required) opt->required();
    sub->add_option("--out", out_path, "output path (stdout when omitted)");
    sub->add_option("--seed", seed, "overrides the config seed");
  };
  auto* sweep = app.add_subcommand("sweep", "criteria over a pump-power grid");
  add_common(sweep, true);
  sweep->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  auto* criteria = app.add_subcommand("criteria", "all criteria at one operating point");
  add_common(criteria, true);
  criteria->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  auto* sample = app.add_subcommand("sample", "Monte Carlo homodyne records");
  add_common(sample, true);
  sample->add_option("--format", format)->check(CLI::IsMember({"json"}));
  auto* fit = app.add_subcommand("fit", "fit the squeezer model to variance data");
  add_common(fit, false);
  fit->add_option("dataset", dataset, "CSV pump_mw,sqz_db,asqz_db[,weight]");
  fit->add_option("--format", format)->check(CLI::IsMember({"json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const std::optional<std::filesystem::path> out =
      out_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(out_path);
  try {
    if (*fit) {
      FitFixed fixed;
      std::string digest;
      std::filesystem::path data_path = dataset;
      if (!config_path.empty()) {
        const RunConfig config = load_config(config_path, seed);
        fixed = {config.source.roundtrip_m, config.source.freq_hz};
        digest = config.digest;
        if (data_path.empty() && config.fit_dataset) data_path = *config.fit_dataset;
      }
      if (data_path.empty()) throw ConfigError("fit needs a dataset path");
      const auto result = fit_json(data_path, fixed, digest);
      emit(out, result.dump(2) + "\n");
      if (!result["converged"].get<bool>()) {
        std::cerr << "fit did not converge\n";
        return kExitNumerical;
      }
      return kExitOk;
    }

    const RunConfig config = load_config(config_path, seed);
    if (*sweep) {
      if (format == "json") {
        emit(out, sweep_json(config).dump(2) + "\n");
      } else {
        emit(out, sweep_csv(config), csv_sidecar(config, resolve_noise(config)));
      }
    } else if (*criteria) {
      if (format == "csv") {
        RunConfig single = config;
        single.sweep_pumps_mw = {config.source.pump_mw};
        emit(out, sweep_csv(single), csv_sidecar(single, resolve_noise(single)));
      } else {
        emit(out, criteria_json(config).dump(2) + "\n");
      }
    } else if (*sample) {
      if (!out) throw ConfigError("sample needs --out <prefix>");
      const auto summary = run_sample(config, *out);
      std::cout << summary.dump(2) << "\n";
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const UnphysicalStateError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace vclass::app
