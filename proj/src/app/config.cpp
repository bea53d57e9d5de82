#include "vclass/app/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "vclass/errors.hpp"

namespace vclass::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, v));
  }
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("{}: '{}' is not an unsigned integer", key, v));
  }
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    out.push_back(parse_double(key, trim(cell)));
  }
  if (out.empty()) throw ConfigError(fmt::format("{}: empty list", key));
  return out;
}

void check_range(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void validate(const RunConfig& c) {
  try {
    SourceParams probe = c.source;
    probe.pump_mw = 0.0;
    probe.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  auto check_pump = [&](double p, const char* key) {
    check_range(p >= 0.0, fmt::format("{}: pump {} must be non-negative", key, p));
    check_range(p < c.source.p_th_mw,
                fmt::format("{}: pump {} mW is not below threshold {} mW", key, p,
                            c.source.p_th_mw));
  };
  check_pump(c.source.pump_mw, "pump_mw");
  for (double p : c.sweep_pumps_mw) check_pump(p, "sweep_pumps_mw");
  for (const auto& [mu, key] : {std::pair{c.mu_a, "mu_a"}, std::pair{c.mu_b, "mu_b"}}) {
    if (mu) check_range(*mu >= 0.0 && *mu <= 1.0, fmt::format("{} must lie in [0, 1]", key));
  }
  check_range(c.noise_eps >= 0.0, "noise_eps must be non-negative");
  if (c.noise_target_epr) {
    check_range(*c.noise_target_epr > 0.0, "noise_target_epr must be positive");
  }
  check_range(c.sample_count >= 2, "sample_count must be at least 2");
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

RunConfig parse_config(const std::string& text,
                       std::optional<std::uint64_t> seed_override) {
  RunConfig c;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters{
      {"eta", [&](auto& k, auto& v) { c.source.eta = parse_double(k, v); }},
      {"gamma", [&](auto& k, auto& v) { c.source.gamma = parse_double(k, v); }},
      {"pump_mw", [&](auto& k, auto& v) { c.source.pump_mw = parse_double(k, v); }},
      {"p_th_mw", [&](auto& k, auto& v) { c.source.p_th_mw = parse_double(k, v); }},
      {"t_coupler", [&](auto& k, auto& v) { c.source.t_coupler = parse_double(k, v); }},
      {"intracavity_loss",
       [&](auto& k, auto& v) { c.source.intracavity_loss = parse_double(k, v); }},
      {"roundtrip_m", [&](auto& k, auto& v) { c.source.roundtrip_m = parse_double(k, v); }},
      {"freq_hz", [&](auto& k, auto& v) { c.source.freq_hz = parse_double(k, v); }},
      {"mu_a", [&](auto& k, auto& v) { c.mu_a = parse_double(k, v); }},
      {"mu_b", [&](auto& k, auto& v) { c.mu_b = parse_double(k, v); }},
      {"noise_location",
       [&](auto& k, auto& v) {
         if (v == "source") c.noise_location = NoiseLocation::AtSource;
         else if (v == "detectors") c.noise_location = NoiseLocation::AtDetectors;
         else throw ConfigError(fmt::format("{}: expected source|detectors, got '{}'", k, v));
       }},
      {"noise_quadrature",
       [&](auto& k, auto& v) {
         if (v == "X") c.noise_quadrature = Quadrature::X;
         else if (v == "P") c.noise_quadrature = Quadrature::P;
         else throw ConfigError(fmt::format("{}: expected X|P, got '{}'", k, v));
       }},
      {"noise_eps", [&](auto& k, auto& v) { c.noise_eps = parse_double(k, v); }},
      {"noise_target_epr", [&](auto& k, auto& v) { c.noise_target_epr = parse_double(k, v); }},
      {"sweep_pumps_mw", [&](auto& k, auto& v) { c.sweep_pumps_mw = parse_list(k, v); }},
      {"sample_count",
       [&](auto& k, auto& v) { c.sample_count = static_cast<std::size_t>(parse_u64(k, v)); }},
      {"seed", [&](auto& k, auto& v) { c.seed = parse_u64(k, v); }},
      {"fit_dataset", [&](auto&, auto& v) { c.fit_dataset = v; }},
  };

  std::map<std::string, std::string> entries;
  std::stringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("line {}: expected key = value", line_no));
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError(fmt::format("line {}: unknown key '{}'", line_no, key));
    }
    if (value.empty()) {
      throw ConfigError(fmt::format("line {}: empty value for '{}'", line_no, key));
    }
    if (!entries.emplace(key, value).second) {
      throw ConfigError(fmt::format("line {}: duplicate key '{}'", line_no, key));
    }
    try {
      it->second(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  if (seed_override) {
    c.seed = *seed_override;
    entries["seed"] = std::to_string(*seed_override);
  }
  validate(c);

  for (const auto& [k, v] : entries) c.canonical += k + "=" + v + "\n";
  c.digest = sha256_hex(c.canonical);
  return c;
}

RunConfig load_config(const std::filesystem::path& path,
                      std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::ios_base::failure("cannot open config " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), seed_override);
}

}  // namespace vclass::app
