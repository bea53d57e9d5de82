#include "vclass/sampling.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

namespace vclass {

namespace {

constexpr double kCrossMomentTol = 1e-9;

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void require_pair(const SampleBatch& a, const SampleBatch& b) {
  if (a.count() != b.count()) {
    throw std::invalid_argument(fmt::format(
        "paired batches differ in length ({} vs {})", a.count(), b.count()));
  }
  if (a.quadrature != b.quadrature) {
    throw std::invalid_argument("paired batches come from different quadratures");
  }
}

double product_std_error(double product, const EstimateReport& x,
                         const EstimateReport& p) {
  auto rel = [](const EstimateReport& r) {
    return r.point_estimate > 0.0 ? r.std_error / r.point_estimate : 0.0;
  };
  return product * std::hypot(rel(x), rel(p));
}

}  // namespace

std::string to_string(Party p) { return p == Party::A ? "A" : "B"; }

std::pair<double, double> NormalPairStream::next() {
  constexpr double kScale = 0x1.0p-53;
  const double u1 = (static_cast<double>(engine_() >> 11) + 0.5) * kScale;
  const double u2 = (static_cast<double>(engine_() >> 11) + 0.5) * kScale;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

void NormalPairStream::seek(std::uint64_t pair_index) {
  engine_.seed(seed_);
  engine_.discard(2 * pair_index);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::pair<SampleBatch, SampleBatch> sample_joint_quadratures(
    const GaussianState& state, Quadrature q, std::size_t count,
    std::uint64_t seed) {
  if (state.n_modes() != 2) {
    throw std::invalid_argument("joint sampling needs a two-mode state");
  }
  if (count == 0) {
    throw std::invalid_argument("sample count must be positive");
  }
  const Eigen::MatrixXd& cov = state.cov();
  for (int r : {0, 2}) {
    for (int c : {1, 3}) {
      if (std::abs(cov(r, c)) > kCrossMomentTol) {
        throw std::invalid_argument(fmt::format(
            "state has X-P cross moment {:.3g}; quadrature-wise sampling would "
            "drop it", cov(r, c)));
      }
    }
  }

  const int ia = q == Quadrature::X ? 0 : 1;
  const int ib = ia + 2;
  const double var_a = cov(ia, ia);
  const double var_b = cov(ib, ib);
  const double c_ab = cov(ia, ib);
  const double l11 = std::sqrt(var_a);
  const double l21 = l11 > 0.0 ? c_ab / l11 : 0.0;
  const double l22 = std::sqrt(std::max(0.0, var_b - l21 * l21));
  const double mean_a = state.mean()(ia);
  const double mean_b = state.mean()(ib);

  SampleBatch a{Party::A, q, seed, std::vector<double>(count)};
  SampleBatch b{Party::B, q, seed, std::vector<double>(count)};
  NormalPairStream stream(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const auto [z1, z2] = stream.next();
    a.values[i] = mean_a + l11 * z1;
    b.values[i] = mean_b + l21 * z1 + l22 * z2;
  }
  return {std::move(a), std::move(b)};
}

double sample_covariance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("covariance needs two equal records of length >= 2");
  }
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += (a[i] - ma) * (b[i] - mb);
  }
  return s / static_cast<double>(a.size() - 1);
}

EstimateReport estimate_variance(std::span<const double> values) {
  if (values.size() < 2) {
    throw std::invalid_argument("variance estimate needs at least two samples");
  }
  const double var = sample_covariance(values, values);
  const double n = static_cast<double>(values.size());
  return {var, var * std::sqrt(2.0 / (n - 1.0)), values.size()};
}

EstimateReport estimate_variance(const SampleBatch& batch) {
  return estimate_variance(batch.values);
}

ConditionalEstimate estimate_conditional_variance(const SampleBatch& target,
                                                  const SampleBatch& condition) {
  require_pair(target, condition);
  const double var_c = sample_covariance(condition.values, condition.values);
  if (var_c == 0.0) {
    return {estimate_variance(target), 0.0};
  }
  const double gain = sample_covariance(target.values, condition.values) / var_c;
  std::vector<double> residual(target.count());
  for (std::size_t i = 0; i < residual.size(); ++i) {
    residual[i] = target.values[i] - gain * condition.values[i];
  }
  return {estimate_variance(residual), gain};
}

EprEstimate estimate_epr_product(const SampleBatch& xa, const SampleBatch& xb,
                                 const SampleBatch& pa, const SampleBatch& pb) {
  if (xa.quadrature != Quadrature::X || pa.quadrature != Quadrature::P) {
    throw std::invalid_argument("expected X batches first, then P batches");
  }
  EprEstimate e{};
  e.x_ab = estimate_conditional_variance(xa, xb);
  e.p_ab = estimate_conditional_variance(pa, pb);
  e.x_ba = estimate_conditional_variance(xb, xa);
  e.p_ba = estimate_conditional_variance(pb, pa);

  const double ab = e.x_ab.report.point_estimate * e.p_ab.report.point_estimate;
  const double ba = e.x_ba.report.point_estimate * e.p_ba.report.point_estimate;
  e.product_ab = {ab, product_std_error(ab, e.x_ab.report, e.p_ab.report),
                  std::min(xa.count(), pa.count())};
  e.product_ba = {ba, product_std_error(ba, e.x_ba.report, e.p_ba.report),
                  std::min(xa.count(), pa.count())};
  return e;
}

std::string format_batch_csv(const SampleBatch& batch) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "index,value\n");
  for (std::size_t i = 0; i < batch.count(); ++i) {
    fmt::format_to(std::back_inserter(buf), "{},{:.12g}\n", i, batch.values[i]);
  }
  return fmt::to_string(buf);
}

std::string batch_metadata_json(const SampleBatch& batch,
                                const std::string& state_description,
                                const std::string& provenance_json) {
  nlohmann::ordered_json meta;
  meta["mode"] = to_string(batch.mode);
  meta["quadrature"] = to_string(batch.quadrature);
  meta["seed"] = batch.seed;
  meta["count"] = batch.count();
  meta["state"] = state_description;
  meta["provenance"] = nlohmann::ordered_json::parse(provenance_json);
  return meta.dump(2) + "\n";
}

void write_batch(const std::filesystem::path& csv_path, const SampleBatch& batch,
                 const std::string& state_description,
                 const std::string& provenance_json) {
  auto write = [](const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot open " + path.string());
    out << content;
    if (!out) throw std::ios_base::failure("write failed for " + path.string());
  };
  write(csv_path, format_batch_csv(batch));
  write(csv_path.string() + ".json",
        batch_metadata_json(batch, state_description, provenance_json));
}

SampleBatch read_batch(const std::filesystem::path& csv_path) {
  std::ifstream side(csv_path.string() + ".json");
  if (!side) {
    throw std::ios_base::failure("missing sidecar for " + csv_path.string());
  }
  const auto meta = nlohmann::json::parse(side);
  SampleBatch batch{meta.at("mode") == "A" ? Party::A : Party::B,
                    meta.at("quadrature") == "X" ? Quadrature::X : Quadrature::P,
                    meta.at("seed").get<std::uint64_t>(),
                    {}};

  std::ifstream in(csv_path);
  if (!in) {
    throw std::ios_base::failure("cannot open " + csv_path.string());
  }
  std::string line;
  std::getline(in, line);
  if (line != "index,value") {
    throw std::runtime_error(fmt::format("{}:1: unexpected header '{}'",
                                         csv_path.string(), line));
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error(
          fmt::format("{}:{}: expected two fields", csv_path.string(), line_no));
    }
    try {
      batch.values.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw std::runtime_error(
          fmt::format("{}:{}: bad value", csv_path.string(), line_no));
    }
  }
  const auto expected = meta.at("count").get<std::size_t>();
  if (batch.count() != expected) {
    throw std::runtime_error(fmt::format("{}: sidecar says {} rows, found {}",
                                         csv_path.string(), expected, batch.count()));
  }
  return batch;
}

}  // namespace vclass
