#include "vclass/fitting.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <ceres/ceres.h>
#include <fmt/format.h>

#include "vclass/criteria.hpp"
#include "vclass/errors.hpp"

namespace vclass {

namespace {

constexpr double kMaxExcessNoise = 1e4;

using Vec3 = Eigen::Vector3d;

constexpr double kParamClamp = 30.0;
constexpr int kMaxIterations = 500;
constexpr double kGradTol = 1e-6;

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

struct Physical {
  double eta_gamma, p_th_mw, t_plus_l;
};

// Smooth map from R^3 into the admissible box.
class Reparam {
 public:
  explicit Reparam(double max_pump) : max_pump_(max_pump) {}

  Physical decode(const Vec3& u) const {
    const Vec3 c = u.cwiseMax(-kParamClamp).cwiseMin(kParamClamp);
    const Physical p{logistic(c(0)), max_pump_ * (1.0 + std::exp(c(1))),
                     logistic(c(2))};
    if (!(p.eta_gamma > 0.0 && p.eta_gamma <= 1.0) || !(p.p_th_mw > max_pump_) ||
        !(p.t_plus_l > 0.0 && p.t_plus_l < 1.0)) {
      throw std::logic_error("fit iterate escaped its bounds");
    }
    return p;
  }

  Vec3 encode(const Physical& p) const {
    const double eg = std::clamp(p.eta_gamma, 1e-9, 1.0 - 1e-12);
    const double tl = std::clamp(p.t_plus_l, 1e-9, 1.0 - 1e-9);
    const double ratio = std::max(p.p_th_mw / max_pump_ - 1.0, 1e-9);
    const Vec3 u(logit(eg), std::log(ratio), logit(tl));
    return u.cwiseMax(-kParamClamp).cwiseMin(kParamClamp);
  }

 private:
  double max_pump_;
};

class Problem {
 public:
  Problem(const VarianceDataset& data, const FitFixed& fixed)
      : data_(data), fixed_(fixed) {
    double max_pump = 0.0;
    for (const auto& r : data.rows) max_pump = std::max(max_pump, r.pump_mw);
    reparam_.emplace(max_pump);
  }

  const Reparam& reparam() const { return *reparam_; }
  int evaluations() const { return evaluations_; }
  int residual_count() const { return 2 * static_cast<int>(data_.rows.size()); }

  void fill_residuals(const Vec3& u, double* r) const {
    ++evaluations_;
    const Physical p = reparam_->decode(u);
    for (std::size_t i = 0; i < data_.rows.size(); ++i) {
      const auto& row = data_.rows[i];
      const auto [sqz, asqz] =
          squeezer_model_db(row.pump_mw, p.eta_gamma, p.p_th_mw, p.t_plus_l, fixed_);
      const double w = std::sqrt(row.weight);
      r[2 * i] = w * (sqz - row.sqz_db);
      r[2 * i + 1] = w * (asqz - row.asqz_db);
    }
  }

  Eigen::VectorXd residuals(const Vec3& u) const {
    Eigen::VectorXd r(residual_count());
    fill_residuals(u, r.data());
    return r;
  }

  Eigen::MatrixXd jacobian(const Vec3& u) const {
    Eigen::MatrixXd j(residual_count(), 3);
    for (int k = 0; k < 3; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(u(k)));
      Vec3 up = u, down = u;
      up(k) += h;
      down(k) -= h;
      j.col(k) = (residuals(up) - residuals(down)) / (2.0 * h);
    }
    return j;
  }

 private:
  const VarianceDataset& data_;
  FitFixed fixed_;
  std::optional<Reparam> reparam_;
  mutable int evaluations_ = 0;
};

struct ResidualFunctor {
  const Problem* problem;

  bool operator()(const double* u, double* r) const {
    try {
      problem->fill_residuals(Vec3(u[0], u[1], u[2]), r);
      return true;
    } catch (const std::exception&) {
      return false;
    }
  }
};

// Objective after the initial point and after every accepted step.
class TraceRecorder : public ceres::IterationCallback {
 public:
  ceres::CallbackReturnType operator()(const ceres::IterationSummary& s) override {
    if (s.iteration == 0 || s.step_is_successful) trace.push_back(2.0 * s.cost);
    return ceres::SOLVER_CONTINUE;
  }

  std::vector<double> trace;
};

struct LocalFit {
  Vec3 u;
  double objective;
  int iterations;
  std::vector<double> trace;
};

LocalFit levenberg_marquardt(const Problem& problem, const Vec3& start) {
  std::array<double, 3> u{start(0), start(1), start(2)};
  ceres::Problem cp;
  cp.AddResidualBlock(
      new ceres::NumericDiffCostFunction<ResidualFunctor, ceres::CENTRAL, ceres::DYNAMIC, 3>(
          new ResidualFunctor{&problem}, ceres::TAKE_OWNERSHIP, problem.residual_count()),
      nullptr, u.data());
  for (int k = 0; k < 3; ++k) {
    cp.SetParameterLowerBound(u.data(), k, -kParamClamp);
    cp.SetParameterUpperBound(u.data(), k, kParamClamp);
  }

  ceres::Solver::Options options;
  options.trust_region_strategy_type = ceres::LEVENBERG_MARQUARDT;
  options.linear_solver_type = ceres::DENSE_QR;
  options.max_num_iterations = kMaxIterations;
  options.function_tolerance = 1e-16;
  options.gradient_tolerance = 1e-16;
  options.parameter_tolerance = 1e-14;
  options.num_threads = 1;
  options.logging_type = ceres::SILENT;
  TraceRecorder recorder;
  options.callbacks.push_back(&recorder);

  ceres::Solver::Summary summary;
  ceres::Solve(options, &cp, &summary);
  return {Vec3(u[0], u[1], u[2]), 2.0 * summary.final_cost,
          summary.num_successful_steps + summary.num_unsuccessful_steps,
          std::move(recorder.trace)};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void VarianceDataset::validate() const {
  std::set<double> pumps;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!(r.pump_mw > 0.0) || !std::isfinite(r.pump_mw)) {
      throw std::invalid_argument(fmt::format("row {}: pump must be positive", i + 1));
    }
    if (!std::isfinite(r.sqz_db) || !std::isfinite(r.asqz_db)) {
      throw std::invalid_argument(fmt::format("row {}: dB values must be finite", i + 1));
    }
    if (!(r.weight > 0.0) || !std::isfinite(r.weight)) {
      throw std::invalid_argument(fmt::format("row {}: weight must be positive", i + 1));
    }
    if (!pumps.insert(r.pump_mw).second) {
      throw std::invalid_argument(
          fmt::format("row {}: duplicate pump value {}", i + 1, r.pump_mw));
    }
  }
}

VarianceDataset parse_variance_csv(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  bool has_weight = false;
  VarianceDataset data;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cells = split_csv(t);
    if (!have_header) {
      const std::vector<std::string> base{"pump_mw", "sqz_db", "asqz_db"};
      const bool ok3 = cells.size() == 3 && cells == base;
      const bool ok4 = cells.size() == 4 &&
                       std::equal(base.begin(), base.end(), cells.begin()) &&
                       cells[3] == "weight";
      if (!ok3 && !ok4) {
        throw std::invalid_argument(fmt::format(
            "line {}: expected header pump_mw,sqz_db,asqz_db[,weight]", line_no));
      }
      has_weight = ok4;
      have_header = true;
      continue;
    }
    const std::size_t expected = has_weight ? 4 : 3;
    if (cells.size() != expected) {
      throw std::invalid_argument(fmt::format("line {}: expected {} fields, got {}",
                                              line_no, expected, cells.size()));
    }
    std::array<double, 4> v{0.0, 0.0, 0.0, 1.0};
    for (std::size_t k = 0; k < expected; ++k) {
      std::size_t used = 0;
      try {
        v[k] = std::stod(cells[k], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cells[k].size()) {
        throw std::invalid_argument(
            fmt::format("line {}: field {} is not a number: '{}'", line_no, k + 1, cells[k]));
      }
    }
    data.rows.push_back({v[0], v[1], v[2], v[3]});
    try {
      data.validate();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  if (!have_header) {
    throw std::invalid_argument("dataset is empty");
  }
  return data;
}

VarianceDataset read_variance_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::ios_base::failure("cannot open dataset " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_variance_csv(buf.str());
}

std::pair<double, double> squeezer_model_db(double pump_mw, double eta_gamma,
                                            double p_th_mw, double t_plus_l,
                                            const FitFixed& fixed) {
  SourceParams p;
  p.eta = eta_gamma;
  p.gamma = 1.0;
  p.pump_mw = pump_mw;
  p.p_th_mw = p_th_mw;
  p.t_coupler = t_plus_l;
  p.intracavity_loss = 0.0;
  p.roundtrip_m = fixed.roundtrip_m;
  p.freq_hz = fixed.freq_hz;
  const auto v = squeezer_variances(p);
  return {to_db(v.v_sqz), to_db(v.v_asqz)};
}

FitResult fit_squeezer_model(const VarianceDataset& data, const FitFixed& fixed,
                             std::optional<FitResult> init) {
  data.validate();
  if (data.rows.size() < 3) {
    throw std::invalid_argument(
        fmt::format("fit needs at least 3 rows, got {}", data.rows.size()));
  }
  Problem problem(data, fixed);
  const double max_pump =
      std::max_element(data.rows.begin(), data.rows.end(),
                       [](const auto& a, const auto& b) { return a.pump_mw < b.pump_mw; })
          ->pump_mw;

  std::vector<Physical> starts;
  if (init) {
    starts.push_back({init->eta_gamma, init->p_th_mw, init->t_plus_l});
  } else {
    starts.push_back({0.9, 1.2 * max_pump, 0.105});
  }
  for (double eg : {0.7, 0.95}) {
    for (double pth : {1.2, 2.5}) {
      for (double tl : {0.05, 0.2}) {
        starts.push_back({eg, pth * max_pump, tl});
      }
    }
  }

  std::optional<LocalFit> best;
  for (const auto& s : starts) {
    LocalFit local = levenberg_marquardt(problem, problem.reparam().encode(s));
    if (!best || local.objective < best->objective) best = std::move(local);
  }

  const Eigen::MatrixXd j = problem.jacobian(best->u);
  const Eigen::VectorXd r = problem.residuals(best->u);
  const Physical p = problem.reparam().decode(best->u);

  const double weight_sum = std::accumulate(
      data.rows.begin(), data.rows.end(), 0.0,
      [](double acc, const VarianceRow& row) { return acc + row.weight; });

  FitResult out;
  out.eta_gamma = p.eta_gamma;
  out.p_th_mw = p.p_th_mw;
  out.t_plus_l = p.t_plus_l;
  out.objective = best->objective;
  out.residual_rms_db = std::sqrt(best->objective / (2.0 * weight_sum));
  out.gradient_norm = 2.0 * (j.transpose() * r).norm();
  out.iterations = best->iterations;
  out.evaluations = problem.evaluations();
  out.converged = out.gradient_norm < kGradTol;
  out.objective_trace = std::move(best->trace);
  return out;
}

double condvar_p_with_noise(const SourceParams& params, double mu,
                            NoiseLocation location, Quadrature quadrature,
                            double eps) {
  const GaussianState state =
      build_vclass_state(params, mu, mu, ExcessNoise{location, quadrature, eps});
  return conditional_variance(extract_two_mode_stats(state, 0, 1), quadrature,
                              Direction::AGivenB)
      .value;
}

double fit_excess_noise(const SourceParams& params, double mu,
                        double target_condvar, NoiseLocation location,
                        Quadrature quadrature) {
  if (!(target_condvar > 0.0)) {
    throw std::invalid_argument("target conditional variance must be positive");
  }
  auto f = [&](double eps) {
    return condvar_p_with_noise(params, mu, location, quadrature, eps);
  };
  const double base = f(0.0);
  if (std::abs(target_condvar - base) <= 1e-12 * std::max(1.0, base)) return 0.0;
  if (target_condvar < base) {
    throw InfeasibleTargetError(fmt::format(
        "target {:.12g} is below the noiseless conditional variance {:.12g}",
        target_condvar, base));
  }
  double lo = 0.0;
  double hi = 1.0;
  while (f(hi) < target_condvar) {
    lo = hi;
    hi *= 2.0;
    if (hi > kMaxExcessNoise) {
      throw InfeasibleTargetError(fmt::format(
          "target {:.12g} not reachable with excess noise up to {:g}", target_condvar,
          kMaxExcessNoise));
    }
  }
  while (hi - lo > 1e-14 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < target_condvar) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace vclass
