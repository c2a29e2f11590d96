#include "tendonsim/ident.hpp"

#include "tendonsim/analysis.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace tendonsim {

std::string_view to_string(IdentParameter p) {
  switch (p) {
    case IdentParameter::alpha1: return "alpha1";
    case IdentParameter::alpha2: return "alpha2";
    case IdentParameter::c1: return "c1";
    case IdentParameter::c2: return "c2";
  }
  return "c1";
}

IdentParameter ident_parameter_from_string(std::string_view name) {
  if (name == "alpha1") return IdentParameter::alpha1;
  if (name == "alpha2") return IdentParameter::alpha2;
  if (name == "c1") return IdentParameter::c1;
  if (name == "c2") return IdentParameter::c2;
  throw DomainError("unknown identification parameter '" + std::string(name) + "'");
}

namespace {

// Regressor row for (alpha1, alpha2, c1, c2).
std::array<double, 4> regressor(const StaticSample& s, int n) {
  const double st = std::sin(s.theta);
  return {std::sin(double(n) * s.theta), s.theta, -(s.u1 - s.u2), -st * (s.u1 + s.u2)};
}

}  // namespace

double static_residual(const StaticSample& sample, int n, double alpha1, double alpha2, double c1, double c2) {
  const auto row = regressor(sample, n);
  return row[0] * alpha1 + row[1] * alpha2 + row[2] * c1 + row[3] * c2;
}

StaticDataset generate_static_dataset(const RobotParams& params, const DatasetSpec& spec) {
  validate(params);
  if (spec.thetas.empty()) throw DomainError("generate_static_dataset: no angles");
  if (spec.repeats < 1) throw DomainError("generate_static_dataset: repeats >= 1");
  if (spec.tau2.size() != 1 && spec.tau2.size() != spec.thetas.size())
    throw DomainError("generate_static_dataset: tau2 must have one entry or one per angle");
  for (double t2 : spec.tau2)
    if (!(t2 >= 0.0) || !std::isfinite(t2)) throw DomainError("generate_static_dataset: tau2 must be >= 0");
  if (!(spec.noise.sigma >= 0.0) || !(spec.noise.relative >= 0.0))
    throw DomainError("generate_static_dataset: noise levels must be >= 0");

  std::mt19937_64 rng(spec.noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool noisy = spec.noise.sigma > 0.0 || spec.noise.relative > 0.0;
  auto perturb = [&](double u) {
    if (!noisy) return u;
    const double a = normal(rng);
    const double b = normal(rng);
    return std::max(0.0, u * (1.0 + spec.noise.relative * a) + spec.noise.sigma * b);
  };

  const double n = double(params.n);
  StaticDataset out;
  for (int rep = 0; rep < spec.repeats; ++rep) {
    for (std::size_t j = 0; j < spec.thetas.size(); ++j) {
      const double theta = spec.thetas[j];
      if (!std::isfinite(theta) || std::abs(theta) > kHalfPi<double>)
        throw DomainError("generate_static_dataset: angle outside [-pi/2, pi/2]");
      const double tau2 = spec.tau2.size() == 1 ? spec.tau2[0] : spec.tau2[j];
      const double g1 = params.c2 * std::sin(theta);
      const double arm = bending_arm(g1, params);
      const double gravity = params.gravity ? params.alpha1 * std::sin(n * theta) : 0.0;
      const double tau_n = gravity + params.alpha2 * theta;
      const double tau1 = (tau_n - 2.0 * g1 * tau2) / arm;
      double u1 = tau1 + tau2;
      if (u1 < 0.0) {
        const double tau2_min = minimal_pretension(theta, params);
        if (tau2 < tau2_min) {
          out.rejected.push_back({theta, tau2, tau2_min, rep});
          continue;
        }
        u1 = 0.0;  // at the minimal pretension, up to rounding
      }
      const double n1 = perturb(u1);
      const double n2 = perturb(tau2);
      out.samples.push_back({theta, n1, n2, rep});
    }
  }
  return out;
}

IdentResult fit_parameters(const std::vector<StaticSample>& dataset, int n, const IdentAnchor& anchor) {
  if (n < 2) throw DomainError("fit_parameters: n >= 2");
  if (dataset.size() < 4) throw DomainError("fit_parameters: need at least four samples");
  if (!std::isfinite(anchor.value) || anchor.value == 0.0)
    throw DomainError("fit_parameters: anchor value must be finite and nonzero");
  const int fixed = static_cast<int>(anchor.parameter);

  const Eigen::Index rows = Eigen::Index(dataset.size());
  Eigen::MatrixXd a(rows, 3);
  Eigen::VectorXd rhs(rows);
  std::array<int, 3> free_index{};
  for (int k = 0, c = 0; k < 4; ++k)
    if (k != fixed) free_index[c++] = k;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const StaticSample& s = dataset[std::size_t(i)];
    if (!std::isfinite(s.theta) || !std::isfinite(s.u1) || !std::isfinite(s.u2))
      throw DomainError("fit_parameters: non-finite sample");
    const auto row = regressor(s, n);
    for (int c = 0; c < 3; ++c) a(i, c) = row[std::size_t(free_index[std::size_t(c)])];
    rhs(i) = -row[std::size_t(fixed)] * anchor.value;
  }

  // Rank check on the column-normalized regressor so units do not matter.
  const Eigen::VectorXd norms = a.colwise().norm().transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a * norms.cwiseMax(1e-300).cwiseInverse().asDiagonal(),
                                        Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (norms.minCoeff() == 0.0 || sv(2) <= 1e-10 * sv(0)) {
    const Eigen::VectorXd dir = svd.matrixV().col(2);
    std::set<double> distinct;
    for (const auto& s : dataset) distinct.insert(s.theta);
    std::ostringstream msg;
    msg << "fit_parameters: regressor is rank deficient along";
    for (int c = 0; c < 3; ++c) {
      char buf[48];
      std::snprintf(buf, sizeof buf, " %+.3g*%s", dir(c),
                    std::string(to_string(IdentParameter(free_index[std::size_t(c)]))).c_str());
      msg << buf;
    }
    msg << " (" << distinct.size() << " distinct angles)";
    throw DomainError(msg.str());
  }

  const Eigen::VectorXd x = a.colPivHouseholderQr().solve(rhs);
  std::array<double, 4> p{};
  p[std::size_t(fixed)] = anchor.value;
  for (int c = 0; c < 3; ++c) p[std::size_t(free_index[std::size_t(c)])] = x(c);

  IdentResult res;
  res.alpha1_hat = p[0];
  res.alpha2_hat = p[1];
  res.c1_hat = p[2];
  res.c2_hat = p[3];
  res.anchor = anchor;
  res.samples = dataset.size();
  double sq = 0.0;
  for (const auto& s : dataset) {
    const double r = static_residual(s, n, p[0], p[1], p[2], p[3]);
    sq += r * r;
  }
  res.residual_rms = std::sqrt(sq / double(dataset.size()));
  res.sign_ok = res.alpha1_hat > 0.0 && res.alpha2_hat > 0.0 && res.c1_hat > 0.0 && res.c2_hat < 0.0;
  return res;
}

namespace {

void put(std::ostream& out, double value, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  out << buf;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const std::vector<StaticSample>& dataset) {
  out << "theta_rad,u1_N,u2_N,repeat\n";
  for (const auto& s : dataset) {
    put(out, s.theta, 17);
    out << ',';
    put(out, s.u1, 17);
    out << ',';
    put(out, s.u2, 17);
    out << ',' << s.repeat_index << '\n';
  }
}

std::vector<StaticSample> read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("dataset CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "theta_rad,u1_N,u2_N,repeat")
    throw DomainError("dataset CSV: expected header theta_rad,u1_N,u2_N,repeat");
  std::vector<StaticSample> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string field[4];
    for (auto& f : field) std::getline(row, f, ',');
    try {
      out.push_back({std::stod(field[0]), std::stod(field[1]), std::stod(field[2]), std::stoi(field[3])});
    } catch (const std::exception&) {
      throw DomainError("dataset CSV: malformed row at line " + std::to_string(lineno));
    }
    const auto& s = out.back();
    if (!(s.u1 >= 0.0) || !(s.u2 >= 0.0) || !(std::abs(s.theta) <= kHalfPi<double>))
      throw DomainError("dataset CSV: sample out of range at line " + std::to_string(lineno));
  }
  return out;
}

void write_summary(std::ostream& out, const IdentResult& result) {
  auto kv = [&](const char* key, double v) {
    out << key << ": ";
    put(out, v, 6);
    out << '\n';
  };
  kv("c1_hat", result.c1_hat);
  kv("c2_hat", result.c2_hat);
  kv("alpha1_hat", result.alpha1_hat);
  kv("alpha2_hat", result.alpha2_hat);
  kv("residual_rms", result.residual_rms);
  out << "sign_ok: " << (result.sign_ok ? "true" : "false") << '\n';
  out << "anchor: " << to_string(result.anchor.parameter) << " = ";
  put(out, result.anchor.value, 6);
  out << "\nsamples: " << result.samples << '\n';
}

}  // namespace tendonsim
