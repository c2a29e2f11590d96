#include "tendonsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace tendonsim {

std::string_view to_string(StiffnessMode mode) {
  switch (mode) {
    case StiffnessMode::open_loop_analytic: return "open_loop_analytic";
    case StiffnessMode::open_loop_probe: return "open_loop_probe";
    case StiffnessMode::closed_loop_overall: return "closed_loop_overall";
    case StiffnessMode::closed_loop_transverse: return "closed_loop_transverse";
  }
  return "open_loop_probe";
}

Eigen::MatrixXd orthogonal_annihilator(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  if (n < 2) throw DomainError("orthogonal_annihilator: need at least two entries");
  if (!v.allFinite() || v.isZero(0.0)) throw DomainError("orthogonal_annihilator: vector must be finite and nonzero");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return q.rightCols(n - 1).transpose();
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a, double rcond) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? rcond * s(0) : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

namespace {

struct Split {
  double tau1;
  double tau2;
  bool feasible;
};

/// s = a tau1 + c tau2 with the smallest tau2 >= 0 such that tau1 + tau2 >= 0.
Split split_minimal(double s, double a, double c) {
  const double tau1_free = s / a;
  if (tau1_free >= 0.0) return {tau1_free, 0.0, true};
  const double gain = (a - c) / a;  // d(tau1 + tau2) / d tau2
  if (gain > 0.0) {
    const double tau2 = -tau1_free / gain;
    // u1 = tau1 + tau2 = 0 exactly on the minimal split.
    return {-tau2, tau2, true};
  }
  return {tau1_free, 0.0, false};
}

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

double homogeneous_torque(double theta, const RobotParams& params) {
  const double gravity = params.gravity ? params.alpha1 * std::sin(double(params.n) * theta) : 0.0;
  return gravity + params.alpha2 * theta;
}

}  // namespace

EquilibriumReport assignable_membership_general(const Eigen::VectorXd& q, const Eigen::VectorXd& grad_u,
                                                const Eigen::VectorXd& g0, const Eigen::VectorXd& g1,
                                                double tolerance) {
  const Eigen::Index n = q.size();
  if (grad_u.size() != n || g0.size() != n || g1.size() != n)
    throw DomainError("assignable_membership_general: size mismatch");
  if (!grad_u.allFinite() || !g0.allFinite() || !g1.allFinite())
    throw DomainError("assignable_membership_general: non-finite input");
  const double scale = std::max({1.0, grad_u.norm(), g0.norm()});
  EquilibriumReport rep;
  rep.q_bar = q;

  auto finish = [&](double tau1, double tau2, double matching) {
    rep.tau1 = tau1;
    rep.tau2 = tau2;
    rep.residual_norm = (grad_u - (g0 + g1) * tau1 - 2.0 * g1 * tau2).norm();
    rep.tensions_nonnegative = tau2 >= 0.0 && tau1 + tau2 >= 0.0;
    if (matching > tolerance * scale) {
      rep.assignable = false;
      rep.reason = "matching condition";
    } else if (tau2 < 0.0) {
      rep.assignable = false;
      rep.reason = "tension sign";
    } else {
      rep.assignable = true;
    }
  };

  if (g1.norm() <= 1e-14 * std::max(1.0, g0.norm())) {
    // g1 = 0 (the straight configuration): only g0 tau1 acts and any tau2 works.
    const double tau1 = g0.dot(grad_u) / g0.squaredNorm();
    const Split split{tau1, std::max(0.0, -tau1), true};
    finish(split.tau1, split.tau2, (grad_u - g0 * tau1).norm());
    if (rep.assignable) rep.reason = "g1 vanishes";
    return rep;
  }

  const Eigen::MatrixXd annihilator = orthogonal_annihilator(g1);
  const Eigen::VectorXd b = annihilator * g0;
  const Eigen::VectorXd w = annihilator * grad_u;

  if (b.norm() <= 1e-12 * g0.norm()) {
    const Eigen::VectorXd e = g1.normalized();
    const double s = e.dot(grad_u);
    const Split split = split_minimal(s, e.dot(g0 + g1), 2.0 * g1.norm());
    finish(split.tau1, split.tau2, w.norm());
    if (rep.assignable) rep.reason = "parallel input columns";
    return rep;
  }

  const double tau1 = b.dot(w) / b.squaredNorm();
  const double tau2 = (g1.dot(grad_u) - g1.dot(g0 + g1) * tau1) / (2.0 * g1.squaredNorm());
  finish(tau1, tau2, (w - b * tau1).norm());
  if (rep.assignable) rep.reason = "assignable";
  return rep;
}

EquilibriumReport assignable_membership_general(const Eigen::VectorXd& q, const Eigen::VectorXd& g0,
                                                const Eigen::VectorXd& g1, const RobotParams& params) {
  if (g1.norm() > 1e-14 * std::max(1.0, g0.norm())) {
    const Eigen::VectorXd b = orthogonal_annihilator(g1) * g0;
    if (b.norm() <= 1e-12 * g0.norm()) return assignable_membership(q, params);
  }
  return assignable_membership_general(q, potential_gradient(q, params), g0, g1);
}

double minimal_pretension(double theta, const RobotParams& params) {
  const double g1 = params.c2 * std::sin(theta);
  const double arm = bending_arm(g1, params);
  const Split split = split_minimal(homogeneous_torque(theta, params), arm, 2.0 * g1);
  return split.feasible ? split.tau2 : std::numeric_limits<double>::infinity();
}

EquilibriumReport homogeneous_membership(double theta, const RobotParams& params, std::optional<double> tau2) {
  if (!std::isfinite(theta) || std::abs(theta) > kHalfPi<double>)
    throw DomainError("homogeneous_membership: theta outside [-pi/2, pi/2]");
  if (tau2 && !(*tau2 >= 0.0)) throw DomainError("homogeneous_membership: tau2 must be >= 0");
  const Eigen::VectorXd q = Eigen::VectorXd::Constant(params.n, theta);
  const Eigen::VectorXd grad = potential_gradient(q, params);
  const Eigen::VectorXd diff = grad.head(params.n - 1) - grad.tail(params.n - 1);

  const double tau_n = homogeneous_torque(theta, params);
  const double g1 = params.c2 * std::sin(theta);
  const double arm = bending_arm(g1, params);

  EquilibriumReport rep;
  rep.q_bar = q;
  rep.residual_norm = inf_norm(diff);
  if (tau2) {
    rep.tau2 = *tau2;
    rep.tau1 = (tau_n - 2.0 * g1 * rep.tau2) / arm;
  } else {
    const Split split = split_minimal(tau_n, arm, 2.0 * g1);
    rep.tau1 = split.tau1;
    rep.tau2 = split.tau2;
  }
  rep.tensions_nonnegative = rep.tau2 >= 0.0 && rep.tau1 + rep.tau2 >= 0.0;
  rep.assignable = rep.residual_norm <= 1e-12 * std::max(1.0, inf_norm(grad));
  rep.reason = rep.assignable ? "homogeneous" : "matching condition";
  return rep;
}

EquilibriumReport assignable_membership(const Eigen::VectorXd& q, const RobotParams& params) {
  if (q.size() != params.n) throw DomainError("assignable_membership: q must have n entries");
  if (!in_feasible_set(q)) throw DomainError("assignable_membership: q outside the feasible set");
  const Eigen::VectorXd grad = potential_gradient(q, params);
  const Eigen::VectorXd diff = grad.head(q.size() - 1) - grad.tail(q.size() - 1);
  EquilibriumReport rep;
  rep.q_bar = q;
  rep.residual_norm = inf_norm(diff);
  if (rep.residual_norm > 1e-10 * std::max(1.0, inf_norm(grad))) {
    rep.reason = "matching condition";
    return rep;
  }
  const double g1 = moment_arm_modulation(q, params);
  const Split split = split_minimal(grad.mean(), bending_arm(g1, params), 2.0 * g1);
  rep.tau1 = split.tau1;
  rep.tau2 = split.tau2;
  rep.tensions_nonnegative = split.feasible;
  rep.assignable = true;
  rep.reason = "homogeneous";
  return rep;
}

OpenLoopStiffness open_loop_stiffness_analytic(double mu, const RobotParams& params, double l_n) {
  validate(params);
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw DomainError("open_loop_stiffness_analytic: mu must be >= 0");
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(params.n);
  const double offset = std::isnan(l_n) ? params.ell : l_n;
  const Eigen::MatrixXd jac = jacobian_tip_frame(q, params, offset);
  const Eigen::RowVectorXd j1 = jac.row(0);
  const double j1_sq = j1.squaredNorm();
  if (!(j1_sq > 0.0)) throw DomainError("open_loop_stiffness_analytic: transverse Jacobian vanishes");
  // At the straight configuration the axial row is zero, so only the
  // transverse column of the pseudoinverse is meaningful.
  const Eigen::VectorXd lift = pseudo_inverse(jac).col(0);
  const double base = (j1 * potential_hessian(q, params) * lift)(0) / j1_sq;
  const double slope = -(j1 * input_matrix_sum_jacobian(q, params) * lift)(0) / j1_sq;
  return {base + mu * slope, slope, slope != 0.0};
}

OverallStiffness overall_stiffness_matrix(const ControllerSpec& spec, const RobotParams& params) {
  const Eigen::Index n = params.n;
  const Eigen::VectorXd target = spec.target(n);
  OverallStiffness out;
  out.analytic = Eigen::MatrixXd::Constant(n, n, spec.gamma);
  out.analytic.diagonal().array() += params.alpha2;

  const double h = 1e-6;
  out.numeric.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXd qp = target, qm = target;
    qp(k) += h;
    qm(k) -= h;
    out.numeric.col(k) = (desired_potential_gradient(qp, spec, params) -
                          desired_potential_gradient(qm, spec, params)) / (2.0 * h);
  }
  out.max_relative_difference = ((out.numeric - out.analytic).cwiseAbs().array() /
                                 out.analytic.cwiseAbs().array()).maxCoeff();

  const Eigen::MatrixXd sym = 0.5 * (out.numeric + out.numeric.transpose());
  out.eigenvalues = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues();
  out.expected_eigenvalues = Eigen::VectorXd::Constant(n, params.alpha2);
  out.expected_eigenvalues(n - 1) += double(n) * spec.gamma;
  out.printed_eigenvalues = Eigen::VectorXd::Constant(n, params.alpha2);
  out.printed_eigenvalues(n - 1) += spec.gamma;  // |cos(0)| = 1

  char buf[320];
  std::snprintf(buf, sizeof buf,
                "largest eigenvalue of gamma*11^T + alpha2*I is alpha2 + n*gamma = %.6g "
                "(numeric %.6g); the form alpha2 + gamma*|cos| gives %.6g, off by a factor of n "
                "in the gamma term",
                out.expected_eigenvalues(n - 1), out.eigenvalues(n - 1), out.printed_eigenvalues(n - 1));
  out.discrepancy = buf;
  return out;
}

EquilibriumReport shifted_equilibrium(const Eigen::VectorXd& tau_ext, const ControllerSpec& spec,
                                      const RobotParams& params) {
  const Eigen::Index n = params.n;
  if (tau_ext.size() != n || !tau_ext.allFinite())
    throw DomainError("shifted_equilibrium: tau_ext must be a finite n-vector");
  const double tolerance = 1e-12;
  const int max_iterations = 50;
  Eigen::VectorXd q = spec.target(n);
  Eigen::VectorXd r = desired_potential_gradient(q, spec, params) - tau_ext;
  int it = 0;
  while (inf_norm(r) > tolerance) {
    if (it == max_iterations)
      throw SolverError("shifted_equilibrium: Newton did not converge", inf_norm(r), it);
    q -= desired_potential_hessian(q, spec, params).partialPivLu().solve(r);
    if (!q.allFinite()) throw SolverError("shifted_equilibrium: Newton diverged", inf_norm(r), it);
    r = desired_potential_gradient(q, spec, params) - tau_ext;
    ++it;
  }
  EquilibriumReport rep;
  rep.q_bar = q;
  rep.residual_norm = inf_norm(r);
  rep.iterations = it;
  const ControlOutput hold = control_law(State::at_rest(q), spec, params);
  rep.tau1 = hold.tau(0);
  rep.tau2 = hold.tau(1);
  rep.tensions_nonnegative = (hold.u.array() >= 0.0).all() && !hold.saturated;
  rep.assignable = true;
  rep.reason = "shifted";
  return rep;
}

AffineFit affine_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("affine_fit: need at least two paired points");
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), Eigen::Index(x.size()));
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), Eigen::Index(y.size()));
  const double mx = xv.mean(), my = yv.mean();
  const double sxx = (xv.array() - mx).square().sum();
  if (!(sxx > 0.0)) throw DomainError("affine_fit: sweep values are all equal");
  const double sxy = ((xv.array() - mx) * (yv.array() - my)).sum();
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("pearson: need at least two paired points");
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), Eigen::Index(x.size()));
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), Eigen::Index(y.size()));
  const Eigen::ArrayXd dx = xv.array() - xv.mean();
  const Eigen::ArrayXd dy = yv.array() - yv.mean();
  const double denom = std::sqrt(dx.square().sum() * dy.square().sum());
  if (!(denom > 0.0)) return 0.0;
  return std::clamp((dx * dy).sum() / denom, -1.0, 1.0);
}

double secant_deviation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("secant_deviation: need at least two points");
  const double x0 = x.front(), x1 = x.back(), y0 = y.front(), y1 = y.back();
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double line = y0 + (y1 - y0) * (x[i] - x0) / (x1 - x0);
    worst = std::max(worst, std::abs(y[i] - line));
    scale = std::max(scale, std::abs(y[i]));
  }
  return scale > 0.0 ? worst / scale : worst;
}

namespace {

void finish_fit(StiffnessReport& report) {
  if (report.stiffness_values.size() >= 2) {
    const AffineFit fit = affine_fit(report.sweep_values, report.stiffness_values);
    report.fit_slope = fit.slope;
    report.fit_intercept = fit.intercept;
    report.correlation = pearson(report.sweep_values, report.stiffness_values);
  }
}

}  // namespace

StiffnessReport open_loop_stiffness_sweep(const std::vector<double>& mus, const RobotParams& params,
                                          StiffnessMode mode, double delta_x, const ProbeOptions& options) {
  if (mode != StiffnessMode::open_loop_probe && mode != StiffnessMode::open_loop_analytic)
    throw DomainError("open_loop_stiffness_sweep: mode must be open-loop");
  StiffnessReport report;
  report.mode = mode;
  const double dx = delta_x > 0.0 ? delta_x : default_probe_displacement(params);
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(params.n);
  for (double mu : mus) {
    try {
      double k;
      if (mode == StiffnessMode::open_loop_analytic) {
        k = open_loop_stiffness_analytic(mu, params, options.l_n).stiffness;
      } else {
        if (!(mu >= 0.0)) throw DomainError("balanced tension must be >= 0");
        k = quasi_static_probe(origin, dx, open_loop_load(Eigen::Vector2d(mu, mu), params), params, options)
                .stiffness;
      }
      report.sweep_values.push_back(mu);
      report.stiffness_values.push_back(k);
    } catch (const std::exception& e) {
      report.partial = true;
      report.failure = "mu = " + std::to_string(mu) + ": " + e.what();
      break;
    }
  }
  finish_fit(report);
  return report;
}

StiffnessReport transverse_stiffness_sweep(const ControllerSpec& spec_base, const std::vector<double>& gammas,
                                           const RobotParams& params, double delta_x,
                                           const ProbeOptions& options) {
  StiffnessReport report;
  report.mode = StiffnessMode::closed_loop_transverse;
  report.operating_point = spec_base.theta_star;
  const double dx = delta_x > 0.0 ? delta_x : default_probe_displacement(params);
  for (double gamma : gammas) {
    try {
      ControllerSpec spec = spec_base;
      spec.gamma = gamma;
      validate(spec, params);
      const ProbeResult probe =
          quasi_static_probe(spec.target(params.n), dx, closed_loop_load(spec, params), params, options);
      report.sweep_values.push_back(gamma);
      report.stiffness_values.push_back(probe.stiffness);
    } catch (const std::exception& e) {
      report.partial = true;
      report.failure = "gamma = " + std::to_string(gamma) + ": " + e.what();
      break;
    }
  }
  finish_fit(report);
  return report;
}

namespace {

void put(std::ostream& out, double value, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  out << buf;
}

}  // namespace

void write_stiffness_csv(std::ostream& out, const StiffnessReport& report) {
  out << "sweep_value,stiffness\n";
  for (std::size_t i = 0; i < report.sweep_values.size(); ++i) {
    put(out, report.sweep_values[i], 17);
    out << ',';
    put(out, report.stiffness_values[i], 17);
    out << '\n';
  }
}

void write_summary(std::ostream& out, const StiffnessReport& report) {
  out << "mode: " << to_string(report.mode) << '\n';
  out << "operating_point_deg: ";
  put(out, rad2deg(report.operating_point), 6);
  out << "\npoints: " << report.sweep_values.size() << '\n';
  out << "fit_slope: ";
  put(out, report.fit_slope, 6);
  out << "\nfit_intercept: ";
  put(out, report.fit_intercept, 6);
  out << "\ncorrelation: ";
  put(out, report.correlation, 6);
  out << '\n';
  if (report.partial) out << "partial: " << report.failure << '\n';
}

void write_summary(std::ostream& out, const EquilibriumReport& report) {
  out << "assignable: " << (report.assignable ? "true" : "false") << " (" << report.reason << ")\n";
  out << "residual_norm: ";
  put(out, report.residual_norm, 6);
  out << "\ntau1: ";
  put(out, report.tau1, 6);
  out << "\ntau2: ";
  put(out, report.tau2, 6);
  out << "\ntensions_nonnegative: " << (report.tensions_nonnegative ? "true" : "false") << '\n';
}

}  // namespace tendonsim
