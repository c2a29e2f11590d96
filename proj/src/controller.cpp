#include "tendonsim/controller.hpp"

#include <cmath>
#include <limits>

namespace tendonsim {

std::string_view to_string(SaturationPolicy policy) {
  switch (policy) {
    case SaturationPolicy::clamp: return "clamp";
    case SaturationPolicy::strict: return "strict";
    case SaturationPolicy::monitor: return "monitor";
  }
  return "clamp";
}

SaturationPolicy saturation_policy_from_string(std::string_view name) {
  if (name == "clamp") return SaturationPolicy::clamp;
  if (name == "strict") return SaturationPolicy::strict;
  if (name == "monitor") return SaturationPolicy::monitor;
  throw DomainError("unknown saturation policy '" + std::string(name) + "'");
}

ControllerSpec ControllerSpec::with_scalar_damping(int n, double theta_star, double tau2_star,
                                                   double gamma, double kd,
                                                   SaturationPolicy saturation) {
  ControllerSpec spec;
  spec.theta_star = theta_star;
  spec.tau2_star = tau2_star;
  spec.gamma = gamma;
  spec.kd = kd * Eigen::MatrixXd::Identity(n, n);
  spec.saturation = saturation;
  return spec;
}

void validate(const ControllerSpec& spec, const RobotParams& params) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw DomainError("ControllerSpec: " + what);
  };
  require(std::isfinite(spec.theta_star) && std::abs(spec.theta_star) <= kHalfPi<double>,
          "theta_star within [-pi/2, pi/2]");
  require(std::isfinite(spec.tau2_star) && spec.tau2_star >= 0.0, "tau2_star >= 0");
  require(std::isfinite(spec.gamma) && spec.gamma > 0.0, "gamma > 0");
  require(spec.kd.rows() == params.n && spec.kd.cols() == params.n, "kd must be n x n");
  require(spec.kd.allFinite(), "kd finite");
  const double scale = std::max(1.0, spec.kd.cwiseAbs().maxCoeff());
  require((spec.kd - spec.kd.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "kd symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spec.kd, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues().minCoeff() > 0.0, "kd positive definite");
}

namespace {

struct LawTerms {
  Eigen::Vector2d tau_st, tau_es, tau_da;
  double arm;
  double g1;
};

LawTerms law_terms(const State& state, const ControllerSpec& spec, const RobotParams& params) {
  const Eigen::Index n = state.q.size();
  const double g1 = moment_arm_modulation(state.q, params);
  const double arm = bending_arm(g1, params);
  // grad U - grad U_d lies along 1_n for homogeneous targets, so G_N tau_N
  // replaces grad U by grad U_d exactly.
  const Eigen::VectorXd mismatch =
      potential_gradient(state.q, params) - desired_potential_gradient(state.q, spec, params);
  Eigen::LLT<Eigen::MatrixXd> llt(inertia_matrix(state.q, params));
  const Eigen::VectorXd v = llt.solve(state.p);
  LawTerms terms;
  terms.g1 = g1;
  terms.arm = arm;
  terms.tau_st = Eigen::Vector2d(-2.0 * g1 / arm * spec.tau2_star, spec.tau2_star);
  terms.tau_es = Eigen::Vector2d(mismatch.sum() / double(n) / arm, 0.0);
  terms.tau_da = Eigen::Vector2d(-(spec.kd * v).sum() / arm, 0.0);
  return terms;
}

}  // namespace

ControlOutput control_law(const State& state, const ControllerSpec& spec, const RobotParams& params) {
  if (!is_finite(state)) throw DomainError("control_law: non-finite state");
  const LawTerms terms = law_terms(state, spec, params);
  ControlOutput out;
  out.tau_st = terms.tau_st;
  out.tau_es = terms.tau_es;
  out.tau_da = terms.tau_da;
  out.tau = terms.tau_st + terms.tau_es + terms.tau_da;
  out.u = input_transform_inverse(out.tau);

  // u1 = tau2* (c1 - g1) / (c1 + g1) + (tau_es + tau_da)_1 is affine in tau2*.
  const double rest = terms.tau_es(0) + terms.tau_da(0);
  const double slope = (params.c1 - terms.g1) / terms.arm;
  if (rest >= 0.0) {
    out.tau2_min_required = 0.0;
  } else if (slope > 0.0) {
    out.tau2_min_required = -rest / slope;
  } else {
    out.tau2_min_required = std::numeric_limits<double>::infinity();
  }

  if ((out.u.array() < 0.0).any()) {
    out.saturated = true;
    switch (spec.saturation) {
      case SaturationPolicy::clamp:
        out.u = out.u.cwiseMax(0.0);
        break;
      case SaturationPolicy::strict:
        throw SaturationViolation("control law requested negative tension u = (" +
                                  std::to_string(out.u(0)) + ", " + std::to_string(out.u(1)) + ")");
      case SaturationPolicy::monitor:
        break;
    }
  }
  return out;
}

Eigen::VectorXd closed_loop_tendon_torque(const State& state, const ControllerSpec& spec,
                                          const RobotParams& params) {
  const LawTerms terms = law_terms(state, spec, params);
  const Eigen::Vector2d u = input_transform_inverse(terms.tau_st + terms.tau_es + terms.tau_da);
  return tendon_torque(state.q, u, params);
}

Eigen::MatrixXd differencing_annihilator(Eigen::Index n) {
  if (n < 2) throw DomainError("differencing_annihilator: n >= 2");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n - 1, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    a(i, i) = 1.0;
    a(i, i + 1) = -1.0;
  }
  return a;
}

Eigen::VectorXd matching_residual(const Eigen::VectorXd& q, const ControllerSpec& spec,
                                  const RobotParams& params) {
  const Eigen::VectorXd mismatch = potential_gradient(q, params) - desired_potential_gradient(q, spec, params);
  // Adjacent differences, i.e. the banded annihilator applied without forming it.
  return mismatch.head(q.size() - 1) - mismatch.tail(q.size() - 1);
}

ConvexityBound convexity_bound(const ControllerSpec& spec, const RobotParams& params) {
  ConvexityBound b;
  b.stated = params.alpha2;
  b.conservative = params.alpha2 / double(params.n);
  b.satisfies_stated = spec.gamma < b.stated;
  b.satisfies_conservative = spec.gamma < b.conservative;
  return b;
}

double shaped_hamiltonian(const State& state, const ControllerSpec& spec, const RobotParams& params) {
  return kinetic_energy(state, params) + desired_potential(state.q, spec, params);
}

ControlSource feedback(const ControllerSpec& spec, const RobotParams& params) {
  validate(params);
  validate(spec, params);
  ControlSource source;
  source.law = [spec, params](double, const State& s) {
    const ControlOutput out = control_law(s, spec, params);
    return ControlSample{out.u, out.saturated, out.tau2_min_required};
  };
  source.shaped_energy = [spec, params](const State& s) { return shaped_hamiltonian(s, spec, params); };
  source.allow_negative_tension = spec.saturation == SaturationPolicy::monitor;
  source.passive = true;
  source.label = "feedback";
  return source;
}

StaticLoad closed_loop_load(const ControllerSpec& spec, const RobotParams& params) {
  StaticLoad load;
  load.force = [spec, params](const Eigen::VectorXd& q) -> Eigen::VectorXd {
    return -desired_potential_gradient(q, spec, params);
  };
  load.jacobian = [spec, params](const Eigen::VectorXd& q) -> Eigen::MatrixXd {
    return -desired_potential_hessian(q, spec, params);
  };
  return load;
}

}  // namespace tendonsim
