#pragma once

#include <optional>

#include "tendonsim/errors.hpp"
#include "tendonsim/types.hpp"

namespace tendonsim {

/// Joint angles q (rad) and generalized momenta p of the n-link chain.
struct State {
  Eigen::VectorXd q;
  Eigen::VectorXd p;

  static State at_rest(const Eigen::VectorXd& q) {
    return State{q, Eigen::VectorXd::Zero(q.size())};
  }

  bool operator==(const State& o) const {
    return q.size() == o.q.size() && p.size() == o.p.size() && q == o.q && p == o.p;
  }
};

inline bool is_finite(const State& s) { return s.q.allFinite() && s.p.allFinite(); }

/// Every joint angle inside [-pi/2, pi/2].
template <typename Derived>
bool in_feasible_set(const Eigen::MatrixBase<Derived>& q) {
  using Scalar = typename Derived::Scalar;
  return q.allFinite() && (q.array().abs() <= kHalfPi<Scalar>).all();
}

inline void validate(const State& s, int n) {
  if (s.q.size() != n || s.p.size() != n) throw DomainError("State: q and p must have n entries");
  if (!is_finite(s)) throw DomainError("State: non-finite entry");
  if (!in_feasible_set(s.q)) throw DomainError("State: joint angle outside [-pi/2, pi/2]");
}

/// External load: either joint torques or a planar tip force applied at
/// offset l_n from the centre of the last link.
struct Wrench {
  std::optional<Eigen::VectorXd> tau_ext;
  std::optional<Eigen::Vector2d> f_tip;
  double l_n = 0.0;
};

inline void validate(const Wrench& w) {
  if (w.tau_ext.has_value() == w.f_tip.has_value())
    throw DomainError("Wrench: exactly one of tau_ext / f_tip must be set");
  if (w.tau_ext && !w.tau_ext->allFinite()) throw DomainError("Wrench: non-finite torque");
  if (w.f_tip && (!w.f_tip->allFinite() || !std::isfinite(w.l_n)))
    throw DomainError("Wrench: non-finite tip force");
}

}  // namespace tendonsim
