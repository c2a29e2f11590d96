#pragma once

#include <cmath>
#include <string>

#include "tendonsim/errors.hpp"
#include "tendonsim/types.hpp"

namespace tendonsim {

/// Physical and model constants of one planar section with n rigid links.
///
/// Units: lengths in m, mass in kg, alpha1/alpha2 in N.m (per rad for
/// alpha2), c1/c2 in m (moment arms), d in N.m.s/rad.
struct RobotParams {
  int n = 6;
  double ell = 0.021;       // half link length
  double r = 0.025;         // beam radius
  double m = 0.05;          // per-link mass
  double alpha1 = 8.6114;   // gravity coefficient
  double alpha2 = 0.001;    // elastic stiffness coefficient
  double c1 = 1.2143;       // constant moment arm g0
  double c2 = -2.9015;      // moment arm modulation
  double d = 0.004;         // per-joint viscous damping
  double k_elastic = 0.2;   // spring elongation coefficient k_i
  double k_bend = 2.868e-4; // spring bending coefficient k_i'
  double u0 = 0.0;          // elastic energy offset
  bool gravity = true;

  bool operator==(const RobotParams&) const = default;
};

/// Largest |theta| over which the moment arm c1 + c2 sin(theta) is required
/// to keep its sign. Matches the small-angle working range of the links.
inline constexpr double kMomentArmEnvelope = kPi<double> / 12.0;

inline void validate(const RobotParams& p) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw DomainError("RobotParams: " + what);
  };
  require(p.n >= 2, "n >= 2");
  for (double v : {p.ell, p.r, p.m, p.alpha1, p.alpha2, p.c1, p.c2, p.d,
                   p.k_elastic, p.k_bend, p.u0}) {
    require(std::isfinite(v), "all constants finite");
  }
  require(p.ell > 0, "ell > 0");
  require(p.r > 0, "r > 0");
  require(p.m > 0, "m > 0");
  require(p.alpha1 > 0, "alpha1 > 0");
  require(p.alpha2 > 0, "alpha2 > 0");
  require(p.d >= 0, "d >= 0");
  require(p.k_elastic >= 0 && p.k_bend >= 0, "elastic coefficients >= 0");
  // c1 + c2 sin(theta) is monotone in sin(theta), so the envelope endpoints decide.
  const double swing = std::abs(p.c2) * std::sin(kMomentArmEnvelope);
  require(p.c1 != 0.0 && std::abs(p.c1) > swing,
          "c1 + c2 sin(theta) != 0 for |theta| <= pi/12");
}

namespace presets {

/// Identified constants of the six-segment platform (c1, c2, alpha1, alpha2)
/// with nominal geometry. alpha1 and the moment arms are in the platform's
/// calibrated units, so this set is used for statics, identification and
/// closed-loop studies (the closed loop does not depend on alpha1).
inline RobotParams identified() { return RobotParams{}; }

/// Same platform with a stiffer elastic term so that the conservative
/// convexity bound alpha2 / n equals 0.1.
inline RobotParams convex_synthetic() {
  RobotParams p;
  p.alpha2 = 0.6;
  p.k_bend = 0.3 - p.k_elastic * (p.ell * p.ell + p.r * p.r);
  return p;
}

/// Physically scaled desk model: alpha1 = ell * m * g, moment arms of the
/// order of the beam radius. Low enough modal frequencies for dt = 1e-3 RK4.
inline RobotParams desk_scale() {
  RobotParams p;
  p.alpha1 = p.ell * p.m * 9.81;
  p.alpha2 = 0.002;
  p.c1 = 0.025;
  p.c2 = -0.06;
  p.d = 5e-4;
  p.k_bend = 0.001 - p.k_elastic * (p.ell * p.ell + p.r * p.r);
  return p;
}

/// Desk model with an elastic spine that dominates gravity and tendon
/// stiffening; used for open-loop stiffness probing.
inline RobotParams stiff_spine() {
  RobotParams p = desk_scale();
  p.alpha2 = 50.0;
  p.k_bend = 25.0 - p.k_elastic * (p.ell * p.ell + p.r * p.r);
  return p;
}

}  // namespace presets
}  // namespace tendonsim
