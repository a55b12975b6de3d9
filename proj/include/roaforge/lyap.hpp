// Ellipsoidal initial region of attraction around the origin: a common
// quadratic certificate across the linearization vertices, with the
// nonlinear remainder absorbed through grid-estimated coefficients. Also
// the closed-form quadratic region for the scalar-gain polynomial system.
#pragma once

#include <string>

#include "roaforge/dynamics.hpp"
#include "roaforge/geometry.hpp"
#include "roaforge/linalg.hpp"

namespace roaforge {

struct EllipsoidDiagnostics {
  Vec eta;               // per-coordinate remainder coefficients
  double e1 = 0.0;       // quadratic remainder gain
  double e2 = 0.0;       // cross-term gain
  double d = 0.0;        // certified decrease after the epsilon haircut
  double k1 = 0.0;       // remainder-limited level
  double k2 = 0.0;       // box-containment-limited level
  double min_q_eig = 0.0;
  int anchor = -1;       // -1: vertex average; >= 0: vertex index used for P
  bool sound = false;    // true only for closed-form constructions
};

struct EllipsoidRoa {
  Mat P;                 // nu(x) = x' P x
  double c1 = 0.0;       // certified sublevel: E_c1 = {nu <= c1}
  double epsilon = 0.0;  // one-step decrease margin inside E_c1
  BoxSet domain_b;       // box the construction was run over
  EllipsoidDiagnostics diagnostics;
};

// Remainder-limited level from the decrease inequality; the e1 = 0 limit
// (linear dynamics) removes the constraint entirely.
double k1_level(double e1, double e2, double d);

// Guaranteed per-step contraction factor of nu inside E_c1.
double decay_factor(const EllipsoidRoa& roa);

// Builds the quadratic certificate over box b (which must contain the
// origin in its interior): solves the discrete Lyapunov equation anchored
// at the vertex-average Jacobian, falling back to each vertex in turn until
// P - A_i' P A_i is positive definite at every vertex. Remainder and
// cross-term coefficients are maximized over a dense grid (grid points per
// axis, also over W) and inflated by 10%; diagnostics.sound stays false
// because of that estimation step. Throws NumericError when no anchor
// yields a common certificate or the resulting level is not positive.
EllipsoidRoa build_ellipsoid_roa(const SystemSpec& sys, const BoxSet& b, int grid = 41);

// Closed-form region for the cosine-gain polynomial system: nu = |x|^2 and
// c1 = min{1/w_min - eps, -w_max + sqrt(w_max^2 + 2)}. The two candidate
// levels are reported as k2/k1 respectively; sound is true.
EllipsoidRoa cospoly_analytic_roa(double w_min, double w_max, double eps);

void write_ellipsoid_json(const std::string& path, const EllipsoidRoa& roa);
EllipsoidRoa read_ellipsoid_json(const std::string& path);

}  // namespace roaforge
