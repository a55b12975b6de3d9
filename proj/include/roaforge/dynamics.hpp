// The four benchmark uncertain systems: closed-form steps, exact one-step
// set images F({x}), disturbance signals, trajectories, safe-set functions,
// and the alpha/gamma ingredients of the value construction.
#pragma once

#include <optional>
#include <string>

#include "roaforge/geometry.hpp"
#include "roaforge/linalg.hpp"

namespace roaforge {

enum class SystemId { TwoMachine, CosPoly, RigidRod, Rational };

std::string system_name(SystemId id);
SystemId system_from_name(const std::string& name);

struct DisturbanceBox {
  Vec lo;
  Vec hi;
};

enum class GammaKind { Constant1, SublevelSum, SublevelMax };
enum class AlphaKind { ScaledNu, NormPow4, DistPow };

struct SystemSpec {
  SystemId id;
  int n = 0;
  int m = 1;
  double dt = 1.0;
  DisturbanceBox W;
  GammaKind gamma_kind = GammaKind::Constant1;
  double gamma0 = 1.0;
  AlphaKind alpha_kind = AlphaKind::ScaledNu;
  double alpha_c = 0.1;    // ScaledNu scale
  double alpha_p = 2.0;    // DistPow exponent
  std::optional<Mat> P;    // quadratic form for ScaledNu; set by the pipeline
  EmbeddingKind embedding = EmbeddingKind::IntervalCenterRadius;

  // TwoMachine: which state the disturbance damps (default x2).
  int damping_index = 1;

  // RigidRod constants: rod mass, length, inertia, gravity, feedback row.
  double rod_m = 1.0;
  double rod_l = 1.0;
  double rod_I = 1.0 / 12.0;
  double rod_g = 9.81;
  Vec K;  // u = K x, length 3
};

// Table defaults for each system (domains, W, dt, ingredient kinds).
SystemSpec make_system(SystemId id);

// Learning/verification domain default (identical boxes).
BoxSet default_domain(SystemId id);

// One step x+ = f(x, w). Throws if w lies outside W or the result is not
// finite.
Vec step(const SystemSpec& sys, const Vec& x, const Vec& w);

// Exact image f({x}, W): an axis-aligned box for the systems where the
// disturbance enters a single coordinate, a segment for CosPoly.
CompactSetRepr set_image(const SystemSpec& sys, const Vec& x);

struct DisturbanceSignal {
  std::vector<Vec> values;  // length horizon+1, each inside W
  std::uint64_t seed = 0;
};

// i.i.d. uniform draws from W; deterministic per (horizon, seed).
DisturbanceSignal sample_signal(const SystemSpec& sys, int horizon, std::uint64_t seed);

struct Trajectory {
  std::vector<Vec> states;  // length k+1 unless truncated
  bool truncated = false;   // hit the divergence box before completing
};

// Divergence guard: any state with sup-norm above this is flagged and the
// rollout stops. All learning domains live well inside.
inline constexpr double kDivergenceSup = 10.0;

Trajectory trajectory(const SystemSpec& sys, const Vec& x0, const DisturbanceSignal& pi, int k);

std::vector<double> g_all(const SystemSpec& sys, const Vec& x);
double g_max(const SystemSpec& sys, const Vec& x);

// Safe-set weight; +infinity exactly when g_max >= 1 (for the sublevel
// kinds). Constant1 is identically 1.
double gamma_fn(const SystemSpec& sys, const Vec& x);

// Attraction-rate ingredient; zero exactly at the origin.
double alpha_fn(const SystemSpec& sys, const Vec& x);

// nu(x) = x^T P x for the configured quadratic form.
double quad_form(const Mat& p, const Vec& x);

// Discrete LQR gain by Riccati value iteration; returns row K for u = K x
// stabilizing A + B K. Cost weights: state diag(q_diag) (all-ones when
// empty), input r. Deterministic (relative fixed-point tolerance 1e-13).
Vec riccati_feedback(const Mat& a, const Vec& b, const Vec& q_diag = {}, double r = 1.0);

// Closed-loop linearizations at the origin whose convex hull contains
// D_x f(0, w) for every w in W. Two vertices (w endpoints) when the
// Jacobian is affine in w; four (entrywise interval hull, entries monotone
// on W) for RigidRod. CosPoly has no hyperbolic linearization; throws.
std::vector<Mat> jacobian_vertices(const SystemSpec& sys);

// State Jacobian at the origin for a fixed disturbance value. Defined for
// the systems with a stable linearization (throws for CosPoly, whose origin
// Jacobian is the identity).
Mat jacobian_origin(const SystemSpec& sys, double w);

// Scenario handling: collapse W to its center point (keeps everything else).
SystemSpec collapse_disturbance(const SystemSpec& sys);

}  // namespace roaforge
