// Candidate-level estimation and sound interval branch-and-bound checking of
// the three one-step certificate conditions:
//   DVP  : on the quadratic level band c1 <= nu(x) <= c2, nu decreases by at
//          least epsilon for every disturbance, the state is safe, and the
//          image stays in the search domain.
//   C2W2 : below the inner network level omega1, the state lies in the c2
//          sublevel set and its image stays below the outer level omega2.
//   DW   : on the network level band omega1 <= omega_nn(x) <= omega2, the
//          network value decreases by at least epsilon for every
//          disturbance, the state is safe, and the image stays in domain.
// Premises depend on x only; conclusions quantify over all w in W. The
// certified region is the omega2 sublevel set of the network.
#pragma once

#include <functional>
#include <utility>

#include "roaforge/interval.hpp"
#include "roaforge/lyap.hpp"

namespace roaforge {

// Candidate search failed to produce admissible levels (diagnostics in the
// message); distinct from precondition misuse.
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CondKind { DVP, C2W2, DW };

// Largest quadratic level over the vertices of a box; for a positive
// definite form this is the maximum over the whole box.
double nu_box_vertex_max(const Mat& p, const BoxSet& b);

struct CandidateParams {
  double c1 = 0.0;
  double c2 = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
};

struct VerifyBudget {
  long max_boxes = 1000000;  // total boxes examined across all rounds
  int max_depth = 40;        // bisection depth; deeper boxes are dropped
  double slack = 1e-9;       // enclosure inflation absorbing rounding drift
  int threads = 1;           // workers per breadth round; verdict-neutral
};

enum class VerdictStatus { Certified, Falsified, Unknown };

struct Verdict {
  VerdictStatus status = VerdictStatus::Unknown;
  Vec witness_x;  // populated iff Falsified; concrete violation point
  Vec witness_w;
  long boxes_processed = 0;
  bool max_depth_hit = false;
};

// Sampling summary behind the omega candidates. exit_level_min is the lowest
// network value seen outside the c2 sublevel set; bad_below / bad_above are
// the extremal network values of samples violating the band-decrease
// conclusion below exit_level_min and above omega1 respectively.
struct OmegaEstimates {
  double omega1 = 0.0;
  double omega2 = 0.0;
  double exit_level_min = 0.0;
  double bad_below = 0.0;
  double bad_above = 0.0;
};

// Monte Carlo candidate for the outer quadratic level: the smallest nu value
// among draws over domain x W that break the band-decrease conclusion (or
// the domain-vertex nu maximum when none do), backed off by delta.
// Throws EstimationError when no admissible value above roa.c1 remains.
double estimate_c2(const SystemSpec& sys, const EllipsoidRoa& roa, double epsilon,
                   long samples, double delta, std::uint64_t seed);

// Monte Carlo candidates for the network band, evaluated on one shared draw:
// omega1 backs off upward from the worst violator below the first exit
// level, omega2 backs off downward from the first violator above omega1.
// Throws EstimationError when the ordering collapses (e.g. constant model).
OmegaEstimates estimate_omegas(const SystemSpec& sys, const MlpModel& model,
                               const EllipsoidRoa& roa, double c2, double epsilon,
                               long samples, double delta, std::uint64_t seed);

// Branch-and-bound over the x domain (w never splits: conclusions are
// checked against the full disturbance box). Boxes are processed in
// deterministic breadth rounds, so status, witness, and box counts do not
// depend on the thread count. model may be null for DVP only.
Verdict verify_condition(const SystemSpec& sys, const MlpModel* model,
                         const EllipsoidRoa& roa, const CandidateParams& params,
                         CondKind which, const VerifyBudget& budget);

// Safety of the inner invariant set: nu(x) <= c1 implies g(x) < 1. The
// ellipsoid construction keeps the set inside the domain box and invariant;
// obstacle avoidance is the conjunct it does not cover.
Verdict verify_roa_safety(const SystemSpec& sys, const EllipsoidRoa& roa,
                          const VerifyBudget& budget);

// Largest t in [lo_ok, hi] with ok(t), by bisection; ok(lo_ok) is assumed.
// Tests hi first and returns it when it passes. iters midpoint probes.
double bisect_max(const std::function<bool(double)>& ok, double lo_ok, double hi,
                  int iters = 20);
// Smallest t in [lo, hi_ok] with ok(t); mirror image of bisect_max.
double bisect_min(const std::function<bool(double)>& ok, double hi_ok, double lo,
                  int iters = 20);

struct RefineOutcome {
  CandidateParams params;
  bool initial_certified = false;  // false: input returned unchanged
};

// Pushes the free constant of the given condition as far as certification
// allows: c2 upward (DVP, capped by the domain-vertex nu maximum), omega2
// upward (DW, capped at 1), omega1 downward (C2W2, floored at 0). Requires
// the input params to certify; otherwise returns them unchanged with the
// flag cleared. Never returns a non-certified value.
RefineOutcome bisect_refine(const SystemSpec& sys, const MlpModel* model,
                            const EllipsoidRoa& roa, const CandidateParams& params,
                            CondKind which, const VerifyBudget& budget);

}  // namespace roaforge
