// Double-precision interval arithmetic and the natural interval extensions
// of the system maps, the quadratic form, the constraint functions, and the
// network forward pass. Enclosures are computed without directed rounding;
// the verifier absorbs the resulting ulp-level optimism with an explicit
// slack inflation, which is the documented soundness caveat of this layer.
#pragma once

#include "roaforge/dynamics.hpp"
#include "roaforge/nn.hpp"

namespace roaforge {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double point) : lo(point), hi(point) {}  // NOLINT: implicit by design
  Interval(double l, double h) : lo(l), hi(h) {
    RF_REQUIRE(l <= h, "Interval: lo must not exceed hi");
  }

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool is_point() const { return lo == hi; }
};

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator-(const Interval& a);
Interval operator*(const Interval& a, const Interval& b);
// Quotient; the denominator must be strictly positive (every denominator in
// the supported systems is bounded below by a positive constant).
Interval operator/(const Interval& a, const Interval& b);

// Scalar multiple c*a without forming a degenerate interval first.
Interval iscale(double c, const Interval& a);
// Tight square: isqr([-1,2]) = [0,4], not [-2,4].
Interval isqr(const Interval& a);
// Cubes are monotone, so the image is spanned by the endpoints.
Interval icube(const Interval& a);
// Critical-point-aware trigonometric enclosures; arguments wider than one
// full period collapse to [-1,1].
Interval isin(const Interval& a);
Interval icos(const Interval& a);
// tanh is monotone: exact image of the interval.
Interval itanh(const Interval& a);

Interval ihull(const Interval& a, const Interval& b);
Interval inflate(const Interval& a, double s);

using IVec = std::vector<Interval>;

// Componentwise interval vector of an axis-aligned box.
IVec ivec_of_box(const BoxSet& b);
// Every component of inner lies inside the matching component of outer.
bool ivec_inside(const IVec& inner, const IVec& outer);

// Sub-box of X_v paired with a disturbance sub-box of W.
struct IntervalBoxWm {
  IVec x;
  IVec w;
};

// Componentwise enclosure of {f(x,w) : x in box.x, w in box.w}; mirrors the
// concrete step() arithmetic operation for operation so a degenerate box
// reproduces it exactly.
IVec interval_step(const SystemSpec& sys, const IntervalBoxWm& box);

// Componentwise enclosure of the one-step displacement f(x,w) - x, computed
// from the displacement formulas directly. Over narrow boxes this is far
// tighter than subtracting enclosures of f and x, whose widths add; the
// verifier builds its decrease bounds from it.
IVec interval_step_delta(const SystemSpec& sys, const IntervalBoxWm& box);

// Enclosure of nu(x + delta) - nu(x) over the box via the symmetric-form
// identity: the difference equals delta^T P (2x + delta) pointwise, so the
// bound inherits the displacement's small width instead of cancelling two
// large level values.
Interval interval_nu_shift(const Mat& p, const IVec& x, const IVec& delta);

// Enclosure of the quadratic form x^T P x over the box.
Interval interval_nu(const Mat& p, const IVec& x);

// Componentwise enclosures of the constraint functions g_i over the box.
IVec interval_g_all(const SystemSpec& sys, const IVec& x);

// Interval bound propagation through the network: affine layers in interval
// arithmetic, tanh endpoint-wise. Sound enclosure of forward() over z.
Interval interval_nn(const MlpModel& m, const IVec& z);

// Enclosure of omega_nn over a state box: propagates the singleton embedding
// [x; 0_n], whose second half is identically zero under either embedding.
Interval interval_omega(const MlpModel& m, const IVec& x);

}  // namespace roaforge
