#include "roaforge/interval.hpp"

#include <algorithm>
#include <cmath>

namespace roaforge {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// True iff some point c + 2*pi*k (integer k) lies in [lo, hi].
bool hits_critical(double lo, double hi, double c) {
  const double k = std::ceil((lo - c) / kTwoPi);
  return c + k * kTwoPi <= hi;
}

}  // namespace

Interval operator+(const Interval& a, const Interval& b) {
  Interval r;
  r.lo = a.lo + b.lo;
  r.hi = a.hi + b.hi;
  return r;
}

Interval operator-(const Interval& a, const Interval& b) {
  Interval r;
  r.lo = a.lo - b.hi;
  r.hi = a.hi - b.lo;
  return r;
}

Interval operator-(const Interval& a) {
  Interval r;
  r.lo = -a.hi;
  r.hi = -a.lo;
  return r;
}

Interval operator*(const Interval& a, const Interval& b) {
  const double p1 = a.lo * b.lo;
  const double p2 = a.lo * b.hi;
  const double p3 = a.hi * b.lo;
  const double p4 = a.hi * b.hi;
  Interval r;
  r.lo = std::min(std::min(p1, p2), std::min(p3, p4));
  r.hi = std::max(std::max(p1, p2), std::max(p3, p4));
  return r;
}

Interval operator/(const Interval& a, const Interval& b) {
  RF_REQUIRE(b.lo > 0.0, "interval division requires a strictly positive denominator");
  const double q1 = a.lo / b.lo;
  const double q2 = a.lo / b.hi;
  const double q3 = a.hi / b.lo;
  const double q4 = a.hi / b.hi;
  Interval r;
  r.lo = std::min(std::min(q1, q2), std::min(q3, q4));
  r.hi = std::max(std::max(q1, q2), std::max(q3, q4));
  return r;
}

Interval iscale(double c, const Interval& a) {
  Interval r;
  if (c >= 0.0) {
    r.lo = c * a.lo;
    r.hi = c * a.hi;
  } else {
    r.lo = c * a.hi;
    r.hi = c * a.lo;
  }
  return r;
}

Interval isqr(const Interval& a) {
  const double s1 = a.lo * a.lo;
  const double s2 = a.hi * a.hi;
  Interval r;
  r.hi = std::max(s1, s2);
  r.lo = (a.lo <= 0.0 && a.hi >= 0.0) ? 0.0 : std::min(s1, s2);
  return r;
}

Interval icube(const Interval& a) {
  Interval r;
  r.lo = a.lo * a.lo * a.lo;
  r.hi = a.hi * a.hi * a.hi;
  return r;
}

Interval isin(const Interval& a) {
  if (a.width() >= kTwoPi) return Interval(-1.0, 1.0);
  const double s1 = std::sin(a.lo);
  const double s2 = std::sin(a.hi);
  Interval r;
  r.lo = std::min(s1, s2);
  r.hi = std::max(s1, s2);
  const double half_pi = 0.25 * kTwoPi;
  if (hits_critical(a.lo, a.hi, half_pi)) r.hi = 1.0;
  if (hits_critical(a.lo, a.hi, -half_pi)) r.lo = -1.0;
  return r;
}

Interval icos(const Interval& a) {
  if (a.width() >= kTwoPi) return Interval(-1.0, 1.0);
  const double c1 = std::cos(a.lo);
  const double c2 = std::cos(a.hi);
  Interval r;
  r.lo = std::min(c1, c2);
  r.hi = std::max(c1, c2);
  if (hits_critical(a.lo, a.hi, 0.0)) r.hi = 1.0;
  if (hits_critical(a.lo, a.hi, 0.5 * kTwoPi)) r.lo = -1.0;
  return r;
}

Interval itanh(const Interval& a) {
  Interval r;
  r.lo = std::tanh(a.lo);
  r.hi = std::tanh(a.hi);
  return r;
}

Interval ihull(const Interval& a, const Interval& b) {
  Interval r;
  r.lo = std::min(a.lo, b.lo);
  r.hi = std::max(a.hi, b.hi);
  return r;
}

Interval inflate(const Interval& a, double s) {
  RF_REQUIRE(s >= 0.0, "inflate: slack must be nonnegative");
  Interval r;
  r.lo = a.lo - s;
  r.hi = a.hi + s;
  return r;
}

IVec ivec_of_box(const BoxSet& b) {
  RF_REQUIRE(b.center.size() == b.radius.size(), "ivec_of_box: shape mismatch");
  IVec out(b.center.size());
  for (size_t i = 0; i < b.center.size(); ++i) {
    RF_REQUIRE(b.radius[i] >= 0.0, "ivec_of_box: negative radius");
    out[i].lo = b.center[i] - b.radius[i];
    out[i].hi = b.center[i] + b.radius[i];
  }
  return out;
}

bool ivec_inside(const IVec& inner, const IVec& outer) {
  RF_REQUIRE(inner.size() == outer.size(), "ivec_inside: length mismatch");
  for (size_t i = 0; i < inner.size(); ++i) {
    if (inner[i].lo < outer[i].lo || inner[i].hi > outer[i].hi) return false;
  }
  return true;
}

IVec interval_step(const SystemSpec& sys, const IntervalBoxWm& box) {
  RF_REQUIRE(static_cast<int>(box.x.size()) == sys.n, "interval_step: state dimension");
  RF_REQUIRE(static_cast<int>(box.w.size()) == sys.m, "interval_step: disturbance dimension");
  const IVec& x = box.x;
  const IVec& w = box.w;
  IVec out(sys.n);
  switch (sys.id) {
    case SystemId::TwoMachine: {
      const double third_pi = std::acos(-1.0) / 3.0;
      out[0] = x[0] + iscale(sys.dt, x[1]);
      out[1] = x[1] - iscale(sys.dt, w[0] * x[sys.damping_index] +
                                         isin(x[0] + Interval(third_pi)) -
                                         Interval(std::sin(third_pi)));
      break;
    }
    case SystemId::CosPoly: {
      const Interval nu = isqr(x[0]) + isqr(x[1]);
      const Interval factor = icos(nu) - w[0] * nu;
      out[0] = factor * x[0];
      out[1] = factor * x[1];
      break;
    }
    case SystemId::RigidRod: {
      RF_REQUIRE(sys.K.size() == 3, "interval_step: RigidRod feedback K not configured");
      const Interval den = Interval(sys.rod_I) + iscale(sys.rod_m, isqr(w[0]));
      const Interval u =
          iscale(sys.K[0], x[0]) + iscale(sys.K[1], x[1]) + iscale(sys.K[2], x[2]);
      out[0] = x[0] + iscale(sys.dt, x[1]);
      out[1] = x[1] +
               iscale(sys.dt, x[2] - iscale(sys.rod_m * sys.rod_g, w[0]) * isin(x[0])) / den;
      out[2] = x[2] + iscale(sys.dt, u);
      break;
    }
    case SystemId::Rational: {
      const Interval den = Interval(1.0) + isqr(x[1]);
      out[0] = x[0] - iscale(sys.dt, x[0] + icube(x[1])) / den;
      out[1] = x[1] + iscale(sys.dt, icube(x[0]) - (Interval(0.25) + w[0]) * x[1]) / den;
      break;
    }
  }
  return out;
}

IVec interval_step_delta(const SystemSpec& sys, const IntervalBoxWm& box) {
  RF_REQUIRE(static_cast<int>(box.x.size()) == sys.n, "interval_step_delta: state dimension");
  RF_REQUIRE(static_cast<int>(box.w.size()) == sys.m,
             "interval_step_delta: disturbance dimension");
  const IVec& x = box.x;
  const IVec& w = box.w;
  IVec out(sys.n);
  switch (sys.id) {
    case SystemId::TwoMachine: {
      const double third_pi = std::acos(-1.0) / 3.0;
      out[0] = iscale(sys.dt, x[1]);
      out[1] = -iscale(sys.dt, w[0] * x[sys.damping_index] +
                                   isin(x[0] + Interval(third_pi)) -
                                   Interval(std::sin(third_pi)));
      break;
    }
    case SystemId::CosPoly: {
      const Interval nu = isqr(x[0]) + isqr(x[1]);
      const Interval shrink = icos(nu) - w[0] * nu - Interval(1.0);
      out[0] = shrink * x[0];
      out[1] = shrink * x[1];
      break;
    }
    case SystemId::RigidRod: {
      RF_REQUIRE(sys.K.size() == 3, "interval_step_delta: RigidRod feedback K not configured");
      const Interval den = Interval(sys.rod_I) + iscale(sys.rod_m, isqr(w[0]));
      const Interval u =
          iscale(sys.K[0], x[0]) + iscale(sys.K[1], x[1]) + iscale(sys.K[2], x[2]);
      out[0] = iscale(sys.dt, x[1]);
      out[1] = iscale(sys.dt, x[2] - iscale(sys.rod_m * sys.rod_g, w[0]) * isin(x[0])) / den;
      out[2] = iscale(sys.dt, u);
      break;
    }
    case SystemId::Rational: {
      const Interval den = Interval(1.0) + isqr(x[1]);
      out[0] = -(iscale(sys.dt, x[0] + icube(x[1])) / den);
      out[1] = iscale(sys.dt, icube(x[0]) - (Interval(0.25) + w[0]) * x[1]) / den;
      break;
    }
  }
  return out;
}

Interval interval_nu_shift(const Mat& p, const IVec& x, const IVec& delta) {
  RF_REQUIRE(p.rows == static_cast<int>(x.size()) && p.cols == p.rows &&
                 delta.size() == x.size(),
             "interval_nu_shift: dimension mismatch");
  Interval acc(0.0);
  for (int i = 0; i < p.rows; ++i) {
    Interval row(0.0);
    for (int j = 0; j < p.cols; ++j) {
      row = row + iscale(p(i, j), iscale(2.0, x[j]) + delta[j]);
    }
    acc = acc + delta[i] * row;
  }
  return acc;
}

Interval interval_nu(const Mat& p, const IVec& x) {
  RF_REQUIRE(p.rows == static_cast<int>(x.size()) && p.cols == p.rows,
             "interval_nu: dimension mismatch");
  Interval acc(0.0);
  for (int i = 0; i < p.rows; ++i) {
    acc = acc + iscale(p(i, i), isqr(x[i]));
    for (int j = i + 1; j < p.cols; ++j) {
      acc = acc + iscale(p(i, j) + p(j, i), x[i] * x[j]);
    }
  }
  return acc;
}

IVec interval_g_all(const SystemSpec& sys, const IVec& x) {
  RF_REQUIRE(static_cast<int>(x.size()) == sys.n, "interval_g_all: dimension mismatch");
  switch (sys.id) {
    case SystemId::TwoMachine: {
      const Interval q1 = isqr(x[0] + Interval(0.5)) + isqr(x[1] - Interval(0.5));
      const Interval q2 = isqr(x[0]) + isqr(x[1] + Interval(0.5));
      const double lvl = 1.0 + 1.0 / 16.0;
      return {Interval(lvl) - q1, Interval(lvl) - q2};
    }
    case SystemId::CosPoly:
      return {x[0] + x[1]};
    case SystemId::RigidRod: {
      RF_REQUIRE(sys.K.size() == 3, "interval_g_all: RigidRod feedback K not configured");
      const double quarter_pi = std::acos(-1.0) / 4.0;
      const Interval u =
          iscale(sys.K[0], x[0]) + iscale(sys.K[1], x[1]) + iscale(sys.K[2], x[2]);
      return {iscale(1.0 / (quarter_pi * quarter_pi), isqr(x[0])), isqr(x[1]), isqr(x[2]),
              iscale(1.0 / 25.0, isqr(u))};
    }
    case SystemId::Rational:
      return {Interval(0.0)};
  }
  throw ContractViolation("interval_g_all: bad id");
}

Interval interval_nn(const MlpModel& m, const IVec& z) {
  const int layers = static_cast<int>(m.weights.size());
  RF_REQUIRE(layers > 0, "interval_nn: empty model");
  RF_REQUIRE(static_cast<int>(z.size()) == m.layer_dims.front(),
             "interval_nn: input dimension mismatch");
  IVec cur = z;
  for (int k = 0; k < layers; ++k) {
    const Mat& w = m.weights[k];
    IVec next(w.rows);
    for (int i = 0; i < w.rows; ++i) {
      Interval s(m.biases[k][i]);
      const double* row = w.a.data() + static_cast<size_t>(i) * w.cols;
      for (int j = 0; j < w.cols; ++j) s = s + iscale(row[j], cur[j]);
      next[i] = (k + 1 < layers) ? itanh(s) : s;
    }
    cur = std::move(next);
  }
  return cur[0];
}

Interval interval_omega(const MlpModel& m, const IVec& x) {
  IVec z = x;
  z.resize(2 * x.size(), Interval(0.0));
  return interval_nn(m, z);
}

}  // namespace roaforge
