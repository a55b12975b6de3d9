#include "roaforge/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace roaforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq(double v) { return v * v; }

void check_finite(const Vec& x, const char* what) {
  for (double v : x) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite value");
  }
}

}  // namespace

std::string system_name(SystemId id) {
  switch (id) {
    case SystemId::TwoMachine: return "twomachine";
    case SystemId::CosPoly: return "cospoly";
    case SystemId::RigidRod: return "rigidrod";
    case SystemId::Rational: return "rational";
  }
  throw ContractViolation("system_name: bad id");
}

SystemId system_from_name(const std::string& name) {
  if (name == "twomachine") return SystemId::TwoMachine;
  if (name == "cospoly") return SystemId::CosPoly;
  if (name == "rigidrod") return SystemId::RigidRod;
  if (name == "rational") return SystemId::Rational;
  throw ContractViolation("unknown system: " + name);
}

SystemSpec make_system(SystemId id) {
  SystemSpec s;
  s.id = id;
  switch (id) {
    case SystemId::TwoMachine:
      s.n = 2;
      s.dt = 0.2;
      s.W = {{0.25}, {0.75}};
      s.gamma_kind = GammaKind::SublevelSum;
      s.alpha_kind = AlphaKind::ScaledNu;
      s.alpha_c = 0.1;
      s.embedding = EmbeddingKind::IntervalCenterRadius;
      s.damping_index = 1;
      break;
    case SystemId::CosPoly:
      s.n = 2;
      s.dt = 1.0;  // map is already discrete; no sampling time involved
      s.W = {{1.0}, {2.0}};
      s.gamma_kind = GammaKind::SublevelMax;
      s.alpha_kind = AlphaKind::NormPow4;
      s.embedding = EmbeddingKind::SegmentCenterDirection;
      break;
    case SystemId::RigidRod: {
      s.n = 3;
      s.dt = 0.2;
      s.W = {{0.46}, {0.54}};
      s.gamma_kind = GammaKind::SublevelSum;
      s.alpha_kind = AlphaKind::ScaledNu;
      s.alpha_c = 0.1;
      s.embedding = EmbeddingKind::IntervalCenterRadius;
      // Stabilizing feedback from the nominal linearization (w at the rod
      // midpoint). Deterministic, so the default config is reproducible.
      // Weights lean on angle and rate: the loop must stay quadratically
      // stable across the whole pivot-offset range, and softer gains leave
      // no common quadratic certificate for the vertex linearizations.
      const double w0 = 0.5 * s.rod_l;
      const double den = s.rod_I + s.rod_m * w0 * w0;
      Mat a(3, 3);
      a(0, 0) = 1.0;
      a(0, 1) = s.dt;
      a(1, 0) = -s.dt * s.rod_m * s.rod_g * w0 / den;
      a(1, 1) = 1.0;
      a(1, 2) = s.dt / den;
      a(2, 2) = 1.0;
      Vec b = {0.0, 0.0, s.dt};
      s.K = riccati_feedback(a, b, {100.0, 10.0, 0.1}, 0.001);
      break;
    }
    case SystemId::Rational:
      s.n = 2;
      s.dt = 0.01;
      s.W = {{-0.15}, {0.15}};
      s.gamma_kind = GammaKind::Constant1;
      s.alpha_kind = AlphaKind::ScaledNu;
      s.alpha_c = 0.01;  // = dt
      s.embedding = EmbeddingKind::IntervalCenterRadius;
      break;
  }
  return s;
}

BoxSet default_domain(SystemId id) {
  switch (id) {
    case SystemId::TwoMachine: return {{0.0, 0.0}, {0.7, 0.7}};
    case SystemId::CosPoly: return {{0.0, 0.0}, {1.0, 1.0}};
    case SystemId::RigidRod: return {{0.0, 0.0, 0.0}, {std::asin(1.0) / 2.0, 1.0, 1.0}};
    case SystemId::Rational: return {{0.0, 0.0}, {3.0, 3.0}};
  }
  throw ContractViolation("default_domain: bad id");
}

Vec step(const SystemSpec& sys, const Vec& x, const Vec& w) {
  RF_REQUIRE(static_cast<int>(x.size()) == sys.n, "step: state dimension mismatch");
  RF_REQUIRE(static_cast<int>(w.size()) == sys.m, "step: disturbance dimension mismatch");
  for (int i = 0; i < sys.m; ++i) {
    RF_REQUIRE(w[i] >= sys.W.lo[i] && w[i] <= sys.W.hi[i], "step: disturbance outside W");
  }
  Vec out(sys.n);
  switch (sys.id) {
    case SystemId::TwoMachine: {
      const double third_pi = std::acos(-1.0) / 3.0;
      out[0] = x[0] + sys.dt * x[1];
      out[1] = x[1] - sys.dt * (w[0] * x[sys.damping_index] +
                                std::sin(x[0] + third_pi) - std::sin(third_pi));
      break;
    }
    case SystemId::CosPoly: {
      const double nu = sq(x[0]) + sq(x[1]);
      const double factor = std::cos(nu) - w[0] * nu;
      out[0] = factor * x[0];
      out[1] = factor * x[1];
      break;
    }
    case SystemId::RigidRod: {
      RF_REQUIRE(sys.K.size() == 3, "step: RigidRod feedback K not configured");
      const double den = sys.rod_I + sys.rod_m * sq(w[0]);
      const double u = sys.K[0] * x[0] + sys.K[1] * x[1] + sys.K[2] * x[2];
      out[0] = x[0] + sys.dt * x[1];
      out[1] = x[1] + sys.dt * (x[2] - sys.rod_m * sys.rod_g * w[0] * std::sin(x[0])) / den;
      out[2] = x[2] + sys.dt * u;
      break;
    }
    case SystemId::Rational: {
      const double den = 1.0 + sq(x[1]);
      out[0] = x[0] - sys.dt * (x[0] + x[1] * x[1] * x[1]) / den;
      out[1] = x[1] + sys.dt * (x[0] * x[0] * x[0] - (0.25 + w[0]) * x[1]) / den;
      break;
    }
  }
  check_finite(out, "step");
  return out;
}

CompactSetRepr set_image(const SystemSpec& sys, const Vec& x) {
  RF_REQUIRE(static_cast<int>(x.size()) == sys.n, "set_image: dimension mismatch");
  const double wc = 0.5 * (sys.W.lo[0] + sys.W.hi[0]);
  const double wr = 0.5 * (sys.W.hi[0] - sys.W.lo[0]);
  switch (sys.id) {
    case SystemId::TwoMachine: {
      // Disturbance enters the second coordinate affinely.
      const double third_pi = std::acos(-1.0) / 3.0;
      const double xd = x[sys.damping_index];
      const double base = x[1] - sys.dt * (std::sin(x[0] + third_pi) - std::sin(third_pi));
      BoxSet img;
      img.center = {x[0] + sys.dt * x[1], base - sys.dt * xd * wc};
      img.radius = {0.0, sys.dt * std::abs(xd) * wr};
      return img;
    }
    case SystemId::CosPoly: {
      const double nu = sq(x[0]) + sq(x[1]);
      const double mid = std::cos(nu) - wc * nu;
      SegmentSet seg;
      seg.u = {mid * x[0], mid * x[1]};
      seg.v = {-wr * nu * x[0], -wr * nu * x[1]};
      return seg;
    }
    case SystemId::RigidRod: {
      RF_REQUIRE(sys.K.size() == 3, "set_image: RigidRod feedback K not configured");
      // Only the second coordinate depends on w:
      //   phi(w) = x2 + dt (x3 - m g w sin x1) / (I + m w^2).
      // Extremes over [lo,hi] occur at the endpoints or at roots of the
      // derivative numerator a m w^2 - 2 m x3 w - a I with a = m g sin x1.
      const double a = sys.rod_m * sys.rod_g * std::sin(x[0]);
      const double m = sys.rod_m;
      auto phi = [&](double w) {
        return x[1] + sys.dt * (x[2] - a * w) / (sys.rod_I + m * w * w);
      };
      double lo_val = phi(sys.W.lo[0]);
      double hi_val = phi(sys.W.hi[0]);
      double fmin = std::min(lo_val, hi_val);
      double fmax = std::max(lo_val, hi_val);
      // Quadratic (or linear) critical points of the numerator.
      const double qa = a * m, qb = -2.0 * m * x[2], qc = -a * sys.rod_I;
      Vec roots;
      if (std::abs(qa) > 1e-300) {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
          const double sd = std::sqrt(disc);
          roots.push_back((-qb + sd) / (2.0 * qa));
          roots.push_back((-qb - sd) / (2.0 * qa));
        }
      } else if (std::abs(qb) > 1e-300) {
        roots.push_back(-qc / qb);
      }
      for (double r : roots) {
        if (r > sys.W.lo[0] && r < sys.W.hi[0]) {
          const double v = phi(r);
          fmin = std::min(fmin, v);
          fmax = std::max(fmax, v);
        }
      }
      const double u = sys.K[0] * x[0] + sys.K[1] * x[1] + sys.K[2] * x[2];
      BoxSet img;
      img.center = {x[0] + sys.dt * x[1], 0.5 * (fmin + fmax), x[2] + sys.dt * u};
      img.radius = {0.0, 0.5 * (fmax - fmin), 0.0};
      return img;
    }
    case SystemId::Rational: {
      const double den = 1.0 + sq(x[1]);
      const double base = x[1] + sys.dt * (x[0] * x[0] * x[0] - 0.25 * x[1]) / den;
      BoxSet img;
      img.center = {x[0] - sys.dt * (x[0] + x[1] * x[1] * x[1]) / den,
                    base - sys.dt * x[1] / den * wc};
      img.radius = {0.0, sys.dt * std::abs(x[1]) / den * wr};
      return img;
    }
  }
  throw ContractViolation("set_image: bad id");
}

DisturbanceSignal sample_signal(const SystemSpec& sys, int horizon, std::uint64_t seed) {
  RF_REQUIRE(horizon >= 0, "sample_signal: horizon must be >= 0");
  DisturbanceSignal sig;
  sig.seed = seed;
  sig.values.resize(horizon + 1);
  Rng rng(seed);
  for (auto& w : sig.values) {
    w.resize(sys.m);
    for (int i = 0; i < sys.m; ++i) w[i] = rng.uniform(sys.W.lo[i], sys.W.hi[i]);
  }
  return sig;
}

Trajectory trajectory(const SystemSpec& sys, const Vec& x0, const DisturbanceSignal& pi, int k) {
  RF_REQUIRE(k >= 0 && k + 1 <= static_cast<int>(pi.values.size()) + 1,
             "trajectory: k exceeds signal horizon");
  Trajectory out;
  out.states.reserve(k + 1);
  out.states.push_back(x0);
  for (int i = 0; i < k; ++i) {
    const Vec& cur = out.states.back();
    for (double v : cur) {
      if (std::abs(v) > kDivergenceSup) {
        out.truncated = true;
        return out;
      }
    }
    out.states.push_back(step(sys, cur, pi.values[i]));
  }
  return out;
}

std::vector<double> g_all(const SystemSpec& sys, const Vec& x) {
  switch (sys.id) {
    case SystemId::TwoMachine:
      return {1.0 + 1.0 / 16.0 - (sq(x[0] + 0.5) + sq(x[1] - 0.5)),
              1.0 + 1.0 / 16.0 - (sq(x[0]) + sq(x[1] + 0.5))};
    case SystemId::CosPoly:
      return {x[0] + x[1]};
    case SystemId::RigidRod: {
      RF_REQUIRE(sys.K.size() == 3, "g_all: RigidRod feedback K not configured");
      const double quarter_pi = std::acos(-1.0) / 4.0;
      const double u = sys.K[0] * x[0] + sys.K[1] * x[1] + sys.K[2] * x[2];
      return {sq(x[0]) / sq(quarter_pi), sq(x[1]), sq(x[2]), sq(u) / 25.0};
    }
    case SystemId::Rational:
      return {0.0};  // unconstrained state space
  }
  throw ContractViolation("g_all: bad id");
}

double g_max(const SystemSpec& sys, const Vec& x) {
  const auto gs = g_all(sys, x);
  return *std::max_element(gs.begin(), gs.end());
}

double gamma_fn(const SystemSpec& sys, const Vec& x) {
  if (sys.gamma_kind == GammaKind::Constant1) return 1.0;
  const auto gs = g_all(sys, x);
  if (sys.gamma_kind == GammaKind::SublevelMax) {
    const double g = *std::max_element(gs.begin(), gs.end());
    if (g >= 1.0) return kInf;
    return sys.gamma0 + 1.0 / (1.0 - g);
  }
  double acc = 0.0;
  for (double g : gs) {
    if (g >= 1.0) return kInf;
    acc += sys.gamma0 + 1.0 / (1.0 - g);
  }
  return acc;
}

double alpha_fn(const SystemSpec& sys, const Vec& x) {
  switch (sys.alpha_kind) {
    case AlphaKind::ScaledNu:
      RF_REQUIRE(sys.P.has_value(), "alpha: quadratic form P not configured yet");
      return sys.alpha_c * quad_form(*sys.P, x);
    case AlphaKind::NormPow4: {
      double nu = 0.0;
      for (double v : x) nu += v * v;
      return nu * nu;
    }
    case AlphaKind::DistPow: {
      double nrm = 0.0;
      for (double v : x) nrm += v * v;
      return std::pow(std::sqrt(nrm), sys.alpha_p);
    }
  }
  throw ContractViolation("alpha: bad kind");
}

double quad_form(const Mat& p, const Vec& x) {
  RF_REQUIRE(p.rows == static_cast<int>(x.size()), "quad_form: dimension mismatch");
  double acc = 0.0;
  for (int i = 0; i < p.rows; ++i)
    for (int j = 0; j < p.cols; ++j) acc += x[i] * p(i, j) * x[j];
  return acc;
}

Vec riccati_feedback(const Mat& a, const Vec& b, const Vec& q_diag, double r) {
  const int n = a.rows;
  RF_REQUIRE(a.cols == n && static_cast<int>(b.size()) == n, "riccati_feedback: shapes");
  RF_REQUIRE(q_diag.empty() || static_cast<int>(q_diag.size()) == n,
             "riccati_feedback: q_diag length");
  RF_REQUIRE(r > 0.0, "riccati_feedback: r must be positive");
  Mat q = Mat::identity(n);
  for (int i = 0; i < n && !q_diag.empty(); ++i) {
    RF_REQUIRE(q_diag[i] > 0.0, "riccati_feedback: q_diag entries must be positive");
    q(i, i) = q_diag[i];
  }
  Mat p = q;
  for (int iter = 0; iter < 100000; ++iter) {
    // P_next = Q + A^T P A - A^T P b (r + b^T P b)^-1 b^T P A.
    Vec pb = matvec(p, b);
    double r_bpb = r;
    for (int i = 0; i < n; ++i) r_bpb += b[i] * pb[i];
    Vec atpb(n, 0.0);  // A^T P b
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) atpb[i] += a(k, i) * pb[k];
    Mat atpa = matmul(matmul(transpose(a), p), a);
    Mat next = q;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) next(i, j) += atpa(i, j) - atpb[i] * atpb[j] / r_bpb;
    // Rounding makes A^T P A slightly asymmetric; an unstable open loop
    // amplifies that component, so restore symmetry before comparing.
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double s = 0.5 * (next(i, j) + next(j, i));
        next(i, j) = s;
        next(j, i) = s;
      }
    }
    const double delta = frobenius(mat_sub(next, p));
    p = next;
    if (delta <= 1e-13 * (1.0 + frobenius(p))) break;
  }
  // K = -(r + b^T P b)^-1 b^T P A  (so u = K x gives the optimal input).
  Vec pb = matvec(p, b);
  double r_bpb = r;
  for (int i = 0; i < n; ++i) r_bpb += b[i] * pb[i];
  Vec k(n, 0.0);
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += pb[i] * a(i, j);
    k[j] = -acc / r_bpb;
  }
  return k;
}

std::vector<Mat> jacobian_vertices(const SystemSpec& sys) {
  const double lo = sys.W.lo[0], hi = sys.W.hi[0];
  switch (sys.id) {
    case SystemId::TwoMachine: {
      const double third_pi = std::acos(-1.0) / 3.0;
      auto jac = [&](double w) {
        Mat a(2, 2);
        a(0, 0) = 1.0;
        a(0, 1) = sys.dt;
        a(1, 0) = -sys.dt * std::cos(third_pi);
        a(1, 1) = 1.0;
        a(1, sys.damping_index) -= sys.dt * w;
        return a;
      };
      return {jac(lo), jac(hi)};
    }
    case SystemId::Rational: {
      auto jac = [&](double w) {
        Mat a(2, 2);
        a(0, 0) = 1.0 - sys.dt;
        a(1, 1) = 1.0 - sys.dt * (0.25 + w);
        return a;
      };
      return {jac(lo), jac(hi)};
    }
    case SystemId::RigidRod: {
      RF_REQUIRE(sys.K.size() == 3, "jacobian_vertices: K not configured");
      // Entries e21(w) = -dt g m w / (I + m w^2) and e23(w) = dt / (I + m w^2)
      // are rational in w, so endpoint matrices alone do not enclose the
      // curve. Both entries are monotone wherever sqrt(I/m) is outside W,
      // so the entrywise interval hull is spanned by endpoint values; its
      // four vertex matrices contain the Jacobian family convexly.
      auto e21 = [&](double w) {
        return -sys.dt * sys.rod_g * sys.rod_m * w / (sys.rod_I + sys.rod_m * w * w);
      };
      auto e23 = [&](double w) { return sys.dt / (sys.rod_I + sys.rod_m * w * w); };
      double a_lo = std::min(e21(lo), e21(hi)), a_hi = std::max(e21(lo), e21(hi));
      double b_lo = std::min(e23(lo), e23(hi)), b_hi = std::max(e23(lo), e23(hi));
      const double crit = std::sqrt(sys.rod_I / sys.rod_m);  // extremum of |e21|
      if (crit > lo && crit < hi) {
        a_lo = std::min(a_lo, e21(crit));
        a_hi = std::max(a_hi, e21(crit));
      }
      std::vector<Mat> out;
      for (double e21v : {a_lo, a_hi}) {
        for (double e23v : {b_lo, b_hi}) {
          Mat a(3, 3);
          a(0, 0) = 1.0;
          a(0, 1) = sys.dt;
          a(1, 0) = e21v;
          a(1, 1) = 1.0;
          a(1, 2) = e23v;
          a(2, 0) = sys.dt * sys.K[0];
          a(2, 1) = sys.dt * sys.K[1];
          a(2, 2) = 1.0 + sys.dt * sys.K[2];
          out.push_back(a);
        }
      }
      // Degenerate W (scenario 1) collapses the hull to a single matrix.
      if (hi == lo) out.resize(1);
      return out;
    }
    case SystemId::CosPoly:
      throw ContractViolation("jacobian_vertices: CosPoly origin is not hyperbolic");
  }
  throw ContractViolation("jacobian_vertices: bad id");
}

Mat jacobian_origin(const SystemSpec& sys, double w) {
  RF_REQUIRE(w >= sys.W.lo[0] && w <= sys.W.hi[0], "jacobian_origin: w outside W");
  switch (sys.id) {
    case SystemId::TwoMachine: {
      const double third_pi = std::acos(-1.0) / 3.0;
      Mat a(2, 2);
      a(0, 0) = 1.0;
      a(0, 1) = sys.dt;
      a(1, 0) = -sys.dt * std::cos(third_pi);
      a(1, 1) = 1.0;
      a(1, sys.damping_index) -= sys.dt * w;
      return a;
    }
    case SystemId::Rational: {
      Mat a(2, 2);
      a(0, 0) = 1.0 - sys.dt;
      a(1, 1) = 1.0 - sys.dt * (0.25 + w);
      return a;
    }
    case SystemId::RigidRod: {
      RF_REQUIRE(sys.K.size() == 3, "jacobian_origin: K not configured");
      const double den = sys.rod_I + sys.rod_m * w * w;
      Mat a(3, 3);
      a(0, 0) = 1.0;
      a(0, 1) = sys.dt;
      a(1, 0) = -sys.dt * sys.rod_g * sys.rod_m * w / den;
      a(1, 1) = 1.0;
      a(1, 2) = sys.dt / den;
      a(2, 0) = sys.dt * sys.K[0];
      a(2, 1) = sys.dt * sys.K[1];
      a(2, 2) = 1.0 + sys.dt * sys.K[2];
      return a;
    }
    case SystemId::CosPoly:
      throw ContractViolation("jacobian_origin: CosPoly origin is not hyperbolic");
  }
  throw ContractViolation("jacobian_origin: bad id");
}

SystemSpec collapse_disturbance(const SystemSpec& sys) {
  SystemSpec out = sys;
  for (int i = 0; i < sys.m; ++i) {
    const double c = 0.5 * (sys.W.lo[i] + sys.W.hi[i]);
    out.W.lo[i] = c;
    out.W.hi[i] = c;
  }
  return out;
}

}  // namespace roaforge
