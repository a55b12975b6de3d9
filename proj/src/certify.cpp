#include "roaforge/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace roaforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool in_box_concrete(const Vec& x, const BoxSet& b) {
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] < b.center[i] - b.radius[i] || x[i] > b.center[i] + b.radius[i]) return false;
  }
  return true;
}

bool strictly_outside(const Vec& x, const BoxSet& b) {
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] < b.center[i] - b.radius[i] || x[i] > b.center[i] + b.radius[i]) return true;
  }
  return false;
}

// Disturbances probed for concrete falsification: the center of W plus its
// vertices (deduplicated, so a collapsed W yields a single probe).
std::vector<Vec> w_probes(const SystemSpec& sys) {
  std::vector<Vec> out;
  Vec mid(sys.m);
  for (int i = 0; i < sys.m; ++i) mid[i] = 0.5 * (sys.W.lo[i] + sys.W.hi[i]);
  out.push_back(mid);
  for (int mask = 0; mask < (1 << sys.m); ++mask) {
    Vec v(sys.m);
    for (int i = 0; i < sys.m; ++i) v[i] = ((mask >> i) & 1) ? sys.W.hi[i] : sys.W.lo[i];
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

void draw_xw(const SystemSpec& sys, const BoxSet& dom, Rng& rng, Vec& x, Vec& w) {
  x.resize(sys.n);
  for (int i = 0; i < sys.n; ++i) {
    x[i] = rng.uniform(dom.center[i] - dom.radius[i], dom.center[i] + dom.radius[i]);
  }
  w.resize(sys.m);
  for (int i = 0; i < sys.m; ++i) w[i] = rng.uniform(sys.W.lo[i], sys.W.hi[i]);
}

enum class EvalKind { Band, Capture, NetBand, Safety };

enum class BoxAction { Discharge, Hit, Split };

class Engine {
 public:
  Engine(const SystemSpec& sys, const MlpModel* model, const EllipsoidRoa& roa,
         const CandidateParams& params, EvalKind kind, const VerifyBudget& budget)
      : sys_(sys), model_(model), roa_(roa), p_(params), kind_(kind), budget_(budget) {
    RF_REQUIRE(budget.max_boxes > 0 && budget.max_depth >= 0, "verify: bad budget");
    RF_REQUIRE(budget.slack >= 0.0, "verify: slack must be nonnegative");
    if (kind == EvalKind::Capture || kind == EvalKind::NetBand) {
      RF_REQUIRE(model != nullptr, "verify: condition needs a network model");
    }
    if (model != nullptr) {
      RF_REQUIRE(model->embedding == sys.embedding, "verify: embedding mismatch");
      RF_REQUIRE(model->system_name == system_name(sys.id), "verify: model/system mismatch");
    }
    wiv_.resize(sys.m);
    for (int i = 0; i < sys.m; ++i) wiv_[i] = Interval(sys.W.lo[i], sys.W.hi[i]);
    probes_ = w_probes(sys);
    dom_width_.resize(sys.n);
    for (int i = 0; i < sys.n; ++i) {
      dom_width_[i] = std::max(2.0 * roa.domain_b.radius[i], 1e-300);
    }
  }

  Verdict run() const;

 private:
  BoxAction eval(const double* box, Vec* wit_x, Vec* wit_w) const;
  bool concrete_hit(const Vec& xm, Vec* wit_w) const;

  double nu_at(const Vec& x) const { return quad_form(roa_.P, x); }
  double om_at(const Vec& x) const { return omega_nn(*model_, sys_, x); }

  const SystemSpec& sys_;
  const MlpModel* model_;
  const EllipsoidRoa& roa_;
  CandidateParams p_;
  EvalKind kind_;
  VerifyBudget budget_;
  IVec wiv_;
  std::vector<Vec> probes_;
  Vec dom_width_;
};

BoxAction Engine::eval(const double* box, Vec* wit_x, Vec* wit_w) const {
  const int n = sys_.n;
  const double s = budget_.slack;
  IVec xb(n);
  for (int i = 0; i < n; ++i) xb[i] = Interval(box[2 * i], box[2 * i + 1]);

  // Premise emptiness and conclusion conjuncts, both slack-inflated so that
  // rounding drift can only make discharging harder.
  Interval nu_x, om_x;
  switch (kind_) {
    case EvalKind::Band:
      nu_x = interval_nu(roa_.P, xb);
      if (nu_x.lo - s > p_.c2 || nu_x.hi + s < p_.c1) return BoxAction::Discharge;
      break;
    case EvalKind::Capture:
      om_x = interval_omega(*model_, xb);
      if (om_x.lo - s > p_.omega1) return BoxAction::Discharge;
      break;
    case EvalKind::NetBand:
      om_x = interval_omega(*model_, xb);
      if (om_x.lo - s > p_.omega2 || om_x.hi + s < p_.omega1) return BoxAction::Discharge;
      break;
    case EvalKind::Safety:
      nu_x = interval_nu(roa_.P, xb);
      if (nu_x.lo - s > p_.c1) return BoxAction::Discharge;
      break;
  }

  const auto g_provably_safe = [&]() {
    for (const Interval& gi : interval_g_all(sys_, xb)) {
      if (!(gi.hi + s < 1.0)) return false;
    }
    return true;
  };
  const auto image_enclosure = [&]() {
    IVec f = interval_step(sys_, IntervalBoxWm{xb, wiv_});
    for (Interval& c : f) c = inflate(c, s);
    return f;
  };
  const auto inside_domain = [&](const IVec& f) {
    return ivec_inside(f, ivec_of_box(roa_.domain_b));
  };

  bool concluded = false;
  switch (kind_) {
    case EvalKind::Band: {
      // Decrease via the displacement form: subtracting two level enclosures
      // reintroduces the identity part of the step, which dwarfs the per-step
      // decrease on narrow boxes and stalls the refinement.
      IVec d = interval_step_delta(sys_, IntervalBoxWm{xb, wiv_});
      for (Interval& c : d) c = inflate(c, s);
      const Interval shift = interval_nu_shift(roa_.P, xb, d);
      IVec f(n);
      for (int i = 0; i < n; ++i) f[i] = inflate(xb[i] + d[i], s);
      concluded = (shift.hi + s <= -p_.epsilon) && g_provably_safe() && inside_domain(f);
      break;
    }
    case EvalKind::Capture: {
      nu_x = interval_nu(roa_.P, xb);
      const IVec f = image_enclosure();
      const Interval om_f = interval_omega(*model_, f);
      concluded = (nu_x.hi + s <= p_.c2) && (om_f.hi + s <= p_.omega2);
      break;
    }
    case EvalKind::NetBand: {
      const IVec f = image_enclosure();
      const Interval om_f = interval_omega(*model_, f);
      concluded = ((om_f.hi + s) - (om_x.lo - s) <= -p_.epsilon) && g_provably_safe() &&
                  inside_domain(f);
      break;
    }
    case EvalKind::Safety:
      concluded = g_provably_safe();
      break;
  }
  if (concluded) return BoxAction::Discharge;

  // Concrete falsification probe at the box midpoint.
  Vec xm(n);
  for (int i = 0; i < n; ++i) xm[i] = 0.5 * (box[2 * i] + box[2 * i + 1]);
  bool premise = false;
  switch (kind_) {
    case EvalKind::Band: {
      const double v = nu_at(xm);
      premise = v >= p_.c1 && v <= p_.c2;
      break;
    }
    case EvalKind::Capture:
      premise = om_at(xm) <= p_.omega1;
      break;
    case EvalKind::NetBand: {
      const double o = om_at(xm);
      premise = o >= p_.omega1 && o <= p_.omega2;
      break;
    }
    case EvalKind::Safety:
      premise = nu_at(xm) <= p_.c1;
      break;
  }
  if (premise && concrete_hit(xm, wit_w)) {
    *wit_x = xm;
    return BoxAction::Hit;
  }
  return BoxAction::Split;
}

// True when some probed disturbance yields a strict conclusion violation at
// xm; the violated conjunct has positive margin by construction.
bool Engine::concrete_hit(const Vec& xm, Vec* wit_w) const {
  const BoxSet& dom = roa_.domain_b;
  switch (kind_) {
    case EvalKind::Band: {
      if (g_max(sys_, xm) > 1.0) {
        *wit_w = probes_.front();
        return true;
      }
      const double v = nu_at(xm);
      for (const Vec& w : probes_) {
        const Vec f = step(sys_, xm, w);
        if (nu_at(f) - v > -p_.epsilon || strictly_outside(f, dom)) {
          *wit_w = w;
          return true;
        }
      }
      return false;
    }
    case EvalKind::Capture: {
      if (nu_at(xm) > p_.c2) {
        *wit_w = probes_.front();
        return true;
      }
      for (const Vec& w : probes_) {
        if (om_at(step(sys_, xm, w)) > p_.omega2) {
          *wit_w = w;
          return true;
        }
      }
      return false;
    }
    case EvalKind::NetBand: {
      if (g_max(sys_, xm) > 1.0) {
        *wit_w = probes_.front();
        return true;
      }
      const double o = om_at(xm);
      for (const Vec& w : probes_) {
        const Vec f = step(sys_, xm, w);
        if (om_at(f) - o > -p_.epsilon || strictly_outside(f, dom)) {
          *wit_w = w;
          return true;
        }
      }
      return false;
    }
    case EvalKind::Safety:
      if (g_max(sys_, xm) > 1.0) {
        *wit_w = probes_.front();
        return true;
      }
      return false;
  }
  return false;
}

Verdict Engine::run() const {
  const int n = sys_.n;
  const size_t stride = 2 * static_cast<size_t>(n);

  std::vector<double> frontier(stride);
  for (int i = 0; i < n; ++i) {
    frontier[2 * i] = roa_.domain_b.center[i] - roa_.domain_b.radius[i];
    frontier[2 * i + 1] = roa_.domain_b.center[i] + roa_.domain_b.radius[i];
  }

  Verdict verdict;
  long processed = 0;
  int depth = 0;
  bool dropped = false;
  bool out_of_budget = false;
  bool hit = false;

  struct ChunkOut {
    std::vector<double> children;
    bool hit = false;
    Vec wit_x, wit_w;
    bool dropped = false;
  };

  while (!frontier.empty() && !hit) {
    const long count = static_cast<long>(frontier.size() / stride);
    if (processed + count > budget_.max_boxes) {
      out_of_budget = true;
      break;
    }
    const bool at_depth_cap = depth >= budget_.max_depth;

    const int threads = std::max(1, std::min<int>(budget_.threads, static_cast<int>(count)));
    std::vector<ChunkOut> outs(threads);
    const long per = (count + threads - 1) / threads;

    auto work = [&](int t) {
      ChunkOut& out = outs[t];
      const long b0 = t * per;
      const long b1 = std::min(count, b0 + per);
      for (long b = b0; b < b1; ++b) {
        const double* box = frontier.data() + b * stride;
        Vec wx, ww;
        const BoxAction act = eval(box, &wx, &ww);
        if (act == BoxAction::Hit) {
          out.hit = true;
          out.wit_x = std::move(wx);
          out.wit_w = std::move(ww);
          break;  // the first in-chunk hit is the first in merged order
        }
        if (act == BoxAction::Split) {
          if (at_depth_cap) {
            out.dropped = true;
            continue;
          }
          int dim = 0;
          double best = -1.0;
          for (int i = 0; i < n; ++i) {
            const double w = (box[2 * i + 1] - box[2 * i]) / dom_width_[i];
            if (w > best) {
              best = w;
              dim = i;
            }
          }
          const double mid = 0.5 * (box[2 * dim] + box[2 * dim + 1]);
          const size_t base = out.children.size();
          out.children.insert(out.children.end(), box, box + stride);
          out.children.insert(out.children.end(), box, box + stride);
          out.children[base + 2 * dim + 1] = mid;
          out.children[base + stride + 2 * dim] = mid;
        }
      }
    };

    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(threads);
      for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
      for (auto& th : pool) th.join();
    }

    processed += count;
    std::vector<double> next;
    for (const ChunkOut& out : outs) {
      if (out.hit && !hit) {
        hit = true;
        verdict.witness_x = out.wit_x;
        verdict.witness_w = out.wit_w;
      }
      dropped |= out.dropped;
      next.insert(next.end(), out.children.begin(), out.children.end());
    }
    frontier = std::move(next);
    ++depth;
  }

  verdict.boxes_processed = processed;
  verdict.max_depth_hit = dropped;
  if (hit) {
    verdict.status = VerdictStatus::Falsified;
  } else if (!out_of_budget && !dropped && frontier.empty()) {
    verdict.status = VerdictStatus::Certified;
  } else {
    verdict.status = VerdictStatus::Unknown;
  }
  return verdict;
}

EvalKind kind_of(CondKind which) {
  switch (which) {
    case CondKind::DVP: return EvalKind::Band;
    case CondKind::C2W2: return EvalKind::Capture;
    case CondKind::DW: return EvalKind::NetBand;
  }
  throw ContractViolation("verify: bad condition kind");
}

}  // namespace

double nu_box_vertex_max(const Mat& p, const BoxSet& b) {
  const int n = static_cast<int>(b.center.size());
  double best = 0.0;
  for (int mask = 0; mask < (1 << n); ++mask) {
    Vec v(n);
    for (int i = 0; i < n; ++i) {
      v[i] = b.center[i] + (((mask >> i) & 1) ? b.radius[i] : -b.radius[i]);
    }
    best = std::max(best, quad_form(p, v));
  }
  return best;
}

double estimate_c2(const SystemSpec& sys, const EllipsoidRoa& roa, double epsilon,
                   long samples, double delta, std::uint64_t seed) {
  RF_REQUIRE(samples >= 10000, "estimate_c2: at least 1e4 samples required");
  RF_REQUIRE(epsilon > 0.0, "estimate_c2: epsilon must be positive");
  RF_REQUIRE(delta >= 0.0, "estimate_c2: delta must be nonnegative");
  const BoxSet& dom = roa.domain_b;
  Rng rng(seed);
  Vec x, w;
  double viol_min = kInf;
  for (long s = 0; s < samples; ++s) {
    draw_xw(sys, dom, rng, x, w);
    const double nux = quad_form(roa.P, x);
    const Vec f = step(sys, x, w);
    const bool viol = (quad_form(roa.P, f) - nux > -epsilon) || g_max(sys, x) >= 1.0 ||
                      !in_box_concrete(f, dom);
    if (viol && nux >= roa.c1) viol_min = std::min(viol_min, nux);
  }
  if (!std::isfinite(viol_min)) viol_min = nu_box_vertex_max(roa.P, dom);
  const double c2 = viol_min - delta;
  if (!(c2 > roa.c1)) {
    std::ostringstream oss;
    oss << "estimate_c2: no admissible outer level: lowest violating nu " << viol_min
        << " minus delta " << delta << " does not exceed c1 " << roa.c1;
    throw EstimationError(oss.str());
  }
  return c2;
}

OmegaEstimates estimate_omegas(const SystemSpec& sys, const MlpModel& model,
                               const EllipsoidRoa& roa, double c2, double epsilon,
                               long samples, double delta, std::uint64_t seed) {
  RF_REQUIRE(samples >= 10000, "estimate_omegas: at least 1e4 samples required");
  RF_REQUIRE(epsilon > 0.0, "estimate_omegas: epsilon must be positive");
  RF_REQUIRE(delta >= 0.0, "estimate_omegas: delta must be nonnegative");
  RF_REQUIRE(c2 > roa.c1, "estimate_omegas: c2 must exceed c1");
  const BoxSet& dom = roa.domain_b;
  Rng rng(seed);
  Vec x, w;
  std::vector<double> om(samples);
  std::vector<char> viol(samples);
  double exit_min = kInf;
  double om_max = -kInf;
  for (long s = 0; s < samples; ++s) {
    draw_xw(sys, dom, rng, x, w);
    const double o = omega_nn(model, sys, x);
    const Vec f = step(sys, x, w);
    om[s] = o;
    viol[s] = (omega_nn(model, sys, f) - o > -epsilon) || g_max(sys, x) >= 1.0 ||
              !in_box_concrete(f, dom);
    om_max = std::max(om_max, o);
    if (quad_form(roa.P, x) > c2) exit_min = std::min(exit_min, o);
  }

  OmegaEstimates est;
  est.exit_level_min = exit_min;
  est.bad_below = 0.0;
  for (long s = 0; s < samples; ++s) {
    if (viol[s] && om[s] <= exit_min) est.bad_below = std::max(est.bad_below, om[s]);
  }
  est.omega1 = est.bad_below + delta;
  if (!(est.bad_below < exit_min) || !(est.omega1 < exit_min)) {
    std::ostringstream oss;
    oss << "estimate_omegas: inner level has no room: worst low violator "
        << est.bad_below << " plus delta " << delta
        << " reaches the first exit level " << exit_min;
    throw EstimationError(oss.str());
  }
  est.bad_above = kInf;
  for (long s = 0; s < samples; ++s) {
    if (viol[s] && om[s] >= est.omega1) est.bad_above = std::min(est.bad_above, om[s]);
  }
  if (!std::isfinite(est.bad_above)) est.bad_above = om_max;
  est.omega2 = est.bad_above - delta;
  if (!(est.omega2 > est.omega1)) {
    std::ostringstream oss;
    oss << "estimate_omegas: band collapsed: first high violator " << est.bad_above
        << " minus delta " << delta << " does not exceed inner level " << est.omega1;
    throw EstimationError(oss.str());
  }
  return est;
}

Verdict verify_condition(const SystemSpec& sys, const MlpModel* model,
                         const EllipsoidRoa& roa, const CandidateParams& params,
                         CondKind which, const VerifyBudget& budget) {
  RF_REQUIRE(params.c2 > params.c1, "verify: c2 must exceed c1");
  RF_REQUIRE(params.omega2 > params.omega1 || which == CondKind::DVP,
             "verify: omega2 must exceed omega1");
  RF_REQUIRE(params.epsilon > 0.0, "verify: epsilon must be positive");
  Engine engine(sys, model, roa, params, kind_of(which), budget);
  return engine.run();
}

Verdict verify_roa_safety(const SystemSpec& sys, const EllipsoidRoa& roa,
                          const VerifyBudget& budget) {
  CandidateParams p;
  p.c1 = roa.c1;
  p.c2 = roa.c1 * 2.0 + 1.0;  // unused by the safety premise
  p.epsilon = 1.0;
  p.omega2 = 1.0;
  Engine engine(sys, nullptr, roa, p, EvalKind::Safety, budget);
  return engine.run();
}

double bisect_max(const std::function<bool(double)>& ok, double lo_ok, double hi, int iters) {
  RF_REQUIRE(hi >= lo_ok, "bisect_max: hi below the certified value");
  RF_REQUIRE(iters > 0, "bisect_max: iters must be positive");
  if (ok(hi)) return hi;
  double a = lo_ok, b = hi;
  for (int i = 0; i < iters; ++i) {
    const double m = 0.5 * (a + b);
    (ok(m) ? a : b) = m;
  }
  return a;
}

double bisect_min(const std::function<bool(double)>& ok, double hi_ok, double lo, int iters) {
  RF_REQUIRE(hi_ok >= lo, "bisect_min: lo above the certified value");
  RF_REQUIRE(iters > 0, "bisect_min: iters must be positive");
  if (ok(lo)) return lo;
  double a = hi_ok, b = lo;
  for (int i = 0; i < iters; ++i) {
    const double m = 0.5 * (a + b);
    (ok(m) ? a : b) = m;
  }
  return a;
}

RefineOutcome bisect_refine(const SystemSpec& sys, const MlpModel* model,
                            const EllipsoidRoa& roa, const CandidateParams& params,
                            CondKind which, const VerifyBudget& budget) {
  RefineOutcome out{params, false};
  const Verdict v0 = verify_condition(sys, model, roa, params, which, budget);
  if (v0.status != VerdictStatus::Certified) return out;
  out.initial_certified = true;

  const auto certified_with = [&](double t) {
    CandidateParams p = params;
    switch (which) {
      case CondKind::DVP: p.c2 = t; break;
      case CondKind::C2W2: p.omega1 = t; break;
      case CondKind::DW: p.omega2 = t; break;
    }
    return verify_condition(sys, model, roa, p, which, budget).status ==
           VerdictStatus::Certified;
  };

  switch (which) {
    case CondKind::DVP: {
      const double cap = nu_box_vertex_max(roa.P, roa.domain_b);
      if (cap > params.c2) out.params.c2 = bisect_max(certified_with, params.c2, cap);
      break;
    }
    case CondKind::DW: {
      const double cap = 1.0;
      if (cap > params.omega2) out.params.omega2 = bisect_max(certified_with, params.omega2, cap);
      break;
    }
    case CondKind::C2W2: {
      const double floor = 0.0;
      if (params.omega1 > floor) {
        out.params.omega1 = bisect_min(certified_with, params.omega1, floor);
      }
      break;
    }
  }
  return out;
}

}  // namespace roaforge
