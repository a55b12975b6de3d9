#include <cmath>

#include "doctest.h"
#include "roaforge/interval.hpp"

using namespace roaforge;

namespace {

// Random sub-box of the system's default domain, at most frac of it wide.
IntervalBoxWm random_box(const SystemSpec& sys, const BoxSet& dom, double frac, Rng& rng) {
  IntervalBoxWm b;
  b.x.resize(sys.n);
  for (int i = 0; i < sys.n; ++i) {
    const double lo_d = dom.center[i] - dom.radius[i];
    const double hi_d = dom.center[i] + dom.radius[i];
    const double c = rng.uniform(lo_d, hi_d);
    const double r = rng.uniform(0.0, frac * dom.radius[i]);
    b.x[i].lo = std::max(lo_d, c - r);
    b.x[i].hi = std::min(hi_d, c + r);
  }
  b.w.resize(sys.m);
  for (int i = 0; i < sys.m; ++i) {
    const double c = rng.uniform(sys.W.lo[i], sys.W.hi[i]);
    const double r = rng.uniform(0.0, 0.5 * (sys.W.hi[i] - sys.W.lo[i]));
    b.w[i].lo = std::max(sys.W.lo[i], c - r);
    b.w[i].hi = std::min(sys.W.hi[i], c + r);
  }
  return b;
}

Vec sample_in(const IVec& box, Rng& rng) {
  Vec v(box.size());
  for (size_t i = 0; i < box.size(); ++i) v[i] = rng.uniform(box[i].lo, box[i].hi);
  return v;
}

}  // namespace

TEST_SUITE("interval") {

TEST_CASE("primitive arithmetic") {
  const Interval a(1.0, 2.0), b(3.0, 4.0);
  CHECK((a + b).lo == 4.0);
  CHECK((a + b).hi == 6.0);
  CHECK((a - b).lo == -3.0);
  CHECK((a - b).hi == -1.0);
  CHECK((-a).lo == -2.0);
  CHECK((-a).hi == -1.0);

  const Interval m = Interval(-1.0, 2.0) * Interval(3.0, 4.0);
  CHECK(m.lo == -4.0);
  CHECK(m.hi == 8.0);
  const Interval mm = Interval(-2.0, 3.0) * Interval(-5.0, 7.0);
  CHECK(mm.lo == -15.0);  // 3 * -5
  CHECK(mm.hi == 21.0);   // 3 * 7

  const Interval q = Interval(1.0, 2.0) / Interval(2.0, 4.0);
  CHECK(q.lo == 0.25);
  CHECK(q.hi == 1.0);
  CHECK_THROWS_AS(Interval(1.0) / Interval(-1.0, 1.0), ContractViolation);
  CHECK_THROWS_AS(Interval(1.0) / Interval(0.0, 1.0), ContractViolation);

  CHECK(iscale(-2.0, a).lo == -4.0);
  CHECK(iscale(-2.0, a).hi == -2.0);

  CHECK(isqr(Interval(-1.0, 2.0)).lo == 0.0);
  CHECK(isqr(Interval(-1.0, 2.0)).hi == 4.0);
  CHECK(isqr(Interval(1.0, 2.0)).lo == 1.0);
  CHECK(isqr(Interval(-2.0, -1.0)).lo == 1.0);
  CHECK(isqr(Interval(-2.0, -1.0)).hi == 4.0);

  CHECK(icube(Interval(-2.0, 1.0)).lo == -8.0);
  CHECK(icube(Interval(-2.0, 1.0)).hi == 1.0);

  CHECK(ihull(a, Interval(-1.0, 1.5)).lo == -1.0);
  CHECK(ihull(a, Interval(-1.0, 1.5)).hi == 2.0);
  CHECK(inflate(a, 0.5).lo == 0.5);
  CHECK(inflate(a, 0.5).hi == 2.5);
  CHECK_THROWS_AS(inflate(a, -1.0), ContractViolation);
  CHECK_THROWS_AS(Interval(2.0, 1.0), ContractViolation);
}

TEST_CASE("trigonometric enclosures honor interior extrema") {
  const double pi = std::acos(-1.0);

  const Interval s1 = isin(Interval(0.0, pi));  // peak at pi/2 inside
  CHECK(s1.hi == 1.0);
  CHECK(s1.lo == 0.0);  // min(sin 0, sin pi) with sin 0 == 0 exactly

  const Interval s2 = isin(Interval(pi, 2.0 * pi));  // trough at 3pi/2
  CHECK(s2.lo == -1.0);
  CHECK(std::abs(s2.hi) <= 1e-15);

  const Interval s3 = isin(Interval(0.1, 0.2));  // monotone stretch
  CHECK(s3.lo == std::sin(0.1));
  CHECK(s3.hi == std::sin(0.2));

  const Interval c1 = icos(Interval(-1.0, 1.0));  // peak at 0
  CHECK(c1.hi == 1.0);
  CHECK(c1.lo == std::cos(1.0));

  const Interval c2 = icos(Interval(3.0, 4.0));  // trough at pi
  CHECK(c2.lo == -1.0);
  CHECK(c2.hi == std::cos(4.0));

  // Shifted periods hit the same critical points.
  CHECK(isin(Interval(0.0 + 6.0 * pi, pi + 6.0 * pi)).hi == 1.0);
  CHECK(icos(Interval(3.0 - 8.0 * pi, 4.0 - 8.0 * pi)).lo == -1.0);

  // Full period collapses to the trivial bound.
  CHECK(isin(Interval(0.0, 7.0)).lo == -1.0);
  CHECK(isin(Interval(0.0, 7.0)).hi == 1.0);
  CHECK(icos(Interval(-100.0, 100.0)).lo == -1.0);

  CHECK(itanh(Interval(0.0)).lo == 0.0);
  CHECK(itanh(Interval(0.0)).hi == 0.0);
  CHECK(itanh(Interval(-1.0, 2.0)).lo == std::tanh(-1.0));
  CHECK(itanh(Interval(-1.0, 2.0)).hi == std::tanh(2.0));

  // 2000 random sin/cos boxes: sampled values stay inside.
  Rng rng(11);
  for (int t = 0; t < 2000; ++t) {
    const double lo = rng.uniform(-10.0, 10.0);
    const double hi = lo + rng.uniform(0.0, 8.0);
    const Interval si = isin(Interval(lo, hi));
    const Interval ci = icos(Interval(lo, hi));
    for (int k = 0; k < 20; ++k) {
      const double t0 = rng.uniform(lo, hi);
      CHECK(si.contains(std::sin(t0)));
      CHECK(ci.contains(std::cos(t0)));
    }
  }
}

TEST_CASE("degenerate boxes reproduce the concrete step exactly") {
  Rng rng(21);
  for (auto id :
       {SystemId::TwoMachine, SystemId::CosPoly, SystemId::RigidRod, SystemId::Rational}) {
    auto sys = make_system(id);
    const auto dom = default_domain(id);
    for (int t = 0; t < 1000; ++t) {
      Vec x(sys.n), w(sys.m);
      for (int i = 0; i < sys.n; ++i) {
        x[i] = rng.uniform(dom.center[i] - dom.radius[i], dom.center[i] + dom.radius[i]);
      }
      for (int i = 0; i < sys.m; ++i) w[i] = rng.uniform(sys.W.lo[i], sys.W.hi[i]);
      IntervalBoxWm box;
      for (double v : x) box.x.push_back(Interval(v));
      for (double v : w) box.w.push_back(Interval(v));
      const Vec fx = step(sys, x, w);
      const IVec img = interval_step(sys, box);
      for (int i = 0; i < sys.n; ++i) {
        CHECK(img[i].lo == fx[i]);
        CHECK(img[i].hi == fx[i]);
      }
    }
  }
}

TEST_CASE("step enclosures contain sampled images") {
  // 1000 random sub-boxes per system, 1000 samples each.
  for (auto id :
       {SystemId::TwoMachine, SystemId::CosPoly, SystemId::RigidRod, SystemId::Rational}) {
    auto sys = make_system(id);
    const auto dom = default_domain(id);
    Rng rng(31 + static_cast<int>(id));
    int escapes = 0;
    for (int t = 0; t < 1000; ++t) {
      const auto box = random_box(sys, dom, 0.3, rng);
      const IVec img = interval_step(sys, box);
      for (int k = 0; k < 1000; ++k) {
        const Vec x = sample_in(box.x, rng);
        const Vec w = sample_in(box.w, rng);
        const Vec fx = step(sys, x, w);
        for (int i = 0; i < sys.n; ++i) {
          if (!img[i].contains(fx[i])) ++escapes;
        }
      }
    }
    CHECK(escapes == 0);
  }
}

TEST_CASE("documented two-machine box enclosure") {
  auto sys = make_system(SystemId::TwoMachine);
  IntervalBoxWm box;
  box.x = {Interval(0.0, 0.1), Interval(0.0, 0.0)};
  box.w = {Interval(0.25, 0.75)};
  const IVec img = interval_step(sys, box);
  Rng rng(41);
  int escapes = 0;
  for (int k = 0; k < 10000; ++k) {
    const Vec x = {rng.uniform(0.0, 0.1), 0.0};
    const Vec w = {rng.uniform(0.25, 0.75)};
    const Vec fx = step(sys, x, w);
    for (int i = 0; i < 2; ++i) {
      if (!img[i].contains(fx[i])) ++escapes;
    }
  }
  CHECK(escapes == 0);
  CHECK(img[0].lo == 0.0);  // x1' = x1 + dt*x2 with x2 identically 0
  CHECK(img[0].hi == 0.1);
}

TEST_CASE("displacement enclosures contain sampled one-step moves") {
  // delta mirrors the step formulas with the identity part removed; the
  // concrete reference computes step(x) - x, which rounds differently, so
  // allow ulp-level slack.
  for (auto id :
       {SystemId::TwoMachine, SystemId::CosPoly, SystemId::RigidRod, SystemId::Rational}) {
    auto sys = make_system(id);
    const auto dom = default_domain(id);
    Rng rng(61 + static_cast<int>(id));
    int escapes = 0;
    for (int t = 0; t < 500; ++t) {
      const auto box = random_box(sys, dom, 0.3, rng);
      const IVec d = interval_step_delta(sys, box);
      for (int k = 0; k < 200; ++k) {
        const Vec x = sample_in(box.x, rng);
        const Vec w = sample_in(box.w, rng);
        const Vec fx = step(sys, x, w);
        for (int i = 0; i < sys.n; ++i) {
          const double diff = fx[i] - x[i];
          if (!inflate(d[i], 1e-12 * (1.0 + std::abs(diff))).contains(diff)) ++escapes;
        }
      }
    }
    CHECK(escapes == 0);
  }
}

TEST_CASE("level-shift enclosure is sound and beats decorrelated subtraction") {
  Mat p(2, 2);
  p(0, 0) = 50.25;
  p(0, 1) = 0.0;
  p(1, 0) = 0.0;
  p(1, 1) = 200.25;

  auto sys = make_system(SystemId::Rational);
  Rng rng(71);
  int escapes = 0;
  for (int t = 0; t < 300; ++t) {
    const auto box = random_box(sys, default_domain(sys.id), 0.2, rng);
    const IVec d = interval_step_delta(sys, box);
    const Interval shift = interval_nu_shift(p, box.x, d);
    for (int k = 0; k < 200; ++k) {
      const Vec x = sample_in(box.x, rng);
      const Vec w = sample_in(box.w, rng);
      const Vec fx = step(sys, x, w);
      const double diff = quad_form(p, fx) - quad_form(p, x);
      if (!inflate(shift, 1e-9 * (1.0 + std::abs(diff))).contains(diff)) ++escapes;
    }
  }
  CHECK(escapes == 0);

  // On a narrow box the identity part of the step dominates a decorrelated
  // difference of level enclosures; the shift form cancels it symbolically.
  IntervalBoxWm box;
  box.x = {Interval(0.020, 0.021), Interval(0.050, 0.051)};
  box.w = {Interval(sys.W.lo[0], sys.W.hi[0])};
  const IVec img = interval_step(sys, box);
  const Interval naive = interval_nu(p, img) - interval_nu(p, box.x);
  const Interval tight = interval_nu_shift(p, box.x, interval_step_delta(sys, box));
  CHECK(tight.width() < 0.2 * naive.width());
  CHECK(tight.hi < 0.0);    // decrease provable on this box
  CHECK(naive.hi > 0.0);    // but not through decorrelated subtraction
}

TEST_CASE("quadratic form enclosure") {
  Mat p(2, 2);
  p(0, 0) = 2.0;
  p(0, 1) = 0.5;
  p(1, 0) = 0.5;
  p(1, 1) = 3.0;

  // Point boxes reproduce quad_form.
  Rng rng(51);
  for (int t = 0; t < 200; ++t) {
    const Vec x = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const Interval e = interval_nu(p, {Interval(x[0]), Interval(x[1])});
    const double q = quad_form(p, x);
    CHECK(e.lo == doctest::Approx(q).epsilon(1e-14));
    CHECK(e.hi == doctest::Approx(q).epsilon(1e-14));
    // quad_form sums in a different order, so allow ulp-level slack.
    CHECK(inflate(e, 1e-12).contains(q));
  }

  // Containment over random boxes.
  int escapes = 0;
  for (int t = 0; t < 500; ++t) {
    IVec box(2);
    for (int i = 0; i < 2; ++i) {
      const double c = rng.uniform(-2.0, 2.0);
      const double r = rng.uniform(0.0, 1.0);
      box[i] = Interval(c - r, c + r);
    }
    const Interval e = interval_nu(p, box);
    for (int k = 0; k < 500; ++k) {
      const Vec x = sample_in(box, rng);
      if (!e.contains(quad_form(p, x))) ++escapes;
    }
  }
  CHECK(escapes == 0);

  // The square term is tight: a symmetric box around 0 yields lo = 0 for
  // the identity form, not a negative cross-term artifact.
  const Interval sym = interval_nu(Mat::identity(2), {Interval(-1.0, 1.0), Interval(-1.0, 1.0)});
  CHECK(sym.lo == 0.0);
  CHECK(sym.hi == 2.0);
}

TEST_CASE("constraint enclosures contain sampled values") {
  for (auto id :
       {SystemId::TwoMachine, SystemId::CosPoly, SystemId::RigidRod, SystemId::Rational}) {
    auto sys = make_system(id);
    const auto dom = default_domain(id);
    Rng rng(61 + static_cast<int>(id));
    int escapes = 0;
    for (int t = 0; t < 500; ++t) {
      const auto box = random_box(sys, dom, 0.4, rng);
      const IVec gs = interval_g_all(sys, box.x);
      for (int k = 0; k < 200; ++k) {
        const Vec x = sample_in(box.x, rng);
        const auto gv = g_all(sys, x);
        REQUIRE(gv.size() == gs.size());
        for (size_t i = 0; i < gv.size(); ++i) {
          if (!gs[i].contains(gv[i])) ++escapes;
        }
      }
    }
    CHECK(escapes == 0);
  }

  // CosPoly constraint is affine, so the enclosure is exact.
  auto cp = make_system(SystemId::CosPoly);
  const IVec g = interval_g_all(cp, {Interval(0.0, 1.0), Interval(2.0, 3.0)});
  CHECK(g[0].lo == 2.0);
  CHECK(g[0].hi == 4.0);
}

TEST_CASE("network propagation: points are exact, boxes contain samples") {
  auto model = make_mlp({4, 8, 8, 1}, 77);

  // Point input equals the concrete forward pass bit for bit.
  Rng rng(71);
  for (int t = 0; t < 500; ++t) {
    Vec z(4);
    for (auto& v : z) v = rng.uniform(-2.0, 2.0);
    IVec zi;
    for (double v : z) zi.push_back(Interval(v));
    const Interval out = interval_nn(model, zi);
    const double ref = forward(model, z);
    CHECK(out.lo == ref);
    CHECK(out.hi == ref);
  }

  // 1000 random boxes x 1000 samples stay inside the propagated bounds.
  int escapes = 0;
  for (int t = 0; t < 1000; ++t) {
    IVec box(4);
    for (auto& iv : box) {
      const double c = rng.uniform(-1.5, 1.5);
      const double r = rng.uniform(0.0, 0.5);
      iv = Interval(c - r, c + r);
    }
    const Interval out = interval_nn(model, box);
    for (int k = 0; k < 1000; ++k) {
      Vec z(4);
      for (int i = 0; i < 4; ++i) z[i] = rng.uniform(box[i].lo, box[i].hi);
      if (!out.contains(forward(model, z))) ++escapes;
    }
  }
  CHECK(escapes == 0);

  CHECK_THROWS_AS(interval_nn(model, IVec(3)), ContractViolation);
}

TEST_CASE("state-box network enclosure uses the singleton embedding") {
  auto sys = make_system(SystemId::TwoMachine);
  auto model = make_mlp({4, 8, 1}, 99);
  model.embedding = sys.embedding;
  model.system_name = system_name(sys.id);

  IVec box = {Interval(-0.2, 0.3), Interval(0.1, 0.4)};
  const Interval out = interval_omega(model, box);
  Rng rng(81);
  int escapes = 0;
  for (int k = 0; k < 5000; ++k) {
    const Vec x = sample_in(box, rng);
    if (!out.contains(omega_nn(model, sys, x))) ++escapes;
  }
  CHECK(escapes == 0);

  // Point box: equals omega_nn exactly.
  const Interval pt = interval_omega(model, {Interval(0.05), Interval(-0.1)});
  CHECK(pt.lo == omega_nn(model, sys, {0.05, -0.1}));
  CHECK(pt.lo == pt.hi);
}

TEST_CASE("box vector helpers") {
  const IVec outer = ivec_of_box(BoxSet{{0.0, 0.0}, {1.0, 2.0}});
  CHECK(outer[0].lo == -1.0);
  CHECK(outer[1].hi == 2.0);
  CHECK(ivec_inside({Interval(-0.5, 0.5), Interval(-2.0, 2.0)}, outer));
  CHECK(!ivec_inside({Interval(-1.5, 0.0), Interval(0.0, 0.0)}, outer));
  CHECK(!ivec_inside({Interval(0.0, 0.0), Interval(0.0, 2.5)}, outer));
  CHECK_THROWS_AS(ivec_inside(IVec(1), outer), ContractViolation);
  CHECK_THROWS_AS(ivec_of_box(BoxSet{{0.0}, {-1.0}}), ContractViolation);
}

}  // TEST_SUITE
