#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "roaforge/value.hpp"

using namespace roaforge;

namespace {

// Unconstrained system (gamma identically 1) with alpha = ||x||^4: stage
// costs have a closed form, handy for exact checks.
SystemSpec plain_quartic() {
  SystemSpec s = make_system(SystemId::Rational);
  s.alpha_kind = AlphaKind::NormPow4;
  return s;
}

PointCloud cloud_of(std::initializer_list<Vec> pts) {
  PointCloud c;
  c.points = pts;
  return c;
}

}  // namespace

TEST_SUITE("value") {

TEST_CASE("stage cost closed forms and conventions") {
  auto sys = plain_quartic();
  // All-origin cloud: alpha sup is 0, so the cost is 0.
  CHECK(psi(sys, cloud_of({{0.0, 0.0}, {0.0, 0.0}})) == 0.0);
  // gamma = 1, sup alpha = 1.
  CHECK(psi(sys, cloud_of({{1.0, 0.0}, {0.0, 0.0}})) == 1.0);
  // Singleton forms.
  CHECK(psi(sys, CompactSetRepr(Vec{0.0, 0.0})) == 0.0);
  CHECK(psi(sys, CompactSetRepr(Vec{1.0, 1.0})) == doctest::Approx(4.0).epsilon(1e-15));

  // Unsafe point in the cloud forces infinity (two-machine obstacle center),
  // as long as some point carries positive alpha.
  auto tm = make_system(SystemId::TwoMachine);
  tm.P = Mat::identity(2);
  CHECK(psi(tm, cloud_of({{-0.5, 0.5}, {0.1, 0.0}})) == std::numeric_limits<double>::infinity());
  CHECK(xi(tm, cloud_of({{-0.5, 0.5}, {0.1, 0.0}})) == 1.0);
  CHECK(beta(tm, cloud_of({{-0.5, 0.5}, {0.1, 0.0}})) ==
        std::numeric_limits<double>::infinity());

  // psi = ln 2 gives xi = 1/2 and beta = 1.
  const double r = std::pow(std::log(2.0), 0.25);
  CHECK(xi(sys, CompactSetRepr(Vec{r, 0.0})) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(beta(sys, CompactSetRepr(Vec{r, 0.0})) == doctest::Approx(1.0).epsilon(1e-14));

  CHECK_THROWS_AS(psi(sys, CompactSetRepr(BoxSet{{0.0, 0.0}, {1.0, 1.0}})), ContractViolation);
}

TEST_CASE("xi and beta satisfy (1-xi)(1+beta) = 1") {
  auto sys = plain_quartic();
  Rng rng(101);
  for (int t = 0; t < 10000; ++t) {
    PointCloud c;
    const int npts = 1 + static_cast<int>(rng.uniform(0.0, 5.0));
    for (int i = 0; i < npts; ++i) {
      c.points.push_back({rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)});
    }
    const double x = xi(sys, c);
    const double b = beta(sys, c);
    CHECK(std::abs((1.0 - x) * (1.0 + b) - 1.0) <= 1e-12);
  }
}

TEST_CASE("stage cost is monotone under set inclusion") {
  auto tm = make_system(SystemId::TwoMachine);
  tm.P = Mat::identity(2);
  Rng rng(102);
  for (int t = 0; t < 2000; ++t) {
    PointCloud a, b;
    const int na = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
    const int extra = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
    for (int i = 0; i < na; ++i) a.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    b.points = a.points;
    for (int i = 0; i < extra; ++i) b.points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    CHECK(psi(tm, a) <= psi(tm, b));
  }
}

TEST_CASE("sampled reach: degenerate disturbance reproduces the trajectory") {
  auto s1 = collapse_disturbance(make_system(SystemId::TwoMachine));
  ValueConfig cfg;
  cfg.ns = 40;
  cfg.ntraj = 1;
  cfg.seed_base = 7;
  Vec x0 = {0.2, -0.1};
  auto reach = approx_reach(s1, x0, cfg);
  REQUIRE(!reach.diverged);
  REQUIRE(reach.clouds.size() == 41);
  Vec x = x0;
  for (int k = 0; k <= 40; ++k) {
    REQUIRE(reach.clouds[k].points.size() == 1);
    CHECK(reach.clouds[k].points[0][0] == x[0]);
    CHECK(reach.clouds[k].points[0][1] == x[1]);
    if (k < 40) x = step(s1, x, {0.5});
  }
}

TEST_CASE("sampled reach: origin stays put, step-1 cloud sits in the exact image") {
  auto tm = make_system(SystemId::TwoMachine);
  ValueConfig cfg;
  cfg.ns = 1;
  cfg.ntraj = 1000;
  cfg.seed_base = 12;
  auto reach0 = approx_reach(tm, {0.0, 0.0}, cfg);
  for (const auto& cl : reach0.clouds) {
    for (const auto& p : cl.points) CHECK(std::abs(p[0]) + std::abs(p[1]) == 0.0);
  }
  Vec x0 = {0.3, 0.4};
  auto reach = approx_reach(tm, x0, cfg);
  REQUIRE(reach.clouds.size() == 2);
  auto img = set_image(tm, x0);
  for (const auto& p : reach.clouds[1].points) {
    CHECK(dist_point_to_set(p, img, NormKind::Euclidean) <= 1e-9);
  }
}

TEST_CASE("sampled reach flags divergence and truncates") {
  auto cp = make_system(SystemId::CosPoly);
  ValueConfig cfg;
  cfg.ns = 30;
  cfg.ntraj = 4;
  cfg.seed_base = 3;
  auto reach = approx_reach(cp, {3.0, 0.0}, cfg);
  CHECK(reach.diverged);
  CHECK(reach.clouds.size() < 31);
}

TEST_CASE("finite value: zero at origin, saturation on unsafe or diverging starts") {
  auto tm = make_system(SystemId::TwoMachine);
  tm.P = Mat::identity(2);
  ValueConfig cfg;
  cfg.ns = 60;
  cfg.ntraj = 8;
  cfg.seed_base = 40;
  CHECK(v_finite(tm, {0.0, 0.0}, cfg) == 0.0);
  CHECK(w_finite(tm, {0.0, 0.0}, cfg) == 0.0);

  // Start at an obstacle center: unsafe at k=0, immediate saturation.
  auto eval = v_finite_eval(tm, {-0.5, 0.5}, cfg);
  CHECK(eval.v == cfg.v_cap);
  CHECK(!eval.diverged);
  CHECK(w_finite(tm, {-0.5, 0.5}, cfg) == 1.0);  // 1-exp(-50) rounds to 1

  // CosPoly blow-up start on the x1 = -x2 line: g stays 0 along scalar
  // multiples, so with a raised cap the sup-norm divergence gate fires first
  // and the flag is raised.
  auto cp = make_system(SystemId::CosPoly);
  ValueConfig big = cfg;
  big.v_cap = 1e6;
  auto ev2 = v_finite_eval(cp, {-9.0, 9.0}, big);
  CHECK(ev2.v == big.v_cap);
  CHECK(ev2.diverged);
  // An immediately unsafe start saturates too, but without the flag.
  auto ev3 = v_finite_eval(cp, {3.0, 0.0}, cfg);
  CHECK(ev3.v == cfg.v_cap);
  CHECK(!ev3.diverged);

  // Positive definiteness away from the origin.
  Rng rng(55);
  for (int t = 0; t < 1000; ++t) {
    Vec x = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    if (std::abs(x[0]) + std::abs(x[1]) < 1e-6) continue;
    CHECK(v_finite(tm, x, cfg) > 0.0);
  }
}

TEST_CASE("finite value telescopes one step under a degenerate disturbance") {
  auto s1 = collapse_disturbance(make_system(SystemId::TwoMachine));
  s1.P = Mat::identity(2);
  ValueConfig cfg;
  cfg.ns = 500;
  cfg.ntraj = 1;
  cfg.seed_base = 90;
  ValueConfig tail = cfg;
  tail.ns = cfg.ns - 1;
  Rng rng(91);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    Vec x = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
    auto full = v_finite_eval(s1, x, cfg);
    if (full.diverged || full.v >= cfg.v_cap) continue;  // identity holds off saturation
    const double head = psi(s1, CompactSetRepr(x));
    const double rest = v_finite(s1, step(s1, x, {0.5}), tail);
    CHECK(std::abs(full.v - head - rest) <= 1e-9);
    ++checked;
  }
  CHECK(checked >= 950);  // a few starts in the 0.3-box clip an obstacle
}

TEST_CASE("fixed-point residual vanishes for the trivial evaluators") {
  auto tm = make_system(SystemId::TwoMachine);
  tm.P = Mat::identity(2);
  Rng rng(71);
  auto ones = [](const Vec&) { return 1.0; };
  for (int t = 0; t < 200; ++t) {
    Vec x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    CHECK(bellman_residual_w(tm, x, ones) == 0.0);
  }
  auto zeros = [](const Vec&) { return 0.0; };
  CHECK(bellman_residual_w(tm, {0.0, 0.0}, zeros) == 0.0);

  // Segment-embedding systems route through their own embedding.
  auto cp = make_system(SystemId::CosPoly);
  Vec seen;
  auto probe = [&](const Vec& z) {
    seen = z;
    return 0.5;
  };
  bellman_residual_w(cp, {0.2, 0.1}, probe);
  CHECK(seen.size() == 4);  // center;direction of the one-step segment image
}

TEST_CASE("fixed-point residual is near zero for the long-horizon value") {
  // Deterministic contraction: w_finite approximates the exact fixed point,
  // so the residual is at truncation level.
  auto s1 = collapse_disturbance(make_system(SystemId::TwoMachine));
  s1.P = Mat::identity(2);
  ValueConfig cfg;
  cfg.ns = 500;
  cfg.ntraj = 1;
  cfg.seed_base = 5;
  auto w_fn = [&](const Vec& z) {
    Vec x = {z[0], z[1]};  // interval embedding with zero radius
    return w_finite(s1, x, cfg);
  };
  Rng rng(72);
  int checked = 0;
  for (int t = 0; t < 50; ++t) {
    Vec x = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
    if (v_finite_eval(s1, x, cfg).v >= cfg.v_cap) continue;
    CHECK(std::abs(bellman_residual_w(s1, x, w_fn)) <= 1e-9);
    ++checked;
  }
  CHECK(checked >= 45);
}

TEST_CASE("value decreases along disturbed steps inside the analytic basin") {
  auto cp = make_system(SystemId::CosPoly);
  ValueConfig cfg;
  cfg.ns = 150;
  cfg.ntraj = 25;
  cfg.seed_base = 600;
  const double c1 = std::sqrt(6.0) - 2.0;  // analytic basin level for nu = ||x||^2
  Rng rng(77);
  for (int t = 0; t < 60; ++t) {
    // Rejection-sample nu(x) <= c1.
    Vec x(2);
    do {
      x = {rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)};
    } while (x[0] * x[0] + x[1] * x[1] > c1);
    if (x[0] * x[0] + x[1] * x[1] < 1e-4) continue;
    const double wx = w_finite(cp, x, cfg);
    double worst = 0.0;
    for (int j = 0; j < 100; ++j) {
      const double w = rng.uniform(cp.W.lo[0], cp.W.hi[0]);
      worst = std::max(worst, w_finite(cp, step(cp, x, {w}), cfg));
    }
    CHECK(wx - worst > -1e-3);
  }
}

TEST_CASE("dataset generation is deterministic, in-domain, and csv round-trips") {
  auto cp = make_system(SystemId::CosPoly);
  ValueConfig cfg;
  cfg.ns = 50;
  cfg.ntraj = 10;
  cfg.seed_base = 2026;
  BoxSet dom = default_domain(SystemId::CosPoly);
  auto d1 = make_dataset(cp, dom, 40, cfg);
  auto d2 = make_dataset(cp, dom, 40, cfg);
  REQUIRE(d1.size() == 40);
  bool identical = true;
  for (size_t i = 0; i < d1.size(); ++i) {
    identical = identical && d1[i].x == d2[i].x && d1[i].w_target == d2[i].w_target &&
                d1[i].diverged == d2[i].diverged;
    for (int d = 0; d < 2; ++d) {
      CHECK(std::abs(d1[i].x[d] - dom.center[d]) <= dom.radius[d]);
    }
    CHECK(d1[i].w_target >= 0.0);
    CHECK(d1[i].w_target <= 1.0);
  }
  CHECK(identical);

  const std::string path = (std::filesystem::temp_directory_path() / "roa_value_ds.csv").string();
  write_dataset_csv(path, d1);
  auto back = read_dataset_csv(path);
  REQUIRE(back.size() == d1.size());
  bool rt = true;
  for (size_t i = 0; i < d1.size(); ++i) {
    rt = rt && back[i].x == d1[i].x && back[i].w_target == d1[i].w_target &&
         back[i].diverged == d1[i].diverged;
  }
  CHECK(rt);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
