#include "roaforge/value.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace roaforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Suprema of gamma and alpha over a finite set of points, taken
// independently (the stage cost decouples the two argument points).
struct CloudSups {
  double gamma_sup = 0.0;
  double alpha_sup = 0.0;
};

CloudSups sups_over(const SystemSpec& sys, const std::vector<Vec>& pts) {
  CloudSups s;
  for (const Vec& p : pts) {
    s.alpha_sup = std::max(s.alpha_sup, alpha_fn(sys, p));
    if (s.gamma_sup != kInf) s.gamma_sup = std::max(s.gamma_sup, gamma_fn(sys, p));
  }
  return s;
}

double psi_from_sups(const CloudSups& s) {
  if (s.alpha_sup == 0.0) return 0.0;  // cloud inside the invariant set
  if (s.gamma_sup == kInf) return kInf;
  return s.gamma_sup * s.alpha_sup;
}

bool outside_divergence_box(const Vec& x) {
  for (double v : x) {
    if (std::abs(v) > kDivergenceSup) return true;
  }
  return false;
}

}  // namespace

double psi(const SystemSpec& sys, const CompactSetRepr& s) {
  if (const Vec* x = std::get_if<Vec>(&s)) {
    return psi_from_sups(sups_over(sys, {*x}));
  }
  if (const PointCloud* c = std::get_if<PointCloud>(&s)) {
    RF_REQUIRE(!c->points.empty(), "psi: empty cloud");
    return psi_from_sups(sups_over(sys, c->points));
  }
  throw ContractViolation("psi: only singletons and clouds are supported");
}

double xi(const SystemSpec& sys, const CompactSetRepr& s) {
  const double p = psi(sys, s);
  if (p == kInf) return 1.0;
  return 1.0 - std::exp(-p);
}

double beta(const SystemSpec& sys, const CompactSetRepr& s) {
  const double p = psi(sys, s);
  if (p == kInf) return kInf;
  return std::expm1(p);
}

ReachSample approx_reach(const SystemSpec& sys, const Vec& x, const ValueConfig& cfg) {
  RF_REQUIRE(cfg.ns >= 1 && cfg.ntraj >= 1, "approx_reach: ns and ntraj must be >= 1");
  ReachSample out;
  std::vector<Vec> states(cfg.ntraj, x);
  std::vector<Rng> rngs;
  rngs.reserve(cfg.ntraj);
  for (int j = 1; j <= cfg.ntraj; ++j) rngs.emplace_back(cfg.seed_base + j);
  for (int k = 0; k <= cfg.ns; ++k) {
    for (const Vec& st : states) {
      if (outside_divergence_box(st)) {
        out.diverged = true;
        return out;
      }
    }
    PointCloud cloud;
    cloud.points = states;
    out.clouds.push_back(std::move(cloud));
    if (k == cfg.ns) break;
    for (int j = 0; j < cfg.ntraj; ++j) {
      Vec w(sys.m);
      for (int i = 0; i < sys.m; ++i) w[i] = rngs[j].uniform(sys.W.lo[i], sys.W.hi[i]);
      states[j] = step(sys, states[j], w);
    }
  }
  return out;
}

ValueEval v_finite_eval(const SystemSpec& sys, const Vec& x, const ValueConfig& cfg) {
  RF_REQUIRE(cfg.ns >= 1 && cfg.ntraj >= 1 && cfg.v_cap > 0.0, "v_finite: bad config");
  std::vector<Vec> states(cfg.ntraj, x);
  std::vector<Rng> rngs;
  rngs.reserve(cfg.ntraj);
  for (int j = 1; j <= cfg.ntraj; ++j) rngs.emplace_back(cfg.seed_base + j);
  double acc = 0.0;
  for (int k = 0; k <= cfg.ns; ++k) {
    CloudSups s;
    for (const Vec& st : states) {
      if (outside_divergence_box(st)) return {cfg.v_cap, true};
      s.alpha_sup = std::max(s.alpha_sup, alpha_fn(sys, st));
      if (s.gamma_sup != kInf) s.gamma_sup = std::max(s.gamma_sup, gamma_fn(sys, st));
    }
    const double p = psi_from_sups(s);
    if (p == kInf) return {cfg.v_cap, false};
    acc += p;
    if (acc >= cfg.v_cap) return {cfg.v_cap, false};
    if (k == cfg.ns) break;
    for (int j = 0; j < cfg.ntraj; ++j) {
      Vec w(sys.m);
      for (int i = 0; i < sys.m; ++i) w[i] = rngs[j].uniform(sys.W.lo[i], sys.W.hi[i]);
      states[j] = step(sys, states[j], w);
    }
  }
  return {acc, false};
}

double v_finite(const SystemSpec& sys, const Vec& x, const ValueConfig& cfg) {
  return v_finite_eval(sys, x, cfg).v;
}

double w_finite(const SystemSpec& sys, const Vec& x, const ValueConfig& cfg) {
  return 1.0 - std::exp(-v_finite(sys, x, cfg));
}

ValueSample make_value_sample(const SystemSpec& sys, const Vec& x, const ValueConfig& cfg) {
  const ValueEval e = v_finite_eval(sys, x, cfg);
  return {x, 1.0 - std::exp(-e.v), e.diverged};
}

double bellman_residual_w(const SystemSpec& sys, const Vec& x, const EmbeddedEvaluator& w_fn) {
  const double wx = w_fn(embed(CompactSetRepr(x), sys.embedding));
  const double wf = w_fn(embed(set_image(sys, x), sys.embedding));
  const double xix = xi(sys, CompactSetRepr(x));
  return wx - wf - xix * (1.0 - wf);
}

std::vector<ValueSample> make_dataset(const SystemSpec& sys, const BoxSet& domain, int nd,
                                      const ValueConfig& cfg) {
  RF_REQUIRE(nd >= 1, "make_dataset: nd must be >= 1");
  RF_REQUIRE(domain.center.size() == static_cast<size_t>(sys.n), "make_dataset: domain dim");
  std::vector<ValueSample> out;
  out.reserve(nd);
  Rng point_rng(cfg.seed_base);
  // Each point gets a disjoint block of signal seeds so no disturbance
  // sequence is shared across collocation points.
  const std::uint64_t stride = static_cast<std::uint64_t>(cfg.ntraj);
  for (int i = 0; i < nd; ++i) {
    Vec x(sys.n);
    for (int d = 0; d < sys.n; ++d) {
      x[d] = point_rng.uniform(domain.center[d] - domain.radius[d],
                               domain.center[d] + domain.radius[d]);
    }
    ValueConfig local = cfg;
    local.seed_base = cfg.seed_base + 1 + static_cast<std::uint64_t>(i) * stride;
    out.push_back(make_value_sample(sys, x, local));
  }
  return out;
}

void write_dataset_csv(const std::string& path, const std::vector<ValueSample>& samples) {
  RF_REQUIRE(!samples.empty(), "write_dataset_csv: empty dataset");
  std::ofstream f(path);
  if (!f) throw NumericError("write_dataset_csv: cannot open " + path);
  const size_t n = samples.front().x.size();
  for (size_t d = 1; d <= n; ++d) f << "x" << d << ",";
  f << "w_target,diverged\n";
  char buf[32];
  for (const ValueSample& s : samples) {
    RF_REQUIRE(s.x.size() == n, "write_dataset_csv: ragged sample");
    for (double v : s.x) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      f << buf << ",";
    }
    std::snprintf(buf, sizeof buf, "%.17g", s.w_target);
    f << buf << "," << (s.diverged ? 1 : 0) << "\n";
  }
  if (!f) throw NumericError("write_dataset_csv: write failed for " + path);
}

std::vector<ValueSample> read_dataset_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw NumericError("read_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw NumericError("read_dataset_csv: empty file " + path);
  // Header x1,...,xn,w_target,diverged fixes the state dimension.
  size_t cols = 1 + static_cast<size_t>(std::count(line.begin(), line.end(), ','));
  RF_REQUIRE(cols >= 3, "read_dataset_csv: malformed header");
  const size_t n = cols - 2;
  std::vector<ValueSample> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    ValueSample s;
    s.x.resize(n);
    for (size_t d = 0; d < n; ++d) {
      if (!std::getline(ss, field, ',')) throw NumericError("read_dataset_csv: short row");
      s.x[d] = std::stod(field);
    }
    if (!std::getline(ss, field, ',')) throw NumericError("read_dataset_csv: short row");
    s.w_target = std::stod(field);
    if (!std::getline(ss, field, ',')) throw NumericError("read_dataset_csv: short row");
    s.diverged = std::stoi(field) != 0;
    RF_REQUIRE(s.w_target >= 0.0 && s.w_target <= 1.0, "read_dataset_csv: target outside [0,1]");
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace roaforge
