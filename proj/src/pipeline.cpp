#include "roaforge/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace roaforge {

namespace {

using nlohmann::json;

std::string status_str(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Certified: return "certified";
    case VerdictStatus::Falsified: return "falsified";
    default: return "unknown";
  }
}

VerdictStatus status_of(const std::string& s) {
  if (s == "certified") return VerdictStatus::Certified;
  if (s == "falsified") return VerdictStatus::Falsified;
  if (s == "unknown") return VerdictStatus::Unknown;
  throw ContractViolation("report: unknown verdict string: " + s);
}

BoxSet box_from_json(const json& j) {
  BoxSet b;
  b.center = j.at("center").get<Vec>();
  b.radius = j.at("radius").get<Vec>();
  RF_REQUIRE(b.center.size() == b.radius.size() && !b.center.empty(),
             "config: malformed box");
  for (double r : b.radius) RF_REQUIRE(r > 0.0, "config: box radius must be positive");
  return b;
}

// Decrease margins the constructed region can always support: half the
// guaranteed per-step contraction at the inner level.
double default_band_epsilon(const SystemSpec& original, const EllipsoidRoa& roa) {
  if (original.id == SystemId::CosPoly) {
    return 0.5 * original.W.lo[0] * roa.c1 * roa.c1;
  }
  return 0.5 * (1.0 - decay_factor(roa)) * roa.c1;
}

}  // namespace

PipelineConfig preset_config(SystemId id) {
  PipelineConfig c;
  c.system = id;
  c.learn_domain = default_domain(id);
  c.verify_domain = default_domain(id);
  switch (id) {
    case SystemId::TwoMachine:
    case SystemId::CosPoly:
      c.value.ns = 500;
      c.value.ntraj = 1000;
      c.train.nd = 5000;
      c.train.npi = 5000;
      break;
    case SystemId::RigidRod:
      c.value.ns = 500;
      c.value.ntraj = 3000;
      c.train.nd = 7000;
      c.train.npi = 7000;
      break;
    case SystemId::Rational:
      c.value.ns = 1000;
      c.value.ntraj = 1000;
      c.train.nd = 5000;
      c.train.npi = 30000;
      break;
  }
  c.out_dir = "out/" + system_name(id);
  return c;
}

PipelineConfig read_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  RF_REQUIRE(in.good(), "config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("config: parse error: ") + e.what());
  }
  try {
    PipelineConfig c = preset_config(system_from_name(j.at("system").get<std::string>()));
    c.scenario = j.value("scenario", c.scenario);
    RF_REQUIRE(c.scenario == 1 || c.scenario == 2, "config: scenario must be 1 or 2");
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    if (j.contains("value")) {
      const json& v = j["value"];
      c.value.ns = v.value("ns", c.value.ns);
      c.value.ntraj = v.value("ntraj", c.value.ntraj);
      c.value.v_cap = v.value("v_cap", c.value.v_cap);
    }
    if (j.contains("train")) {
      const json& t = j["train"];
      c.train.nd = t.value("nd", c.train.nd);
      c.train.npi = t.value("npi", c.train.npi);
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.batch = t.value("batch", c.train.batch);
      c.train.lr = t.value("lr", c.train.lr);
      c.train.lambda_d = t.value("lambda_d", c.train.lambda_d);
      c.train.lambda_pi = t.value("lambda_pi", c.train.lambda_pi);
      c.train.early_stop = t.value("early_stop", c.train.early_stop);
      if (t.contains("hidden")) c.train.hidden = t["hidden"].get<std::vector<int>>();
    }
    if (j.contains("verify")) {
      const json& v = j["verify"];
      c.budget.max_boxes = v.value("max_boxes", c.budget.max_boxes);
      c.budget.max_depth = v.value("max_depth", c.budget.max_depth);
      c.budget.slack = v.value("slack", c.budget.slack);
      c.budget.threads = v.value("threads", c.budget.threads);
    }
    if (j.contains("estimate")) {
      const json& e = j["estimate"];
      c.est_samples = e.value("samples", c.est_samples);
      c.epsilon = e.value("epsilon", c.epsilon);
      c.delta = e.value("delta", c.delta);
    }
    if (j.contains("learn_domain")) c.learn_domain = box_from_json(j["learn_domain"]);
    if (j.contains("verify_domain")) c.verify_domain = box_from_json(j["verify_domain"]);
    if (j.contains("levelset")) {
      const json& l = j["levelset"];
      c.levelset_res = l.value("resolution", c.levelset_res);
      c.slice_x3 = l.value("slice_x3", c.slice_x3);
      RF_REQUIRE(c.levelset_res >= 50, "config: levelset resolution must be >= 50");
    }
    const auto sys = make_system(c.system);
    RF_REQUIRE(static_cast<int>(c.learn_domain.center.size()) == sys.n &&
                   static_cast<int>(c.verify_domain.center.size()) == sys.n,
               "config: domain dimension does not match the system");
    return c;
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("config: bad schema: ") + e.what());
  }
}

SystemSpec scenario_system(const PipelineConfig& cfg) {
  SystemSpec sys = make_system(cfg.system);
  return cfg.scenario == 1 ? collapse_disturbance(sys) : sys;
}

ValueConfig scenario_value_config(const PipelineConfig& cfg) {
  ValueConfig v = cfg.value;
  v.seed_base = cfg.seed;
  if (cfg.scenario == 1) v.ntraj = 1;  // a collapsed W makes every signal identical
  return v;
}

int resolve_threads(int configured) {
  int t = configured;
  if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
  if (t <= 0) t = 1;
  if (const char* env = std::getenv("ROA_FORGE_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) t = std::min(t, cap);
  }
  return std::clamp(t, 1, 256);
}

EllipsoidRoa make_initial_region(const PipelineConfig& cfg) {
  const SystemSpec original = make_system(cfg.system);
  EllipsoidRoa roa;
  if (cfg.system == SystemId::CosPoly) {
    roa = cospoly_analytic_roa(original.W.lo[0], original.W.hi[0], 0.01);
  } else {
    roa = build_ellipsoid_roa(original, cfg.verify_domain);
  }
  roa.domain_b = cfg.verify_domain;  // branch-and-bound root box
  return roa;
}

VerdictStatus CertificationReport::overall() const {
  const VerdictStatus all[] = {safety.status, dvp.status, c2w2.status, dw.status};
  for (VerdictStatus s : all) {
    if (s == VerdictStatus::Falsified) return VerdictStatus::Falsified;
  }
  for (VerdictStatus s : all) {
    if (s == VerdictStatus::Unknown) return VerdictStatus::Unknown;
  }
  return VerdictStatus::Certified;
}

CertificationReport run_certification(const PipelineConfig& cfg, const MlpModel& model) {
  const SystemSpec original = make_system(cfg.system);
  const SystemSpec sys = scenario_system(cfg);
  RF_REQUIRE(model.system_name == system_name(cfg.system),
             "certify: model was trained for " + model.system_name + ", config wants " +
                 system_name(cfg.system));
  EllipsoidRoa roa = make_initial_region(cfg);
  VerifyBudget bud = cfg.budget;
  bud.threads = resolve_threads(bud.threads);

  CertificationReport rep;
  rep.scenario = cfg.scenario;
  rep.system = system_name(cfg.system);
  rep.params.c1 = roa.c1;

  // Safety gate first: the inner level must avoid the unsafe set before any
  // band above it is meaningful. Witnesses pull the level strictly below
  // the offending state; Unknown shrinks geometrically.
  for (int attempt = 0;; ++attempt) {
    rep.safety = verify_roa_safety(sys, roa, bud);
    rep.params.c1 = roa.c1;
    if (rep.safety.status == VerdictStatus::Certified) break;
    if (attempt >= 24 || roa.c1 <= 1e-12) return rep;
    if (rep.safety.status == VerdictStatus::Falsified) {
      roa.c1 = std::min(0.98 * quad_form(roa.P, rep.safety.witness_x), 0.98 * roa.c1);
    } else {
      roa.c1 *= 0.7;
    }
  }

  const double numax = nu_box_vertex_max(roa.P, roa.domain_b);
  const double eps_v = cfg.epsilon > 0.0 ? cfg.epsilon : default_band_epsilon(original, roa);
  const double delta_v = cfg.delta > 0.0 ? cfg.delta : 1e-3 * (numax - roa.c1);

  CandidateParams p;
  p.c1 = roa.c1;
  p.epsilon = eps_v;
  p.delta = delta_v;
  p.omega1 = 0.0;
  p.omega2 = 1.0;
  p.c2 = estimate_c2(sys, roa, eps_v, cfg.est_samples, delta_v, cfg.seed + 101);

  // Quadratic band: falsifying witnesses cap the outer level below the
  // violating state; budget exhaustion halves the band toward the floor.
  for (int attempt = 0;; ++attempt) {
    rep.dvp = verify_condition(sys, nullptr, roa, p, CondKind::DVP, bud);
    rep.params = p;
    if (rep.dvp.status == VerdictStatus::Certified) break;
    if (attempt >= 16) return rep;
    if (rep.dvp.status == VerdictStatus::Falsified) {
      const double at = quad_form(roa.P, rep.dvp.witness_x);
      const double next = std::min(p.c2, at) - std::max(delta_v, 1e-9);
      if (next <= roa.c1) return rep;
      p.c2 = next;
    } else {
      const double next = roa.c1 + 0.5 * (p.c2 - roa.c1);
      if (next - roa.c1 <= 1e-12) return rep;
      p.c2 = next;
    }
  }
  p.c2 = bisect_refine(sys, nullptr, roa, p, CondKind::DVP, bud).params.c2;
  rep.params = p;

  // Network levels: a separate margin scale, since omega lives in [0,1].
  const double eps_n = cfg.epsilon > 0.0 ? cfg.epsilon : 1e-4;
  const double delta_n = cfg.delta > 0.0 ? cfg.delta : 1e-3;
  rep.epsilon_net = eps_n;
  const OmegaEstimates oe =
      estimate_omegas(sys, model, roa, p.c2, eps_n, cfg.est_samples, delta_n, cfg.seed + 102);

  CandidateParams pn = p;
  pn.epsilon = eps_n;
  pn.delta = delta_n;
  pn.omega1 = oe.omega1;
  pn.omega2 = oe.omega2;

  // The two network conditions share omega1: the band condition may push it
  // up past low violators, the capture condition may pull it down, so each
  // capture adjustment reopens the band check.
  bool net_ok = false;
  for (int outer = 0; outer < 12; ++outer) {
    rep.dw = verify_condition(sys, &model, roa, pn, CondKind::DW, bud);
    rep.params.omega1 = pn.omega1;
    rep.params.omega2 = pn.omega2;
    if (rep.dw.status == VerdictStatus::Falsified) {
      const double o = omega_nn(model, sys, rep.dw.witness_x);
      if (o < pn.omega1 + 0.5 * (pn.omega2 - pn.omega1)) {
        pn.omega1 = o + delta_n;
      } else {
        pn.omega2 = o - delta_n;
      }
      if (pn.omega2 - pn.omega1 <= 1e-9) return rep;
      continue;
    }
    if (rep.dw.status == VerdictStatus::Unknown) {
      const double band = pn.omega2 - pn.omega1;
      pn.omega1 += 0.15 * band;
      pn.omega2 -= 0.15 * band;
      if (pn.omega2 - pn.omega1 <= 1e-9) return rep;
      continue;
    }
    rep.c2w2 = verify_condition(sys, &model, roa, pn, CondKind::C2W2, bud);
    if (rep.c2w2.status == VerdictStatus::Falsified) {
      const double o = omega_nn(model, sys, rep.c2w2.witness_x);
      pn.omega1 = std::min(pn.omega1, o) - delta_n;
      if (pn.omega1 <= 1e-9) return rep;
      continue;
    }
    if (rep.c2w2.status == VerdictStatus::Unknown) {
      pn.omega1 *= 0.5;
      if (pn.omega1 <= 1e-9) return rep;
      continue;
    }
    net_ok = true;
    break;
  }
  if (!net_ok) {
    rep.params.omega1 = pn.omega1;
    rep.params.omega2 = pn.omega2;
    return rep;
  }

  // Grow the certified region: raising omega2 only weakens the capture
  // conclusion, so the pair stays consistent.
  pn.omega2 = bisect_refine(sys, &model, roa, pn, CondKind::DW, bud).params.omega2;

  // A doctored upper level is injected only now, after every adjustment pass
  // has finished, so the definitive check exposes it instead of repairing it.
  pn.omega2 += cfg.tamper_omega2;

  // Definitive pass: the reported verdicts are re-established at exactly
  // the reported constants.
  p.omega1 = pn.omega1;
  p.omega2 = pn.omega2;
  rep.params = p;
  rep.safety = verify_roa_safety(sys, roa, bud);
  rep.dvp = verify_condition(sys, nullptr, roa, p, CondKind::DVP, bud);
  rep.c2w2 = verify_condition(sys, &model, roa, pn, CondKind::C2W2, bud);
  rep.dw = verify_condition(sys, &model, roa, pn, CondKind::DW, bud);
  return rep;
}

namespace {

json verdict_witness_json(const Verdict& v) {
  json w;
  w["x"] = v.witness_x;
  w["w"] = v.witness_w;
  return w;
}

}  // namespace

void write_report_json(const std::string& path, const CertificationReport& r) {
  json j;
  j["system"] = r.system;
  j["scenario"] = r.scenario;
  j["c1"] = r.params.c1;
  j["c2"] = r.params.c2;
  j["omega1"] = r.params.omega1;
  j["omega2"] = r.params.omega2;
  j["epsilon"] = r.params.epsilon;
  j["epsilon_net"] = r.epsilon_net;
  j["verdicts"] = {{"dVP", status_str(r.dvp.status)},
                   {"c2w2", status_str(r.c2w2.status)},
                   {"dW", status_str(r.dw.status)},
                   {"safety", status_str(r.safety.status)}};
  j["boxes"] = {{"dVP", r.dvp.boxes_processed},
                {"c2w2", r.c2w2.boxes_processed},
                {"dW", r.dw.boxes_processed},
                {"safety", r.safety.boxes_processed}};
  const struct {
    const char* name;
    const Verdict* v;
  } conds[] = {{"dVP", &r.dvp}, {"c2w2", &r.c2w2}, {"dW", &r.dw}, {"safety", &r.safety}};
  for (const auto& c : conds) {
    if (c.v->status == VerdictStatus::Falsified) {
      json w = verdict_witness_json(*c.v);
      w["condition"] = c.name;
      j["witness"] = w;
      break;
    }
  }
  std::ofstream out(path);
  RF_REQUIRE(out.good(), "report: cannot open " + path);
  out << j.dump(2) << "\n";
  RF_REQUIRE(out.good(), "report: write failed for " + path);
}

CertificationReport read_report_json(const std::string& path) {
  std::ifstream in(path);
  RF_REQUIRE(in.good(), "report: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("report: parse error: ") + e.what());
  }
  CertificationReport r;
  try {
    r.system = j.at("system").get<std::string>();
    r.scenario = j.at("scenario").get<int>();
    r.params.c1 = j.at("c1").get<double>();
    r.params.c2 = j.at("c2").get<double>();
    r.params.omega1 = j.at("omega1").get<double>();
    r.params.omega2 = j.at("omega2").get<double>();
    r.params.epsilon = j.at("epsilon").get<double>();
    r.epsilon_net = j.value("epsilon_net", 0.0);
    const json& v = j.at("verdicts");
    r.dvp.status = status_of(v.at("dVP").get<std::string>());
    r.c2w2.status = status_of(v.at("c2w2").get<std::string>());
    r.dw.status = status_of(v.at("dW").get<std::string>());
    r.safety.status = status_of(v.value("safety", "certified"));
    if (j.contains("boxes")) {
      const json& b = j["boxes"];
      r.dvp.boxes_processed = b.value("dVP", 0L);
      r.c2w2.boxes_processed = b.value("c2w2", 0L);
      r.dw.boxes_processed = b.value("dW", 0L);
      r.safety.boxes_processed = b.value("safety", 0L);
    }
    if (j.contains("witness")) {
      const json& w = j["witness"];
      const std::string cond = w.at("condition").get<std::string>();
      Verdict* target = cond == "dVP"    ? &r.dvp
                        : cond == "c2w2" ? &r.c2w2
                        : cond == "dW"   ? &r.dw
                                         : &r.safety;
      target->witness_x = w.at("x").get<Vec>();
      target->witness_w = w.at("w").get<Vec>();
    }
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("report: bad schema: ") + e.what());
  }
  return r;
}

void write_states_csv(const std::string& path, const std::vector<Vec>& pts) {
  std::ofstream out(path);
  RF_REQUIRE(out.good(), "states: cannot open " + path);
  char buf[32];
  for (const Vec& x : pts) {
    for (size_t i = 0; i < x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", x[i]);
      out << (i ? "," : "") << buf;
    }
    out << "\n";
  }
  RF_REQUIRE(out.good(), "states: write failed for " + path);
}

std::vector<Vec> read_states_csv(const std::string& path, int dim) {
  std::ifstream in(path);
  RF_REQUIRE(in.good(), "states: cannot open " + path);
  std::vector<Vec> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Vec x;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) x.push_back(std::stod(cell));
    RF_REQUIRE(static_cast<int>(x.size()) == dim, "states: row dimension mismatch in " + path);
    out.push_back(std::move(x));
  }
  return out;
}

void export_levelset_csv(const std::string& path, const PipelineConfig& cfg,
                         const MlpModel& model, const EllipsoidRoa& roa,
                         const CertificationReport& r) {
  const SystemSpec sys = make_system(cfg.system);
  RF_REQUIRE(cfg.levelset_res >= 50, "levelset: resolution must be >= 50");
  RF_REQUIRE(sys.n == 2 || sys.n == 3, "levelset: needs a 2-D system or a 3-D slice");
  const BoxSet& dom = cfg.verify_domain;

  std::ofstream out(path);
  RF_REQUIRE(out.good(), "levelset: cannot open " + path);
  out << "x1,x2,omega_nn,nu,in_W_omega2,in_E_c2,in_E_c1,safe\n";
  char buf[160];
  const int res = cfg.levelset_res;
  for (int i = 0; i < res; ++i) {
    const double x1 = dom.center[0] + dom.radius[0] * (2.0 * i / (res - 1) - 1.0);
    for (int k = 0; k < res; ++k) {
      const double x2 = dom.center[1] + dom.radius[1] * (2.0 * k / (res - 1) - 1.0);
      Vec x = {x1, x2};
      if (sys.n == 3) x.push_back(cfg.slice_x3);
      const double om = omega_nn(model, sys, x);
      const double nu = quad_form(roa.P, x);
      const int in_w2 = om <= r.params.omega2 ? 1 : 0;
      const int in_c2 = nu <= r.params.c2 ? 1 : 0;
      const int in_c1 = nu <= r.params.c1 ? 1 : 0;
      const int safe = g_max(sys, x) < 1.0 ? 1 : 0;
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d,%d,%d,%d\n", x1, x2, om, nu,
                    in_w2, in_c2, in_c1, safe);
      out << buf;
    }
  }
  RF_REQUIRE(out.good(), "levelset: write failed for " + path);
}

}  // namespace roaforge
