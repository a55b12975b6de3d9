// roa-forge: estimate and soundly certify safe robust domains of attraction
// for the built-in discrete-time uncertain systems.
//
// Exit codes: 0 success (certify: all conditions certified); 1 unexpected
// error; 2 a condition or the safety gate was falsified; 3 verification ran
// out of budget (unknown); 4 level estimation found no admissible candidate;
// 5 configuration or file I/O error.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "roaforge/pipeline.hpp"

using namespace roaforge;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitFalsified = 2;
constexpr int kExitUnknown = 3;
constexpr int kExitEstimation = 4;
constexpr int kExitConfig = 5;

struct CliOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int scenario = 0;        // 0: keep the config's value
  std::string out_dir;     // empty: keep the config's value
  std::string slice;       // "x3=<v>"
  double slack = -1.0;     // <0: keep
  double epsilon = -1.0;   // <=0: keep
  double delta = -1.0;     // <=0: keep
  double tamper_omega2 = 0.0;
};

PipelineConfig load_config(const CliOptions& opt) {
  PipelineConfig cfg = read_pipeline_config(opt.config_path);
  if (opt.seed_set) cfg.seed = opt.seed;
  if (opt.scenario != 0) {
    RF_REQUIRE(opt.scenario == 1 || opt.scenario == 2, "--scenario must be 1 or 2");
    cfg.scenario = opt.scenario;
  }
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  if (!opt.slice.empty()) {
    RF_REQUIRE(opt.slice.rfind("x3=", 0) == 0, "--slice expects x3=<value>");
    cfg.slice_x3 = std::stod(opt.slice.substr(3));
  }
  if (opt.slack >= 0.0) cfg.budget.slack = opt.slack;
  if (opt.epsilon > 0.0) cfg.epsilon = opt.epsilon;
  if (opt.delta > 0.0) cfg.delta = opt.delta;
  cfg.tamper_omega2 = opt.tamper_omega2;
  fs::create_directories(cfg.out_dir);
  return cfg;
}

std::string path_in(const PipelineConfig& cfg, const char* name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void write_timing_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  RF_REQUIRE(out.good(), "cannot open " + path);
  out << j.dump(2) << "\n";
  RF_REQUIRE(out.good(), "write failed for " + path);
}

int cmd_list_systems() {
  std::printf("%-11s %-2s %-2s %-22s %-6s %s\n", "system", "n", "m", "W", "dt", "domain");
  for (SystemId id : {SystemId::TwoMachine, SystemId::CosPoly, SystemId::RigidRod,
                      SystemId::Rational}) {
    const SystemSpec sys = make_system(id);
    std::string wset;
    for (int i = 0; i < sys.m; ++i) {
      char b[64];
      std::snprintf(b, sizeof b, "%s[%g,%g]", i ? "x" : "", sys.W.lo[i], sys.W.hi[i]);
      wset += b;
    }
    const BoxSet dom = default_domain(id);
    std::string box;
    for (int i = 0; i < sys.n; ++i) {
      char b[64];
      std::snprintf(b, sizeof b, "%s[%.4g,%.4g]", i ? "x" : "", dom.center[i] - dom.radius[i],
                    dom.center[i] + dom.radius[i]);
      box += b;
    }
    std::printf("%-11s %-2d %-2d %-22s %-6g %s\n", system_name(id).c_str(), sys.n, sys.m,
                wset.c_str(), sys.dt, box.c_str());
  }
  return kExitOk;
}

int cmd_gen_data(const PipelineConfig& cfg) {
  const SystemSpec sys = scenario_system(cfg);
  const ValueConfig vcfg = scenario_value_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = make_dataset(sys, cfg.learn_domain, cfg.train.nd, vcfg);
  write_dataset_csv(path_in(cfg, "dataset.csv"), data);

  // Collocation states, sampled uniformly with their own seed stream.
  const int npi = cfg.train.npi > 0 ? cfg.train.npi : cfg.train.nd;
  Rng rng(cfg.seed + 1);
  std::vector<Vec> pi_states(npi, Vec(sys.n));
  for (auto& x : pi_states) {
    for (int d = 0; d < sys.n; ++d) {
      x[d] = rng.uniform(cfg.learn_domain.center[d] - cfg.learn_domain.radius[d],
                         cfg.learn_domain.center[d] + cfg.learn_domain.radius[d]);
    }
  }
  write_states_csv(path_in(cfg, "pi_points.csv"), pi_states);

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  nlohmann::json j;
  j["wall_time_s"] = secs;
  j["nd"] = cfg.train.nd;
  j["npi"] = npi;
  j["ntraj"] = vcfg.ntraj;
  j["ns"] = vcfg.ns;
  write_timing_json(path_in(cfg, "gen_report.json"), j);
  std::printf("dataset: %d targets, %d collocation states in %.1fs -> %s\n", cfg.train.nd,
              npi, secs, cfg.out_dir.c_str());
  return kExitOk;
}

int cmd_train(const PipelineConfig& cfg) {
  const SystemSpec sys = scenario_system(cfg);
  const auto data = read_dataset_csv(path_in(cfg, "dataset.csv"));
  const auto pi_states = read_states_csv(path_in(cfg, "pi_points.csv"), sys.n);
  TrainConfig tcfg = cfg.train;
  tcfg.seed = cfg.seed + 2;
  auto [model, report] = train_on(sys, tcfg, data, pi_states);
  write_model_json(path_in(cfg, "model.json"), model);
  nlohmann::json j;
  j["final_loss"] = report.final_loss;
  j["epochs_run"] = report.epochs_run;
  j["wall_time_s"] = report.wall_time_s;
  write_timing_json(path_in(cfg, "train_report.json"), j);
  std::printf("trained: loss %.3g after %d epochs in %.1fs -> %s\n", report.final_loss,
              report.epochs_run, report.wall_time_s, path_in(cfg, "model.json").c_str());
  return kExitOk;
}

// Reuses artifacts already in the output directory (they are deterministic
// in the seed); regenerates whatever is missing.
MlpModel ensure_model(const PipelineConfig& cfg) {
  const std::string model_path = path_in(cfg, "model.json");
  if (!fs::exists(model_path)) {
    if (!fs::exists(path_in(cfg, "dataset.csv")) || !fs::exists(path_in(cfg, "pi_points.csv"))) {
      cmd_gen_data(cfg);
    }
    cmd_train(cfg);
  }
  return read_model_json(model_path);
}

int exit_code_for(const CertificationReport& rep) {
  switch (rep.overall()) {
    case VerdictStatus::Certified: return kExitOk;
    case VerdictStatus::Falsified: return kExitFalsified;
    default: return kExitUnknown;
  }
}

int cmd_certify(const PipelineConfig& cfg) {
  const MlpModel model = ensure_model(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const CertificationReport rep = run_certification(cfg, model);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  EllipsoidRoa roa = make_initial_region(cfg);
  roa.c1 = rep.params.c1;  // the safety gate may have shrunk the inner level
  write_ellipsoid_json(path_in(cfg, "region.json"), roa);
  write_report_json(path_in(cfg, "report.json"), rep);

  const auto say = [](const char* name, const Verdict& v) {
    const char* s = v.status == VerdictStatus::Certified   ? "certified"
                    : v.status == VerdictStatus::Falsified ? "falsified"
                                                           : "unknown";
    std::printf("  %-7s %-9s (%ld boxes)\n", name, s, v.boxes_processed);
  };
  std::printf("certify %s scenario %d in %.1fs:\n", rep.system.c_str(), rep.scenario, secs);
  std::printf("  levels  c1=%.9g c2=%.9g omega1=%.9g omega2=%.9g\n", rep.params.c1,
              rep.params.c2, rep.params.omega1, rep.params.omega2);
  say("safety", rep.safety);
  say("dVP", rep.dvp);
  say("c2w2", rep.c2w2);
  say("dW", rep.dw);
  return exit_code_for(rep);
}

int cmd_export_levelset(const PipelineConfig& cfg) {
  const MlpModel model = read_model_json(path_in(cfg, "model.json"));
  const CertificationReport rep = read_report_json(path_in(cfg, "report.json"));
  EllipsoidRoa roa = make_initial_region(cfg);
  roa.c1 = rep.params.c1;
  export_levelset_csv(path_in(cfg, "levelset.csv"), cfg, model, roa, rep);
  std::printf("levelset: %dx%d grid -> %s\n", cfg.levelset_res, cfg.levelset_res,
              path_in(cfg, "levelset.csv").c_str());
  return kExitOk;
}

int cmd_run_all(const PipelineConfig& cfg) {
  int rc = cmd_gen_data(cfg);
  if (rc != kExitOk) return rc;
  rc = cmd_train(cfg);
  if (rc != kExitOk) return rc;
  rc = cmd_certify(cfg);
  const int lrc = cmd_export_levelset(cfg);
  return rc != kExitOk ? rc : lrc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "roa-forge: sound certification of safe robust domains of attraction\n"
      "for the built-in discrete-time uncertain systems"};
  app.require_subcommand(0, 1);

  CliOptions opt;
  auto* list = app.add_subcommand("list-systems", "Print the built-in systems");

  const auto add_common = [&](CLI::App* cmd, bool needs_seed) {
    cmd->add_option("--config", opt.config_path, "Pipeline config JSON")->required();
    auto* seed = cmd->add_option("--seed", opt.seed, "Seed for every sampled stage");
    if (needs_seed) seed->required();
    cmd->callback([&opt, cmd] { opt.seed_set = cmd->count("--seed") > 0; });
    cmd->add_option("--scenario", opt.scenario,
                    "1: collapse the disturbance set to its center; 2: full set");
    cmd->add_option("--out", opt.out_dir, "Output directory (overrides config)");
    cmd->add_option("--slack", opt.slack, "Enclosure inflation absorbing rounding drift");
    cmd->add_option("--epsilon", opt.epsilon, "Decrease margin (default: derived)");
    cmd->add_option("--delta", opt.delta, "Level back-off (default: derived)");
    return cmd;
  };

  auto* gen = add_common(app.add_subcommand("gen-data", "Sample value targets"), true);
  auto* train = add_common(app.add_subcommand("train", "Fit the network to a dataset"), true);
  auto* certify =
      add_common(app.add_subcommand("certify", "Estimate and verify certified levels"), true);
  certify->add_option("--tamper-omega2", opt.tamper_omega2,
                      "Testing hook: inflate the estimated outer network level");
  auto* exportls =
      add_common(app.add_subcommand("export-levelset", "Grid the certified levels"), false);
  exportls->add_option("--slice", opt.slice, "Slice for 3-D systems, e.g. x3=0");
  auto* runall = add_common(app.add_subcommand("run-all", "Full pipeline"), true);
  runall->add_option("--slice", opt.slice, "Slice for 3-D systems, e.g. x3=0");
  runall->add_option("--tamper-omega2", opt.tamper_omega2,
                     "Testing hook: inflate the estimated outer network level");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) return cmd_list_systems();
    if (gen->parsed()) return cmd_gen_data(load_config(opt));
    if (train->parsed()) return cmd_train(load_config(opt));
    if (certify->parsed()) return cmd_certify(load_config(opt));
    if (exportls->parsed()) return cmd_export_levelset(load_config(opt));
    if (runall->parsed()) return cmd_run_all(load_config(opt));
    std::printf("%s\n", app.help().c_str());
    return kExitOk;
  } catch (const EstimationError& e) {
    std::fprintf(stderr, "estimation failure: %s\n", e.what());
    return kExitEstimation;
  } catch (const ContractViolation& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return kExitUnexpected;
  }
}
