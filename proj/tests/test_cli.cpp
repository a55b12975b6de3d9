// Pipeline configuration, report/CSV round-trips, and process-level checks
// of the roa-forge binary: exit codes, artifact determinism, reuse, and the
// tamper hook. Process cases drive the real executable via ROA_FORGE_BIN.
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "roaforge/pipeline.hpp"

using namespace roaforge;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

// Runs the CLI with stdout+stderr captured. std::system is fine here: the
// suite is single-threaded and the commands contain no user input.
RunResult run_cli(const std::string& args) {
  const std::string log = (fs::temp_directory_path() / "roa_cli_log.txt").string();
  const std::string cmd = std::string(ROA_FORGE_BIN) + " " + args + " > " + log + " 2>&1";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.code = raw < 0 ? raw : WEXITSTATUS(raw);
  std::ifstream in(log);
  std::ostringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("roa_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

// Downsized end-to-end configuration. Small enough for a unit suite, big
// enough that every stage runs for real and certification succeeds.
std::string small_config(const std::string& dir) {
  const std::string path = dir + "/config.json";
  write_text(path, R"({
    "system": "cospoly",
    "scenario": 1,
    "seed": 3,
    "out_dir": ")" + dir + R"(/out",
    "value": {"ns": 120, "ntraj": 1},
    "train": {"nd": 400, "npi": 400, "epochs": 400, "batch": 128, "lr": 0.003,
              "hidden": [16, 16]},
    "verify": {"max_boxes": 400000, "max_depth": 34, "slack": 1e-9, "threads": 1},
    "estimate": {"samples": 20000}
  })");
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("presets carry the per-system experiment scales") {
  const PipelineConfig tm = preset_config(SystemId::TwoMachine);
  CHECK(tm.value.ns == 500);
  CHECK(tm.value.ntraj == 1000);
  CHECK(tm.train.nd == 5000);
  CHECK(tm.train.npi == 5000);
  CHECK(tm.learn_domain.radius[0] == doctest::Approx(0.7));
  CHECK(tm.scenario == 2);

  const PipelineConfig rr = preset_config(SystemId::RigidRod);
  CHECK(rr.value.ntraj == 3000);
  CHECK(rr.train.nd == 7000);
  CHECK(rr.learn_domain.center.size() == 3);

  const PipelineConfig ra = preset_config(SystemId::Rational);
  CHECK(ra.value.ns == 1000);
  CHECK(ra.train.npi == 30000);
  CHECK(ra.learn_domain.radius[0] == doctest::Approx(3.0));
}

TEST_CASE("config files override presets and reject bad schemas") {
  const std::string dir = scratch_dir("config");
  const std::string path = dir + "/c.json";

  write_text(path, R"({"system": "rational", "scenario": 1, "seed": 42,
                       "value": {"ns": 77}, "train": {"nd": 123},
                       "verify": {"max_boxes": 999, "threads": 2},
                       "estimate": {"samples": 5000, "epsilon": 0.25}})");
  const PipelineConfig c = read_pipeline_config(path);
  CHECK(c.system == SystemId::Rational);
  CHECK(c.scenario == 1);
  CHECK(c.seed == 42);
  CHECK(c.value.ns == 77);
  CHECK(c.value.ntraj == 1000);  // untouched preset survives
  CHECK(c.train.nd == 123);
  CHECK(c.train.npi == 30000);
  CHECK(c.budget.max_boxes == 999);
  CHECK(c.budget.threads == 2);
  CHECK(c.est_samples == 5000);
  CHECK(c.epsilon == doctest::Approx(0.25));

  CHECK_THROWS_AS(read_pipeline_config(dir + "/missing.json"), ContractViolation);

  write_text(path, "{not json");
  CHECK_THROWS_AS(read_pipeline_config(path), ContractViolation);

  write_text(path, R"({"system": "warpdrive"})");
  CHECK_THROWS_AS(read_pipeline_config(path), ContractViolation);

  write_text(path, R"({"system": "cospoly", "scenario": 3})");
  CHECK_THROWS_AS(read_pipeline_config(path), ContractViolation);

  write_text(path, R"({"system": "cospoly",
                       "verify_domain": {"center": [0, 0, 0], "radius": [1, 1, 1]}})");
  CHECK_THROWS_AS(read_pipeline_config(path), ContractViolation);
}

TEST_CASE("scenario one collapses the disturbance set and the signal count") {
  PipelineConfig cfg = preset_config(SystemId::TwoMachine);
  cfg.scenario = 1;
  const SystemSpec sys = scenario_system(cfg);
  CHECK(sys.W.lo[0] == doctest::Approx(0.5));
  CHECK(sys.W.hi[0] == doctest::Approx(0.5));
  CHECK(scenario_value_config(cfg).ntraj == 1);

  cfg.scenario = 2;
  const SystemSpec full = scenario_system(cfg);
  CHECK(full.W.lo[0] == doctest::Approx(0.25));
  CHECK(full.W.hi[0] == doctest::Approx(0.75));
  CHECK(scenario_value_config(cfg).ntraj == 1000);
}

TEST_CASE("initial region construction ignores the scenario collapse") {
  // Soundness depends on this: the region must hold for the full disturbance
  // set even when certification later restricts it to a point.
  PipelineConfig cfg = preset_config(SystemId::CosPoly);
  cfg.scenario = 1;
  const EllipsoidRoa collapsed = make_initial_region(cfg);
  cfg.scenario = 2;
  const EllipsoidRoa full = make_initial_region(cfg);
  CHECK(collapsed.c1 == doctest::Approx(full.c1).epsilon(1e-12));
  CHECK(collapsed.c1 == doctest::Approx(std::sqrt(6.0) - 2.0).epsilon(1e-9));
}

TEST_CASE("thread resolution honors the environment cap") {
  unsetenv("ROA_FORGE_THREADS");
  CHECK(resolve_threads(8) == 8);
  CHECK(resolve_threads(0) >= 1);
  CHECK(resolve_threads(100000) == 256);
  setenv("ROA_FORGE_THREADS", "2", 1);
  CHECK(resolve_threads(8) == 2);
  CHECK(resolve_threads(1) == 1);
  setenv("ROA_FORGE_THREADS", "garbage", 1);
  CHECK(resolve_threads(8) == 8);  // unparsable cap is ignored
  unsetenv("ROA_FORGE_THREADS");
}

TEST_CASE("certification reports survive a JSON round-trip") {
  const std::string dir = scratch_dir("report");
  CertificationReport r;
  r.system = "rational";
  r.scenario = 2;
  r.params.c1 = 1.25;
  r.params.c2 = 56.5;
  r.params.omega1 = 0.31;
  r.params.omega2 = 0.87;
  r.params.epsilon = 1e-3;
  r.epsilon_net = 1e-4;
  r.safety.status = VerdictStatus::Certified;
  r.dvp.status = VerdictStatus::Certified;
  r.dvp.boxes_processed = 815;
  r.c2w2.status = VerdictStatus::Unknown;
  r.dw.status = VerdictStatus::Falsified;
  r.dw.witness_x = {0.5, -0.25};
  r.dw.witness_w = {0.1};

  const std::string path = dir + "/report.json";
  write_report_json(path, r);
  const CertificationReport b = read_report_json(path);
  CHECK(b.system == r.system);
  CHECK(b.scenario == r.scenario);
  CHECK(b.params.c1 == r.params.c1);
  CHECK(b.params.c2 == r.params.c2);
  CHECK(b.params.omega1 == r.params.omega1);
  CHECK(b.params.omega2 == r.params.omega2);
  CHECK(b.epsilon_net == r.epsilon_net);
  CHECK(b.safety.status == VerdictStatus::Certified);
  CHECK(b.dvp.status == VerdictStatus::Certified);
  CHECK(b.dvp.boxes_processed == 815);
  CHECK(b.c2w2.status == VerdictStatus::Unknown);
  CHECK(b.dw.status == VerdictStatus::Falsified);
  REQUIRE(b.dw.witness_x.size() == 2);
  CHECK(b.dw.witness_x[1] == -0.25);
  CHECK(b.dw.witness_w[0] == 0.1);

  CHECK(!r.all_certified());
  CHECK(r.overall() == VerdictStatus::Falsified);  // falsified beats unknown

  // The witness block names the first falsified condition.
  nlohmann::json j;
  std::ifstream(path) >> j;
  CHECK(j.at("witness").at("condition") == "dW");
  CHECK(j.at("verdicts").at("dVP") == "certified");
}

TEST_CASE("state CSV files round-trip at full precision") {
  const std::string dir = scratch_dir("csv");
  const std::string path = dir + "/states.csv";
  const std::vector<Vec> states = {{0.1, -0.123456789012345678},
                                   {1e-300, 3.0},
                                   {-2.5, 0.7071067811865476}};
  write_states_csv(path, states);
  const auto back = read_states_csv(path, 2);
  REQUIRE(back.size() == states.size());
  for (size_t i = 0; i < states.size(); ++i) {
    CHECK(back[i][0] == states[i][0]);
    CHECK(back[i][1] == states[i][1]);
  }
  CHECK_THROWS_AS(read_states_csv(path, 3), ContractViolation);
}

// ---- process-level checks of the built binary ----

TEST_CASE("list-systems prints every builtin in declaration order") {
  const RunResult r = run_cli("list-systems");
  CHECK(r.code == 0);
  const auto pos_tm = r.out.find("twomachine");
  const auto pos_cp = r.out.find("cospoly");
  const auto pos_rr = r.out.find("rigidrod");
  const auto pos_ra = r.out.find("rational");
  REQUIRE(pos_tm != std::string::npos);
  REQUIRE(pos_ra != std::string::npos);
  CHECK(pos_tm < pos_cp);
  CHECK(pos_cp < pos_rr);
  CHECK(pos_rr < pos_ra);
}

TEST_CASE("bad configuration paths exit with the configuration code") {
  CHECK(run_cli("certify --config /nonexistent/c.json --seed 0").code == 5);

  const std::string dir = scratch_dir("badcfg");
  write_text(dir + "/c.json", R"({"system": "warpdrive"})");
  const RunResult r = run_cli("certify --config " + dir + "/c.json --seed 0");
  CHECK(r.code == 5);
  CHECK(r.out.find("unknown system") != std::string::npos);
}

TEST_CASE("run-all produces deterministic artifacts and a certified report") {
  const std::string dir = scratch_dir("e2e");
  const std::string cfg = small_config(dir);

  const RunResult first = run_cli("run-all --config " + cfg + " --seed 3");
  CHECK(first.code == 0);
  for (const char* f : {"dataset.csv", "pi_points.csv", "model.json", "region.json",
                        "report.json", "levelset.csv", "gen_report.json",
                        "train_report.json"}) {
    CHECK(fs::exists(dir + "/out/" + f));
  }

  nlohmann::json rep;
  std::ifstream(dir + "/out/report.json") >> rep;
  CHECK(rep.at("verdicts").at("safety") == "certified");
  CHECK(rep.at("verdicts").at("dVP") == "certified");
  CHECK(rep.at("verdicts").at("c2w2") == "certified");
  CHECK(rep.at("verdicts").at("dW") == "certified");
  CHECK(rep.at("c2").get<double>() > rep.at("c1").get<double>());
  CHECK(rep.at("omega2").get<double>() > rep.at("omega1").get<double>());

  // Byte-for-byte reproducibility in a fresh directory.
  const RunResult second =
      run_cli("run-all --config " + cfg + " --seed 3 --out " + dir + "/out2");
  CHECK(second.code == 0);
  for (const char* f : {"dataset.csv", "pi_points.csv", "model.json", "report.json",
                        "levelset.csv"}) {
    CHECK(slurp(dir + "/out/" + f) == slurp(dir + "/out2/" + f));
  }

  // certify alone reuses the trained model instead of regenerating it.
  const auto model_before = fs::last_write_time(dir + "/out/model.json");
  const RunResult again = run_cli("certify --config " + cfg + " --seed 3");
  CHECK(again.code == 0);
  CHECK(fs::last_write_time(dir + "/out/model.json") == model_before);
  CHECK(again.out.find("trained:") == std::string::npos);

  // A doctored capture level must be caught by the definitive pass.
  const RunResult tampered =
      run_cli("certify --config " + cfg + " --seed 3 --tamper-omega2 0.1");
  CHECK(tampered.code == 2);
  nlohmann::json trep;
  std::ifstream(dir + "/out/report.json") >> trep;
  CHECK(trep.at("verdicts").at("dW") == "falsified");
  CHECK(trep.at("witness").at("condition") == "dW");
  CHECK(trep.at("witness").at("x").size() == 2);

  // The level-set grid marks the certified sublevel set as safe everywhere.
  const RunResult restored = run_cli("run-all --config " + cfg + " --seed 3");
  CHECK(restored.code == 0);
  std::ifstream ls(dir + "/out/levelset.csv");
  std::string header;
  std::getline(ls, header);
  CHECK(header == "x1,x2,omega_nn,nu,in_W_omega2,in_E_c2,in_E_c1,safe");
  int rows = 0, in_band = 0;
  for (std::string line; std::getline(ls, line);) {
    ++rows;
    std::istringstream cols(line);
    std::string cell;
    std::vector<std::string> v;
    while (std::getline(cols, cell, ',')) v.push_back(cell);
    REQUIRE(v.size() == 8);
    if (v[4] == "1") {
      ++in_band;
      CHECK(v[7] == "1");  // certified points are never unsafe
    }
  }
  CHECK(rows == 60 * 60);
  CHECK(in_band > 0);
}

TEST_CASE("gen-data and train stages run standalone") {
  const std::string dir = scratch_dir("stages");
  const std::string cfg = small_config(dir);

  const RunResult gen = run_cli("gen-data --config " + cfg + " --seed 3");
  CHECK(gen.code == 0);
  CHECK(fs::exists(dir + "/out/dataset.csv"));
  CHECK(fs::exists(dir + "/out/pi_points.csv"));
  CHECK(!fs::exists(dir + "/out/model.json"));

  const RunResult tr = run_cli("train --config " + cfg + " --seed 3");
  CHECK(tr.code == 0);
  CHECK(fs::exists(dir + "/out/model.json"));
  nlohmann::json trep;
  std::ifstream(dir + "/out/train_report.json") >> trep;
  CHECK(trep.at("final_loss").get<double>() < 0.1);
  CHECK(trep.at("epochs_run").get<int>() <= 400);
}

TEST_CASE("seed is required for the sampling subcommands") {
  const std::string dir = scratch_dir("seedreq");
  const std::string cfg = small_config(dir);
  const RunResult r = run_cli("gen-data --config " + cfg);
  CHECK(r.code != 0);
  CHECK(r.out.find("--seed") != std::string::npos);
}

}  // TEST_SUITE
