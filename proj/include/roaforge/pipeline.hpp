// End-to-end orchestration: dataset generation, training, invariant-region
// construction, level estimation, sound verification with witness-guided
// retries, refinement, and artifact export. Every stage is deterministic in
// the configured seed, so identical configs reproduce identical files.
#pragma once

#include <string>

#include "roaforge/certify.hpp"
#include "roaforge/nn.hpp"

namespace roaforge {

struct PipelineConfig {
  SystemId system = SystemId::TwoMachine;
  int scenario = 2;  // 1 collapses the disturbance set to its center
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  ValueConfig value;    // ntraj is the full-disturbance count; scenario 1 uses 1
  TrainConfig train;
  VerifyBudget budget;  // threads 0 resolves via ROA_FORGE_THREADS / hardware

  long est_samples = 100000;
  double epsilon = 0.0;        // 0: derived from the constructed region
  double delta = 0.0;          // 0: derived from the level range
  double tamper_omega2 = 0.0;  // testing hook: added to the refined omega2
                               // right before the definitive verification pass

  BoxSet learn_domain;   // collocation sampling
  BoxSet verify_domain;  // verification and level-set export
  int levelset_res = 60;
  double slice_x3 = 0.0;  // third coordinate of the export slice (3-D systems)
};

// Defaults for a system: documented domains, horizons, sample counts, and
// network sizes. The base of every loaded config.
PipelineConfig preset_config(SystemId id);

// Preset for the file's "system", overridden by any fields present in the
// JSON object. Throws ContractViolation on parse or schema errors.
PipelineConfig read_pipeline_config(const std::string& path);

// The system the conditions are checked on: scenario 1 collapses W.
SystemSpec scenario_system(const PipelineConfig& cfg);

// Effective value sampling config for the scenario (scenario 1: ntraj = 1).
ValueConfig scenario_value_config(const PipelineConfig& cfg);

// Worker count: explicit budget.threads, else ROA_FORGE_THREADS, else the
// hardware count; the environment variable always caps the result.
int resolve_threads(int configured);

// Initial invariant region, always built from the original disturbance set:
// a region is only safe to start from if it tolerates the real uncertainty,
// and the collapsed set can inflate the closed-form level past the unsafe
// boundary. Analytic for the cosine-gain system, vertex-anchored ellipsoid
// construction otherwise.
EllipsoidRoa make_initial_region(const PipelineConfig& cfg);

struct CertificationReport {
  CandidateParams params;     // params.epsilon is the quadratic-band margin
  double epsilon_net = 0.0;   // margin used for the network band
  Verdict safety, dvp, c2w2, dw;
  int scenario = 2;
  std::string system;
  bool all_certified() const {
    return safety.status == VerdictStatus::Certified &&
           dvp.status == VerdictStatus::Certified &&
           c2w2.status == VerdictStatus::Certified && dw.status == VerdictStatus::Certified;
  }
  // Worst outcome over the four verdicts: Falsified dominates Unknown.
  VerdictStatus overall() const;
};

// Estimate -> verify -> retry -> refine for the safety gate and the three
// conditions. Throws EstimationError when no admissible candidate levels
// exist; returns non-certified reports (with witnesses) otherwise.
CertificationReport run_certification(const PipelineConfig& cfg, const MlpModel& model);

void write_report_json(const std::string& path, const CertificationReport& r);
CertificationReport read_report_json(const std::string& path);

// Plain CSV of sampled states, one row per point, no header.
void write_states_csv(const std::string& path, const std::vector<Vec>& pts);
std::vector<Vec> read_states_csv(const std::string& path, int dim);

// Uniform grid over the first two verification-domain axes (3-D systems
// slice at x3 = slice_x3) with the certified levels applied per cell.
// Columns: x1,x2,omega_nn,nu,in_W_omega2,in_E_c2,in_E_c1,safe.
void export_levelset_csv(const std::string& path, const PipelineConfig& cfg,
                         const MlpModel& model, const EllipsoidRoa& roa,
                         const CertificationReport& r);

}  // namespace roaforge
