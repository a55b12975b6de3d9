// Set-based value machinery: the per-set stage cost and its algebraic
// companions, trajectory-sampled reachable clouds, finite-horizon value
// estimates, and the residual of the fixed-point equation those estimates
// are trained against.
#pragma once

#include <functional>
#include <string>

#include "roaforge/dynamics.hpp"

namespace roaforge {

struct ValueConfig {
  int ns = 500;               // truncation horizon
  int ntraj = 1000;           // sampled disturbance signals per point
  double v_cap = 50.0;        // saturation: 1-exp(-50) is 1.0 in double
  std::uint64_t seed_base = 0;
};

struct ValueSample {
  Vec x;
  double w_target = 0.0;  // in [0,1]
  bool diverged = false;
};

// Stage cost Psi(S) = (sup gamma)(sup alpha) over the cloud, with the
// conventions: sup alpha = 0 forces 0, otherwise sup gamma = inf forces inf.
// Accepts singletons and clouds (the shapes the sampled pipeline produces).
double psi(const SystemSpec& sys, const CompactSetRepr& s);

// xi = 1 - exp(-Psi) in [0,1]; beta = exp(Psi) - 1 in [0,inf].
double xi(const SystemSpec& sys, const CompactSetRepr& s);
double beta(const SystemSpec& sys, const CompactSetRepr& s);

struct ReachSample {
  std::vector<PointCloud> clouds;  // clouds[k] = sampled reachable set at time k
  bool diverged = false;           // a trajectory left the divergence box; sequence truncated
};

// Sampled reachable-set under ntraj disturbance signals seeded
// seed_base + j (j = 1..ntraj). Deterministic.
ReachSample approx_reach(const SystemSpec& sys, const Vec& x, const ValueConfig& cfg);

struct ValueEval {
  double v = 0.0;
  bool diverged = false;
};

// Streaming sum of psi over the sampled reachable clouds; saturates at
// v_cap on an unsafe cloud, on accumulated mass, or on divergence.
ValueEval v_finite_eval(const SystemSpec& sys, const Vec& x, const ValueConfig& cfg);
double v_finite(const SystemSpec& sys, const Vec& x, const ValueConfig& cfg);
double w_finite(const SystemSpec& sys, const Vec& x, const ValueConfig& cfg);

ValueSample make_value_sample(const SystemSpec& sys, const Vec& x, const ValueConfig& cfg);

// Residual of w({x}) - w(F({x})) = xi({x}) (1 - w(F({x}))) for a candidate
// set-value function evaluated through the system's embedding.
using EmbeddedEvaluator = std::function<double(const Vec&)>;
double bellman_residual_w(const SystemSpec& sys, const Vec& x, const EmbeddedEvaluator& w_fn);

// Uniform collocation points in `domain` (seeded by cfg.seed_base), each
// evaluated with its own non-overlapping block of signal seeds.
std::vector<ValueSample> make_dataset(const SystemSpec& sys, const BoxSet& domain, int nd,
                                      const ValueConfig& cfg);

// CSV with header x1,...,xn,w_target,diverged; %.17g round-trip precision.
void write_dataset_csv(const std::string& path, const std::vector<ValueSample>& samples);
std::vector<ValueSample> read_dataset_csv(const std::string& path);

}  // namespace roaforge
