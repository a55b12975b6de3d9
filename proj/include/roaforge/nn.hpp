// Small feedforward network with hand-rolled reverse-mode gradients, plus
// the training loop that fits the normalized set-value function from sampled
// targets and one-step fixed-point residuals.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "roaforge/dynamics.hpp"
#include "roaforge/linalg.hpp"
#include "roaforge/value.hpp"

namespace roaforge {

// Dense MLP: tanh on hidden layers, identity on the scalar output. The
// embedding tag records which set embedding the input expects, so a loaded
// model cannot silently be evaluated against the wrong system family.
struct MlpModel {
  std::vector<int> layer_dims;  // [input, hidden..., 1]
  std::vector<Mat> weights;     // weights[k]: layer_dims[k+1] x layer_dims[k]
  std::vector<Vec> biases;
  EmbeddingKind embedding = EmbeddingKind::IntervalCenterRadius;
  std::string system_name;
};

// Xavier-uniform initialization, deterministic in the seed.
MlpModel make_mlp(const std::vector<int>& layer_dims, std::uint64_t seed);

double forward(const MlpModel& m, const Vec& z);

// Network evaluated on the singleton embedding of a state.
double omega_nn(const MlpModel& m, const SystemSpec& sys, const Vec& x);

// Flat parameter vector: per layer, weight rows then bias, layers in order.
int num_params(const MlpModel& m);
Vec get_params(const MlpModel& m);
void set_params(MlpModel& m, const Vec& theta);

struct TrainConfig {
  double lambda_d = 0.1;   // weight of the fit-to-targets term
  double lambda_pi = 1.0;  // weight of the fixed-point residual term
  int nd = 5000;           // sampled value targets
  int npi = 0;             // collocation points; 0 means same as nd
  int epochs = 5000;
  int batch = 0;  // 0 means full batch
  double lr = 1e-3;
  std::uint64_t seed = 0;
  double early_stop = 1e-6;
  std::vector<int> hidden;  // empty: two tanh layers, width 20 (n=2) or 30 (n=3)
};

// Collocation point with the parameter-independent pieces precomputed: the
// embedded state, the embedded one-step set image, and the stage weight.
struct PiPoint {
  Vec z_x;
  Vec z_f;
  double xi_x = 0.0;
};

struct TrainData {
  std::vector<Vec> z_data;     // embedded data states
  std::vector<double> target;  // sampled normalized values
  std::vector<PiPoint> pi;
};

// Embeds the dataset and collocation states once; evaluates set images and
// stage weights through the system.
TrainData prepare_training_data(const SystemSpec& sys, const std::vector<ValueSample>& data,
                                const std::vector<Vec>& pi_states);

double loss(const MlpModel& m, const TrainData& td, const TrainConfig& cfg);

// Gradient of the composite loss over the full TrainData, flattened in
// get_params order. Optionally reports the loss from the same pass.
Vec grad_params(const MlpModel& m, const TrainData& td, const TrainConfig& cfg,
                double* loss_out = nullptr);

struct TrainReport {
  double final_loss = 0.0;
  std::vector<double> loss_history;  // one entry per optimizer step
  double wall_time_s = 0.0;
  int epochs_run = 0;
};

std::vector<Vec> sample_pi_states(const SystemSpec& sys, int npi, std::uint64_t seed);

// Adam on the composite loss over a prepared batch, updating the model in
// place. Deterministic; throws NumericError if the loss goes non-finite.
TrainReport fit(MlpModel& model, const TrainData& td, const TrainConfig& cfg);

// Builds the architecture for the system, prepares the batch, and fits.
std::pair<MlpModel, TrainReport> train_on(const SystemSpec& sys, const TrainConfig& cfg,
                                          const std::vector<ValueSample>& data,
                                          const std::vector<Vec>& pi_states);

// Samples targets and collocation points from the learning domain, then fits.
std::pair<MlpModel, TrainReport> train(const SystemSpec& sys, const TrainConfig& cfg,
                                       const ValueConfig& value_cfg);

void write_model_json(const std::string& path, const MlpModel& m);
MlpModel read_model_json(const std::string& path);

}  // namespace roaforge
