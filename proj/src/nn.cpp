#include "roaforge/nn.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "roaforge/geometry.hpp"

namespace roaforge {

namespace {

void check_dims(const MlpModel& m) {
  RF_REQUIRE(m.layer_dims.size() >= 2, "mlp: need at least input and output dims");
  RF_REQUIRE(m.layer_dims.back() == 1, "mlp: scalar output expected");
  RF_REQUIRE(m.weights.size() == m.layer_dims.size() - 1 && m.biases.size() == m.weights.size(),
             "mlp: layer count mismatch");
  for (size_t k = 0; k < m.weights.size(); ++k) {
    RF_REQUIRE(m.weights[k].rows == m.layer_dims[k + 1] && m.weights[k].cols == m.layer_dims[k],
               "mlp: weight shape mismatch");
    RF_REQUIRE(static_cast<int>(m.biases[k].size()) == m.layer_dims[k + 1],
               "mlp: bias shape mismatch");
  }
}

// Activations per layer; acts[0] is the input, acts[k+1] the output of layer
// k (tanh on hidden layers, identity on the last).
struct Cache {
  std::vector<Vec> acts;
};

double forward_cached(const MlpModel& m, const Vec& z, Cache& c) {
  const int layers = static_cast<int>(m.weights.size());
  c.acts.resize(layers + 1);
  c.acts[0] = z;
  for (int k = 0; k < layers; ++k) {
    const Mat& w = m.weights[k];
    const Vec& in = c.acts[k];
    Vec& out = c.acts[k + 1];
    out.assign(w.rows, 0.0);
    for (int i = 0; i < w.rows; ++i) {
      double s = m.biases[k][i];
      const double* row = w.a.data() + static_cast<size_t>(i) * w.cols;
      for (int j = 0; j < w.cols; ++j) s += row[j] * in[j];
      out[i] = (k + 1 < layers) ? std::tanh(s) : s;
    }
  }
  return c.acts[layers][0];
}

// Per-layer offsets into the flat parameter vector.
std::vector<size_t> param_offsets(const MlpModel& m) {
  std::vector<size_t> offs(m.weights.size() + 1, 0);
  for (size_t k = 0; k < m.weights.size(); ++k) {
    offs[k + 1] = offs[k] + m.weights[k].a.size() + m.biases[k].size();
  }
  return offs;
}

// Accumulates dout * d(output)/d(params) into g (get_params layout).
void backward_accum(const MlpModel& m, const Cache& c, double dout,
                    const std::vector<size_t>& offs, Vec& g) {
  const int layers = static_cast<int>(m.weights.size());
  Vec cur(1, dout);  // d(loss)/d(acts[k+1]) while walking down
  Vec dpre, next;
  for (int k = layers - 1; k >= 0; --k) {
    const Mat& w = m.weights[k];
    dpre.assign(w.rows, 0.0);
    if (k == layers - 1) {
      dpre = cur;
    } else {
      const Vec& a = c.acts[k + 1];
      for (int i = 0; i < w.rows; ++i) dpre[i] = cur[i] * (1.0 - a[i] * a[i]);
    }
    double* gw = g.data() + offs[k];
    double* gb = gw + w.a.size();
    const Vec& in = c.acts[k];
    for (int i = 0; i < w.rows; ++i) {
      const double d = dpre[i];
      double* grow = gw + static_cast<size_t>(i) * w.cols;
      for (int j = 0; j < w.cols; ++j) grow[j] += d * in[j];
      gb[i] += d;
    }
    if (k > 0) {
      next.assign(w.cols, 0.0);
      for (int i = 0; i < w.rows; ++i) {
        const double d = dpre[i];
        const double* row = w.a.data() + static_cast<size_t>(i) * w.cols;
        for (int j = 0; j < w.cols; ++j) next[j] += row[j] * d;
      }
      cur = next;
    }
  }
}

// Composite loss over index ranges [d0,d1) of the data term and [p0,p1) of
// the residual term; accumulates the gradient when g is non-null.
double loss_grad_range(const MlpModel& m, const TrainData& td, const TrainConfig& cfg, size_t d0,
                       size_t d1, size_t p0, size_t p1, Vec* g) {
  const std::vector<size_t> offs = param_offsets(m);
  Cache cx, cf;
  double jd = 0.0, jpi = 0.0;
  const double nd = static_cast<double>(d1 - d0);
  const double npi = static_cast<double>(p1 - p0);
  for (size_t i = d0; i < d1; ++i) {
    const double pred = forward_cached(m, td.z_data[i], cx);
    const double r = pred - td.target[i];
    jd += r * r / nd;
    if (g) backward_accum(m, cx, 2.0 * cfg.lambda_d * r / nd, offs, *g);
  }
  for (size_t i = p0; i < p1; ++i) {
    const PiPoint& p = td.pi[i];
    const double wx = forward_cached(m, p.z_x, cx);
    const double wf = forward_cached(m, p.z_f, cf);
    const double keep = 1.0 - p.xi_x;
    const double r = wx - keep * wf - p.xi_x;
    jpi += r * r / npi;
    if (g) {
      backward_accum(m, cx, 2.0 * cfg.lambda_pi * r / npi, offs, *g);
      backward_accum(m, cf, -2.0 * cfg.lambda_pi * r * keep / npi, offs, *g);
    }
  }
  return cfg.lambda_d * jd + cfg.lambda_pi * jpi;
}

std::vector<int> default_hidden(int n) { return n <= 2 ? std::vector<int>{20, 20} : std::vector<int>{30, 30}; }

}  // namespace

MlpModel make_mlp(const std::vector<int>& layer_dims, std::uint64_t seed) {
  RF_REQUIRE(layer_dims.size() >= 2 && layer_dims.back() == 1, "make_mlp: bad layer dims");
  for (int d : layer_dims) RF_REQUIRE(d >= 1, "make_mlp: nonpositive layer dim");
  MlpModel m;
  m.layer_dims = layer_dims;
  Rng rng(seed);
  for (size_t k = 0; k + 1 < layer_dims.size(); ++k) {
    const int fan_in = layer_dims[k], fan_out = layer_dims[k + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Mat w(fan_out, fan_in);
    for (double& v : w.a) v = rng.uniform(-limit, limit);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(fan_out, 0.0);
  }
  return m;
}

double forward(const MlpModel& m, const Vec& z) {
  check_dims(m);
  RF_REQUIRE(static_cast<int>(z.size()) == m.layer_dims.front(), "forward: input dim mismatch");
  Cache c;
  return forward_cached(m, z, c);
}

double omega_nn(const MlpModel& m, const SystemSpec& sys, const Vec& x) {
  return forward(m, embed(CompactSetRepr(x), sys.embedding));
}

int num_params(const MlpModel& m) {
  size_t n = 0;
  for (size_t k = 0; k < m.weights.size(); ++k) n += m.weights[k].a.size() + m.biases[k].size();
  return static_cast<int>(n);
}

Vec get_params(const MlpModel& m) {
  Vec theta;
  theta.reserve(num_params(m));
  for (size_t k = 0; k < m.weights.size(); ++k) {
    theta.insert(theta.end(), m.weights[k].a.begin(), m.weights[k].a.end());
    theta.insert(theta.end(), m.biases[k].begin(), m.biases[k].end());
  }
  return theta;
}

void set_params(MlpModel& m, const Vec& theta) {
  RF_REQUIRE(static_cast<int>(theta.size()) == num_params(m), "set_params: size mismatch");
  size_t pos = 0;
  for (size_t k = 0; k < m.weights.size(); ++k) {
    std::copy(theta.begin() + pos, theta.begin() + pos + m.weights[k].a.size(),
              m.weights[k].a.begin());
    pos += m.weights[k].a.size();
    std::copy(theta.begin() + pos, theta.begin() + pos + m.biases[k].size(),
              m.biases[k].begin());
    pos += m.biases[k].size();
  }
}

TrainData prepare_training_data(const SystemSpec& sys, const std::vector<ValueSample>& data,
                                const std::vector<Vec>& pi_states) {
  TrainData td;
  td.z_data.reserve(data.size());
  td.target.reserve(data.size());
  for (const auto& s : data) {
    td.z_data.push_back(embed(CompactSetRepr(s.x), sys.embedding));
    td.target.push_back(s.w_target);
  }
  td.pi.reserve(pi_states.size());
  for (const auto& x : pi_states) {
    PiPoint p;
    p.z_x = embed(CompactSetRepr(x), sys.embedding);
    p.z_f = embed(set_image(sys, x), sys.embedding);
    p.xi_x = xi(sys, CompactSetRepr(x));
    td.pi.push_back(std::move(p));
  }
  return td;
}

double loss(const MlpModel& m, const TrainData& td, const TrainConfig& cfg) {
  check_dims(m);
  RF_REQUIRE(!td.z_data.empty() && !td.pi.empty(), "loss: empty batch");
  return loss_grad_range(m, td, cfg, 0, td.z_data.size(), 0, td.pi.size(), nullptr);
}

Vec grad_params(const MlpModel& m, const TrainData& td, const TrainConfig& cfg,
                double* loss_out) {
  check_dims(m);
  RF_REQUIRE(!td.z_data.empty() && !td.pi.empty(), "grad_params: empty batch");
  Vec g(num_params(m), 0.0);
  const double l = loss_grad_range(m, td, cfg, 0, td.z_data.size(), 0, td.pi.size(), &g);
  if (loss_out) *loss_out = l;
  return g;
}

std::vector<Vec> sample_pi_states(const SystemSpec& sys, int npi, std::uint64_t seed) {
  RF_REQUIRE(npi > 0, "sample_pi_states: npi must be positive");
  const BoxSet dom = default_domain(sys.id);
  Rng rng(seed);
  std::vector<Vec> pts(npi, Vec(sys.n));
  for (auto& x : pts) {
    for (int d = 0; d < sys.n; ++d) {
      x[d] = rng.uniform(dom.center[d] - dom.radius[d], dom.center[d] + dom.radius[d]);
    }
  }
  return pts;
}

TrainReport fit(MlpModel& model, const TrainData& td, const TrainConfig& cfg) {
  check_dims(model);
  RF_REQUIRE(cfg.epochs >= 0 && cfg.lr > 0.0, "fit: bad optimizer settings");
  RF_REQUIRE(!td.z_data.empty() && !td.pi.empty(), "fit: empty batch");
  const auto t0 = std::chrono::steady_clock::now();

  TrainReport report;
  const size_t nd = td.z_data.size(), npi = td.pi.size();
  const size_t batch = (cfg.batch > 0 && static_cast<size_t>(cfg.batch) < nd)
                           ? static_cast<size_t>(cfg.batch)
                           : nd;
  const size_t steps_per_epoch = (nd + batch - 1) / batch;

  Vec theta = get_params(model);
  Vec g(theta.size(), 0.0);
  Vec madam(theta.size(), 0.0), vadam(theta.size(), 0.0);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long t = 0;
  bool stop = false;
  for (int epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    for (size_t s = 0; s < steps_per_epoch && !stop; ++s) {
      const size_t d0 = s * batch, d1 = std::min(nd, d0 + batch);
      const size_t p0 = s * npi / steps_per_epoch, p1 = (s + 1) * npi / steps_per_epoch;
      std::fill(g.begin(), g.end(), 0.0);
      const double l =
          loss_grad_range(model, td, cfg, d0, d1, p0, std::max(p1, p0 + 1), &g);
      if (!std::isfinite(l)) {
        throw NumericError("fit: non-finite loss at step " + std::to_string(t));
      }
      report.loss_history.push_back(l);
      if (l < cfg.early_stop && steps_per_epoch == 1) {
        stop = true;
        break;
      }
      ++t;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
      for (size_t i = 0; i < theta.size(); ++i) {
        madam[i] = b1 * madam[i] + (1.0 - b1) * g[i];
        vadam[i] = b2 * vadam[i] + (1.0 - b2) * g[i] * g[i];
        theta[i] -= cfg.lr * (madam[i] / c1) / (std::sqrt(vadam[i] / c2) + eps);
      }
      set_params(model, theta);
    }
    report.epochs_run = epoch + 1;
  }
  report.final_loss = loss_grad_range(model, td, cfg, 0, nd, 0, npi, nullptr);
  if (!std::isfinite(report.final_loss)) throw NumericError("fit: non-finite final loss");
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::pair<MlpModel, TrainReport> train_on(const SystemSpec& sys, const TrainConfig& cfg,
                                          const std::vector<ValueSample>& data,
                                          const std::vector<Vec>& pi_states) {
  RF_REQUIRE(!data.empty() && !pi_states.empty(), "train: empty dataset");
  std::vector<int> dims;
  dims.push_back(2 * sys.n);  // both embeddings are [center;radius] / [u;v]
  const std::vector<int> hidden = cfg.hidden.empty() ? default_hidden(sys.n) : cfg.hidden;
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  MlpModel model = make_mlp(dims, cfg.seed);
  model.embedding = sys.embedding;
  model.system_name = system_name(sys.id);
  const TrainData td = prepare_training_data(sys, data, pi_states);
  TrainReport report = fit(model, td, cfg);
  return {std::move(model), std::move(report)};
}

std::pair<MlpModel, TrainReport> train(const SystemSpec& sys, const TrainConfig& cfg,
                                       const ValueConfig& value_cfg) {
  const int npi = cfg.npi > 0 ? cfg.npi : cfg.nd;
  const auto data = make_dataset(sys, default_domain(sys.id), cfg.nd, value_cfg);
  const auto pi_states = sample_pi_states(sys, npi, cfg.seed + 1);
  return train_on(sys, cfg, data, pi_states);
}

void write_model_json(const std::string& path, const MlpModel& m) {
  check_dims(m);
  nlohmann::json j;
  j["layer_dims"] = m.layer_dims;
  auto& jw = j["weights"] = nlohmann::json::array();
  for (const auto& w : m.weights) jw.push_back(w.a);
  auto& jb = j["biases"] = nlohmann::json::array();
  for (const auto& b : m.biases) jb.push_back(b);
  j["embedding"] =
      m.embedding == EmbeddingKind::SegmentCenterDirection ? "segment" : "interval";
  j["system"] = m.system_name;
  std::ofstream out(path);
  RF_REQUIRE(out.good(), "write_model_json: cannot open " + path);
  out << j.dump(2) << "\n";
  RF_REQUIRE(out.good(), "write_model_json: write failed for " + path);
}

MlpModel read_model_json(const std::string& path) {
  std::ifstream in(path);
  RF_REQUIRE(in.good(), "read_model_json: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("read_model_json: parse error: ") + e.what());
  }
  MlpModel m;
  try {
    m.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    const auto jw = j.at("weights");
    const auto jb = j.at("biases");
    RF_REQUIRE(m.layer_dims.size() >= 2 && jw.size() == m.layer_dims.size() - 1 &&
                   jb.size() == jw.size(),
               "read_model_json: layer count mismatch");
    for (size_t k = 0; k + 1 < m.layer_dims.size(); ++k) {
      Mat w(m.layer_dims[k + 1], m.layer_dims[k]);
      const auto flat = jw[k].get<std::vector<double>>();
      RF_REQUIRE(flat.size() == w.a.size(), "read_model_json: weight size mismatch");
      w.a = flat;
      m.weights.push_back(std::move(w));
      m.biases.push_back(jb[k].get<std::vector<double>>());
    }
    const std::string emb = j.at("embedding").get<std::string>();
    RF_REQUIRE(emb == "interval" || emb == "segment", "read_model_json: unknown embedding");
    m.embedding = emb == "segment" ? EmbeddingKind::SegmentCenterDirection
                                   : EmbeddingKind::IntervalCenterRadius;
    m.system_name = j.value("system", "");
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("read_model_json: bad schema: ") + e.what());
  }
  check_dims(m);
  for (const auto& w : m.weights) {
    for (double v : w.a) RF_REQUIRE(std::isfinite(v), "read_model_json: non-finite weight");
  }
  for (const auto& b : m.biases) {
    for (double v : b) RF_REQUIRE(std::isfinite(v), "read_model_json: non-finite bias");
  }
  return m;
}

}  // namespace roaforge
