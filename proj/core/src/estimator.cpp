#include "emgpose/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "emgpose/errors.hpp"
#include "emgpose/rng.hpp"
#include "emgpose/signal.hpp"

namespace emgpose::estimator {

namespace {

using json = nlohmann::ordered_json;

enum class Activation { Softplus, Relu, Tanh };

Activation parse_activation(const std::string& name) {
  if (name == "softplus") return Activation::Softplus;
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + name + "'");
}

// Overflow-safe softplus: for large z, log(1 + e^z) = z to double precision.
double softplus(double z) {
  if (z > 30.0) return z;
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

double act_value(Activation a, double z) {
  switch (a) {
    case Activation::Softplus: return softplus(z);
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
  }
  return z;
}

double act_deriv(Activation a, double z) {
  switch (a) {
    case Activation::Softplus: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

void check_config(const NetworkConfig& cfg) {
  if (cfg.nEmgInputs < 1 || cfg.nJoints < 1)
    throw ConfigError("network needs at least one EMG input and one joint");
  for (int w : cfg.hiddenLayers)
    if (w < 1) throw ConfigError("hidden layer widths must be positive");
  parse_activation(cfg.activation);
}

std::vector<int> layer_widths(const NetworkConfig& cfg) {
  std::vector<int> widths{cfg.subInputWidth()};
  widths.insert(widths.end(), cfg.hiddenLayers.begin(), cfg.hiddenLayers.end());
  widths.push_back(1);
  return widths;
}

// Input row for sub-network j: the EMG row, then prevAngles with entry j
// removed. The exclusion makes output j structurally independent of its own
// previous value.
void fill_input_row(const NetworkConfig& cfg, const Eigen::VectorXd& emgRow,
                    const Eigen::VectorXd& prevAngles, int j, Eigen::VectorXd& x) {
  x.head(cfg.nEmgInputs) = emgRow;
  Eigen::Index k = cfg.nEmgInputs;
  for (int a = 0; a < cfg.nJoints; ++a) {
    if (a == j) continue;
    x[k++] = prevAngles[a];
  }
}

void check_shapes(const ModelWeights& model) {
  check_config(model.config);
  if (static_cast<int>(model.joints.size()) != model.config.nJoints)
    throw ConfigError("model holds a different joint count than its config");
  const auto widths = layer_widths(model.config);
  for (const SubNetwork& sub : model.joints) {
    if (sub.layers.size() + 1 != widths.size())
      throw ConfigError("sub-network layer count does not match the config");
    for (std::size_t l = 0; l < sub.layers.size(); ++l) {
      const auto& layer = sub.layers[l];
      if (layer.W.rows() != widths[l + 1] || layer.W.cols() != widths[l] ||
          layer.b.size() != widths[l + 1])
        throw ConfigError("layer shape does not match the config");
    }
  }
}

}  // namespace

ModelWeights init_model(const NetworkConfig& config, std::uint64_t seed) {
  check_config(config);
  ModelWeights model;
  model.config = config;
  model.joints.resize(static_cast<std::size_t>(config.nJoints));
  const auto widths = layer_widths(config);
  Rng rng(seed);
  for (SubNetwork& sub : model.joints) {
    sub.layers.resize(widths.size() - 1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      DenseLayer& layer = sub.layers[l];
      const double scale = 1.0 / std::sqrt(static_cast<double>(widths[l]));
      layer.W.resize(widths[l + 1], widths[l]);
      for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.W.cols(); ++c)
          layer.W(r, c) = rng.uniform(-scale, scale);
      layer.b = Eigen::VectorXd::Zero(widths[l + 1]);
    }
  }
  return model;
}

void validate(const ModelWeights& model) {
  check_shapes(model);
  for (const SubNetwork& sub : model.joints)
    for (const DenseLayer& layer : sub.layers)
      if (!layer.W.allFinite() || !layer.b.allFinite())
        throw NumericError("model holds non-finite parameters");
}

Eigen::VectorXd forward(const ModelWeights& model, const Eigen::VectorXd& emgRow,
                        const Eigen::VectorXd& prevAngles) {
  const NetworkConfig& cfg = model.config;
  check_shapes(model);
  if (emgRow.size() != cfg.nEmgInputs || prevAngles.size() != cfg.nJoints)
    throw DataError("forward input widths do not match the network config");
  const Activation act = parse_activation(cfg.activation);

  Eigen::VectorXd out(cfg.nJoints);
  Eigen::VectorXd x(cfg.subInputWidth());
  for (int j = 0; j < cfg.nJoints; ++j) {
    fill_input_row(cfg, emgRow, prevAngles, j, x);
    Eigen::VectorXd a = x;
    const auto& layers = model.joints[static_cast<std::size_t>(j)].layers;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Eigen::VectorXd z = layers[l].W * a + layers[l].b;
      if (l + 1 < layers.size())
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = act_value(act, z[i]);
      a = std::move(z);
    }
    out[j] = a[0];
  }
  return out;
}

Gradients backprop(const ModelWeights& model, const Eigen::MatrixXd& emg,
                   const Eigen::MatrixXd& prevAngles, const Eigen::MatrixXd& targets) {
  const NetworkConfig& cfg = model.config;
  check_shapes(model);
  const Eigen::Index n = emg.rows();
  if (n == 0) throw DataError("backprop batch is empty");
  if (emg.cols() != cfg.nEmgInputs || prevAngles.rows() != n ||
      prevAngles.cols() != cfg.nJoints || targets.rows() != n ||
      targets.cols() != cfg.nJoints)
    throw DataError("backprop batch shapes do not match the network config");
  const Activation act = parse_activation(cfg.activation);

  Gradients grads;
  grads.joints.resize(model.joints.size());
  double lossSum = 0.0;

  Eigen::MatrixXd x(n, cfg.subInputWidth());
  for (int j = 0; j < cfg.nJoints; ++j) {
    x.leftCols(cfg.nEmgInputs) = emg;
    Eigen::Index k = cfg.nEmgInputs;
    for (int a = 0; a < cfg.nJoints; ++a) {
      if (a == j) continue;
      x.col(k++) = prevAngles.col(a);
    }

    const auto& layers = model.joints[static_cast<std::size_t>(j)].layers;
    const std::size_t L = layers.size();
    std::vector<Eigen::MatrixXd> acts(L + 1);  // acts[l] feeds layer l
    std::vector<Eigen::MatrixXd> zs(L);
    acts[0] = x;
    for (std::size_t l = 0; l < L; ++l) {
      zs[l] = (acts[l] * layers[l].W.transpose()).rowwise() + layers[l].b.transpose();
      if (l + 1 < L) {
        acts[l + 1] = zs[l].unaryExpr([act](double z) { return act_value(act, z); });
      } else {
        acts[l + 1] = zs[l];
      }
    }

    const Eigen::VectorXd residual = acts[L].col(0) - targets.col(j);
    const double lossJ = residual.squaredNorm() / static_cast<double>(n);
    if (!std::isfinite(lossJ))
      throw NumericError("non-finite activations in sub-network " + std::to_string(j));
    lossSum += lossJ;

    auto& gsub = grads.joints[static_cast<std::size_t>(j)];
    gsub.layers.resize(L);
    Eigen::MatrixXd delta = (2.0 / static_cast<double>(n)) * residual;  // n x 1
    for (std::size_t l = L; l-- > 0;) {
      gsub.layers[l].W = delta.transpose() * acts[l];
      gsub.layers[l].b = delta.colwise().sum().transpose();
      if (l > 0) {
        Eigen::MatrixXd dAct =
            zs[l - 1].unaryExpr([act](double z) { return act_deriv(act, z); });
        delta = (delta * layers[l].W).cwiseProduct(dAct);
      }
    }
  }
  grads.loss = lossSum / static_cast<double>(cfg.nJoints);
  return grads;
}

namespace {

void adam_update(Eigen::MatrixXd& w, const Eigen::MatrixXd& g, Eigen::MatrixXd& m,
                 Eigen::MatrixXd& v, double lr, double eps, double b1, double b2,
                 double b1t, double b2t) {
  m = b1 * m + (1.0 - b1) * g;
  v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
  const Eigen::ArrayXXd mHat = m.array() / (1.0 - b1t);
  const Eigen::ArrayXXd vHat = v.array() / (1.0 - b2t);
  w.array() -= lr * mHat / (vHat.sqrt() + eps);
}

}  // namespace

void adam_step(ModelWeights& model, const Gradients& grads, AdamState& state,
               const TrainHyper& hyper) {
  check_shapes(model);
  if (hyper.beta1 <= 0.0 || hyper.beta1 >= 1.0 || hyper.beta2 <= 0.0 || hyper.beta2 >= 1.0)
    throw ConfigError("Adam betas must lie strictly between 0 and 1");
  if (hyper.batchSize < 1) throw ConfigError("batch size must be at least 1");
  if (hyper.learningRate <= 0.0 || hyper.adamEps <= 0.0)
    throw ConfigError("learning rate and epsilon must be positive");
  if (grads.joints.size() != model.joints.size())
    throw DataError("gradient shapes do not match the model");

  if (state.m.empty()) {
    state.m.resize(model.joints.size());
    state.v.resize(model.joints.size());
    for (std::size_t j = 0; j < model.joints.size(); ++j) {
      const auto& layers = model.joints[j].layers;
      state.m[j].layers.resize(layers.size());
      state.v[j].layers.resize(layers.size());
      for (std::size_t l = 0; l < layers.size(); ++l) {
        state.m[j].layers[l].W = Eigen::MatrixXd::Zero(layers[l].W.rows(), layers[l].W.cols());
        state.m[j].layers[l].b = Eigen::VectorXd::Zero(layers[l].b.size());
        state.v[j].layers[l] = state.m[j].layers[l];
      }
    }
  }

  ++state.step;
  const double b1t = std::pow(hyper.beta1, static_cast<double>(state.step));
  const double b2t = std::pow(hyper.beta2, static_cast<double>(state.step));
  for (std::size_t j = 0; j < model.joints.size(); ++j) {
    auto& layers = model.joints[j].layers;
    const auto& glayers = grads.joints[j].layers;
    if (glayers.size() != layers.size())
      throw DataError("gradient shapes do not match the model");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      adam_update(layers[l].W, glayers[l].W, state.m[j].layers[l].W, state.v[j].layers[l].W,
                  hyper.learningRate, hyper.adamEps, hyper.beta1, hyper.beta2, b1t, b2t);
      Eigen::MatrixXd b = layers[l].b, gb = glayers[l].b;
      Eigen::MatrixXd mb = state.m[j].layers[l].b, vb = state.v[j].layers[l].b;
      adam_update(b, gb, mb, vb, hyper.learningRate, hyper.adamEps, hyper.beta1, hyper.beta2,
                  b1t, b2t);
      layers[l].b = b;
      state.m[j].layers[l].b = mb;
      state.v[j].layers[l].b = vb;
    }
  }
}

TrainResult train(ModelWeights& model, const dataio::AlignedDataset& dataset,
                  const TrainHyper& hyper, std::uint64_t shuffleSeed) {
  check_shapes(model);
  const Eigen::Index n = dataset.envelope.rows();
  if (dataset.anglesNorm.rows() != n)
    throw DataError("envelope and angle row counts differ");
  if (n < 2) throw DataError("training needs at least two aligned rows");
  if (dataset.envelope.cols() != model.config.nEmgInputs ||
      dataset.anglesNorm.cols() != model.config.nJoints)
    throw DataError("dataset widths do not match the network config");
  if (!dataset.envelope.allFinite() || !dataset.anglesNorm.allFinite())
    throw DataError("dataset contains non-finite values");
  if (hyper.batchSize < 1 || hyper.epochs < 1)
    throw ConfigError("batch size and epoch count must be positive");
  if (n < hyper.batchSize)
    throw ConfigError("batch size exceeds the dataset rows");

  // Teacher forcing: the recursive input at row t is the ground-truth pose
  // at t-1, never the model's own estimate.
  const Eigen::Index rows = n - 1;
  const Eigen::MatrixXd emg = dataset.envelope.middleRows(1, rows);
  const Eigen::MatrixXd prev = dataset.anglesNorm.middleRows(0, rows);
  const Eigen::MatrixXd targ = dataset.anglesNorm.middleRows(1, rows);

  Rng rng(shuffleSeed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  AdamState state;
  TrainResult result;
  result.lossHistory.reserve(static_cast<std::size_t>(hyper.epochs));
  const Eigen::Index batch = std::min<Eigen::Index>(hyper.batchSize, rows);
  Eigen::MatrixXd emgB(batch, emg.cols()), prevB(batch, prev.cols()), targB(batch, targ.cols());

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);

    double sqErrSum = 0.0;
    for (Eigen::Index start = 0; start < rows; start += batch) {
      const Eigen::Index count = std::min(batch, rows - start);
      for (Eigen::Index r = 0; r < count; ++r) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + r)];
        emgB.row(r) = emg.row(src);
        prevB.row(r) = prev.row(src);
        targB.row(r) = targ.row(src);
      }
      const Gradients grads = backprop(model, emgB.topRows(count), prevB.topRows(count),
                                       targB.topRows(count));
      adam_step(model, grads, state, hyper);
      sqErrSum += grads.loss * static_cast<double>(count);
    }
    const double epochLoss = sqErrSum / static_cast<double>(rows);
    if (!std::isfinite(epochLoss))
      throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch));
    result.lossHistory.push_back(epochLoss);
  }
  return result;
}

Eigen::MatrixXd infer(const ModelWeights& model, const Eigen::MatrixXd& envelope,
                      const Eigen::VectorXd& initAngles, InferStats* stats) {
  check_shapes(model);
  if (envelope.cols() != model.config.nEmgInputs)
    throw DataError("envelope width does not match the network config");
  if (initAngles.size() != model.config.nJoints)
    throw DataError("initial angle count does not match the network config");

  const Eigen::Index n = envelope.rows();
  Eigen::MatrixXd out(n, model.config.nJoints);
  Eigen::VectorXd prev = initAngles;
  double totalMs = 0.0, maxMs = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const Eigen::VectorXd est = forward(model, envelope.row(t).transpose(), prev);
    const auto t1 = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    totalMs += ms;
    maxMs = std::max(maxMs, ms);
    if (!est.allFinite())
      throw NumericError("non-finite estimate at step " + std::to_string(t));
    out.row(t) = est.transpose();
    prev = est;
  }
  if (stats != nullptr) {
    stats->meanStepMs = n > 0 ? totalMs / static_cast<double>(n) : 0.0;
    stats->maxStepMs = maxMs;
  }
  return out;
}

std::vector<double> butterworth_lowpass(const std::vector<double>& x, int order,
                                        double cutoffHz, double fsHz) {
  const auto sections = signal::butterworth_lowpass_design(order, cutoffHz, fsHz);
  std::vector<double> y(x.size());
  if (x.empty()) return y;
  signal::SosFilter filter(sections);
  filter.reset(x.front());  // primed to steady state, no startup transient
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = filter.process(x[i]);
  return y;
}

Eigen::MatrixXd lowpass_columns(const Eigen::MatrixXd& x, int order, double cutoffHz,
                                double fsHz) {
  Eigen::MatrixXd y(x.rows(), x.cols());
  std::vector<double> column(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      column[static_cast<std::size_t>(i)] = x(i, c);
    const auto filtered = butterworth_lowpass(column, order, cutoffHz, fsHz);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      y(i, c) = filtered[static_cast<std::size_t>(i)];
  }
  return y;
}

std::vector<kin::MarkerFrame> postprocess(const Eigen::MatrixXd& anglesNorm,
                                          const kin::HandSkeleton& skeleton) {
  if (anglesNorm.cols() != static_cast<Eigen::Index>(kin::kNumJoints))
    throw DataError("normalized angle series must have 29 columns");
  std::vector<kin::MarkerFrame> frames;
  frames.reserve(static_cast<std::size_t>(anglesNorm.rows()));
  for (Eigen::Index i = 0; i < anglesNorm.rows(); ++i) {
    const kin::JointAngles a =
        kin::denormalize_angles(anglesNorm.row(i).transpose(), skeleton.restPose);
    frames.push_back(kin::fka(a, skeleton, kin::RomPolicy::Clamp));
  }
  return frames;
}

void save_model(const std::string& path, const ModelWeights& model) {
  validate(model);
  json doc;
  doc["version"] = 1;
  doc["config"] = {{"nEmgInputs", model.config.nEmgInputs},
                   {"nJoints", model.config.nJoints},
                   {"hiddenLayers", model.config.hiddenLayers},
                   {"activation", model.config.activation}};
  json joints = json::array();
  for (const SubNetwork& sub : model.joints) {
    json layers = json::array();
    for (const DenseLayer& layer : sub.layers) {
      json entry;
      entry["rows"] = layer.W.rows();
      entry["cols"] = layer.W.cols();
      std::vector<double> w(static_cast<std::size_t>(layer.W.size()));
      for (Eigen::Index r = 0; r < layer.W.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.W.cols(); ++c)
          w[static_cast<std::size_t>(r * layer.W.cols() + c)] = layer.W(r, c);
      entry["W"] = w;
      entry["b"] = std::vector<double>(layer.b.data(), layer.b.data() + layer.b.size());
      layers.push_back(std::move(entry));
    }
    joints.push_back(std::move(layers));
  }
  doc["joints"] = std::move(joints);

  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  out << doc.dump() << "\n";
  if (!out) throw DataError("failed writing model file: " + path);
}

ModelWeights load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing model file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("malformed model file: " + std::string(e.what()));
  }

  ModelWeights model;
  try {
    if (doc.at("version").get<int>() != 1) throw DataError("unsupported model file version");
    const json& cfg = doc.at("config");
    model.config.nEmgInputs = cfg.at("nEmgInputs").get<int>();
    model.config.nJoints = cfg.at("nJoints").get<int>();
    model.config.hiddenLayers = cfg.at("hiddenLayers").get<std::vector<int>>();
    model.config.activation = cfg.at("activation").get<std::string>();
    for (const json& layers : doc.at("joints")) {
      SubNetwork sub;
      for (const json& entry : layers) {
        DenseLayer layer;
        const auto rows = entry.at("rows").get<Eigen::Index>();
        const auto cols = entry.at("cols").get<Eigen::Index>();
        const auto w = entry.at("W").get<std::vector<double>>();
        const auto b = entry.at("b").get<std::vector<double>>();
        if (rows < 0 || cols < 0 ||
            static_cast<Eigen::Index>(w.size()) != rows * cols ||
            static_cast<Eigen::Index>(b.size()) != rows)
          throw DataError("model layer arrays do not match their declared shape");
        layer.W.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
          for (Eigen::Index c = 0; c < cols; ++c)
            layer.W(r, c) = w[static_cast<std::size_t>(r * cols + c)];
        layer.b = Eigen::Map<const Eigen::VectorXd>(b.data(),
                                                    static_cast<Eigen::Index>(b.size()));
        sub.layers.push_back(std::move(layer));
      }
      model.joints.push_back(std::move(sub));
    }
  } catch (const json::exception& e) {
    throw DataError("malformed model file: " + std::string(e.what()));
  }

  try {
    check_shapes(model);
  } catch (const ConfigError& e) {
    throw DataError(std::string("model file inconsistent: ") + e.what());
  }
  validate(model);
  return model;
}

void save_loss_csv(const std::string& path, const std::vector<double>& lossHistory) {
  Eigen::MatrixXd values(static_cast<Eigen::Index>(lossHistory.size()), 2);
  for (std::size_t i = 0; i < lossHistory.size(); ++i) {
    values(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    values(static_cast<Eigen::Index>(i), 1) = lossHistory[i];
  }
  dataio::write_csv(path, {"epoch", "loss"}, values);
}

}  // namespace emgpose::estimator
