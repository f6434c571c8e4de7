#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "emgpose/dataio.hpp"
#include "emgpose/kinematics.hpp"

namespace emgpose::estimator {

/// Architecture of the per-joint sub-networks. Each joint has its own dense
/// network whose input is the EMG envelope row concatenated with the previous
/// angles of the *other* joints, so the sub-network input width is
/// nEmgInputs + nJoints - 1.
struct NetworkConfig {
  int nEmgInputs = 64;
  int nJoints = 29;
  std::vector<int> hiddenLayers{128, 128};  // empty -> single linear layer
  std::string activation = "softplus";      // softplus | relu | tanh

  int subInputWidth() const { return nEmgInputs + nJoints - 1; }
};

/// One dense layer, out = W * in + b with W shaped (outWidth x inWidth).
struct DenseLayer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

/// Layers of one joint's sub-network; hidden layers apply the configured
/// nonlinearity, the final layer is linear with a single output.
struct SubNetwork {
  std::vector<DenseLayer> layers;
};

struct ModelWeights {
  NetworkConfig config;
  std::vector<SubNetwork> joints;
};

/// Seeded symmetric uniform initialization scaled by 1 / sqrt(fanIn); biases
/// start at zero. The draw order (joints, then layers, then the weight matrix
/// row-major) is fixed so a seed pins the exact model.
ModelWeights init_model(const NetworkConfig& config, std::uint64_t seed);

/// Throws ConfigError when layer shapes are inconsistent with the config or
/// NumericError when a parameter is non-finite.
void validate(const ModelWeights& model);

/// Optimizer constants. Defaults follow the reference training recipe.
struct TrainHyper {
  double learningRate = 1e-5;
  double adamEps = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  int batchSize = 2000;
  int epochs = 200;
};

/// First/second moment accumulators shaped like the model, plus the shared
/// step counter. Default-constructed state is a fresh optimizer; moments are
/// allocated and zeroed on the first step.
struct AdamState {
  std::vector<SubNetwork> m;
  std::vector<SubNetwork> v;
  std::int64_t step = 0;
};

/// Per-parameter gradients (shaped like the model) of each sub-network's own
/// mean-squared error, plus the mean loss over joints for reporting.
struct Gradients {
  std::vector<SubNetwork> joints;
  double loss = 0.0;
};

/// One recursive step: output j is sub-network j applied to the EMG row
/// concatenated with prevAngles excluding entry j.
Eigen::VectorXd forward(const ModelWeights& model, const Eigen::VectorXd& emgRow,
                        const Eigen::VectorXd& prevAngles);

/// Exact batched gradients. Rows of emg / prevAngles / targets correspond;
/// the loss per joint is the mean over rows of the squared residual. Throws
/// NumericError when an activation or the loss is non-finite.
Gradients backprop(const ModelWeights& model, const Eigen::MatrixXd& emg,
                   const Eigen::MatrixXd& prevAngles, const Eigen::MatrixXd& targets);

/// Bias-corrected Adam update: m-hat / (sqrt(v-hat) + eps) with the step
/// counter shared across all parameters.
void adam_step(ModelWeights& model, const Gradients& grads, AdamState& state,
               const TrainHyper& hyper);

struct TrainResult {
  std::vector<double> lossHistory;  // one mean-squared-error value per epoch
};

/// Teacher-forced training: row t pairs (envelope[t], anglesNorm[t-1]) with
/// target anglesNorm[t], so the recursive input is always the ground truth.
/// Minibatch order is reshuffled every epoch from `shuffleSeed`; runs are
/// bit-reproducible given (seed, data, hyper). Epoch loss is the mean squared
/// error over all rows and joints seen that epoch.
TrainResult train(ModelWeights& model, const dataio::AlignedDataset& dataset,
                  const TrainHyper& hyper, std::uint64_t shuffleSeed);

struct InferStats {
  double meanStepMs = 0.0;
  double maxStepMs = 0.0;
};

/// Strictly sequential recursion: the estimate at t feeds t+1, starting from
/// initAngles. Throws NumericError on a non-finite estimate.
Eigen::MatrixXd infer(const ModelWeights& model, const Eigen::MatrixXd& envelope,
                      const Eigen::VectorXd& initAngles, InferStats* stats = nullptr);

/// Causal low-pass Butterworth (bilinear transform with pre-warping), applied
/// as a single forward pass primed to the first sample's steady state.
std::vector<double> butterworth_lowpass(const std::vector<double>& x, int order,
                                        double cutoffHz, double fsHz);

/// Column-wise variant for angle series.
Eigen::MatrixXd lowpass_columns(const Eigen::MatrixXd& x, int order, double cutoffHz,
                                double fsHz);

/// Denormalizes each row and maps it through the forward kinematics. Angles
/// outside the range of motion are clamped, matching what a physical hand
/// could have produced.
std::vector<kin::MarkerFrame> postprocess(const Eigen::MatrixXd& anglesNorm,
                                          const kin::HandSkeleton& skeleton);

/// Checkpoints: versioned JSON of the config and shaped arrays. Loading
/// validates shapes and finiteness.
void save_model(const std::string& path, const ModelWeights& model);
ModelWeights load_model(const std::string& path);

/// Training log: CSV with epoch and loss columns.
void save_loss_csv(const std::string& path, const std::vector<double>& lossHistory);

}  // namespace emgpose::estimator
