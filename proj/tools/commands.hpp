#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace emgpose::cli {

/// One struct per subcommand, defaults first, then JSON config, then flags.
/// `flagKeys` lists the config keys explicitly set on the command line; those
/// win over file values. Every run_* writes its artifacts plus a manifest
/// into `outDir`.

struct SynthArgs {
  std::string configPath;
  std::set<std::string> flagKeys;
  std::string outDir = "synth_out";
  std::uint64_t seed = 0;
  double durationS = 10.0;
  int nChannels = 64;
  int gridRows = 2;
  int gridCols = 32;
  double emgFs = 2048.0;
  double markerFs = 100.0;
  double noiseStd = 1.0;
  double noiseFloorV = 2e-5;
  double lineHum50HzAmpl = 0.0;
  int nSinusoids = 5;
  int nLatents = 3;
  double freqLoHz = 0.1;
  double freqHiHz = 1.0;
  double excursionFrac = 0.8;
  std::vector<int> activeJoints;
  double promptDurationS = 8.0;
  int nPromptPoses = 16;
};
void run_synth(SynthArgs args);

struct PreprocessArgs {
  std::string configPath;
  std::set<std::string> flagKeys;
  std::string outDir = "preprocess_out";
  std::string emgPath;
  std::string markersPath;
  std::string anglesPath;
  std::string promptsPath;
  std::string statsInPath;  // training statistics to apply instead of self stats
  std::string gridSelection = "full";
  int windowLen = 200;
  int slide = 25;
  bool standardize = true;
};
void run_preprocess(PreprocessArgs args);

struct VarianceArgs {
  std::string configPath;
  std::set<std::string> flagKeys;
  std::string outDir = "variance_out";
  std::vector<std::string> emgPaths;
  std::string gridSelection = "full";
  int windowLen = 200;
  int slide = 25;
};
void run_variance(VarianceArgs args);

struct ImpedanceArgs {
  std::string configPath;
  std::set<std::string> flagKeys;
  std::string outDir = "impedance_out";
  std::string measurementsPath;
  double rinOhm = 80e6;
  double areaCm2 = 0.1257;
  double reportFreqHz = 50.0;
  bool halvePairs = false;  // measurements are series pairs, split equally
  std::string emgAPath;     // optional signal-quality comparison
  std::string emgBPath;
  int compareChannel = 0;
};
void run_impedance(ImpedanceArgs args);

struct TrainArgs {
  std::string configPath;
  std::set<std::string> flagKeys;
  std::string outDir = "train_out";
  std::string envelopePath;
  std::string anglesPath;
  std::vector<int> hiddenLayers = {128, 128};
  std::string activation = "softplus";
  double learningRate = 1e-5;
  double adamEps = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  int batchSize = 2000;
  int epochs = 200;
  std::uint64_t seed = 0;
  std::uint64_t shuffleSeed = 1;
};
void run_train(TrainArgs args);

struct InferArgs {
  std::string configPath;
  std::set<std::string> flagKeys;
  std::string outDir = "infer_out";
  std::string modelPath;
  std::string envelopePath;
  std::string initAnglesPath;  // optional, first row used as the initial pose
};
void run_infer(InferArgs args);

struct EvaluatePair {
  std::string label;
  std::string actualPath;
  std::string estimatedPath;
};

struct EvaluateArgs {
  std::string configPath;
  std::set<std::string> flagKeys;
  std::string outDir = "evaluate_out";
  std::vector<EvaluatePair> pairs;
  std::vector<EvaluatePair> baselinePairs;  // optional paired comparison
};
void run_evaluate(EvaluateArgs args);

struct SpmArgs {
  std::string configPath;
  std::set<std::string> flagKeys;
  std::string outDir = "spm_out";
  std::string actualPath;
  std::string estimatedPath;
  std::string estimatedBPath;  // optional second condition for cmcjd
  std::string promptsPath;
  double alpha = 0.05;
  int nodes = 256;
};
void run_spm(SpmArgs args);

}  // namespace emgpose::cli
