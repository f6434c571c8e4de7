#include <exception>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "emgpose/errors.hpp"

namespace {

using emgpose::cli::EvaluatePair;

void print_error(const char* type, const std::string& message) {
  nlohmann::ordered_json j{{"error", {{"type", type}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
}

/// Remembers which CLI option feeds which config key, so the runner can tell
/// flag-set keys apart from file-set ones.
class KeyTracker {
 public:
  CLI::Option* track(CLI::Option* opt, std::string key) {
    tracked_.emplace_back(opt, std::move(key));
    return opt;
  }

  void collect(std::set<std::string>& flagKeys) const {
    for (const auto& [opt, key] : tracked_)
      if (opt->count() > 0) flagKeys.insert(key);
  }

 private:
  std::vector<std::pair<CLI::Option*, std::string>> tracked_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HD-sEMG hand pose toolkit: synthetic data, envelope extraction,\n"
               "spatial variance, electrode impedance, recursive estimation,\n"
               "and curve-level statistics."};
  app.require_subcommand(1);

  // synth
  auto synthArgs = std::make_shared<emgpose::cli::SynthArgs>();
  auto synthKeys = std::make_shared<KeyTracker>();
  {
    CLI::App* sub = app.add_subcommand("synth", "Generate a seeded synthetic recording");
    auto& a = *synthArgs;
    auto& k = *synthKeys;
    sub->add_option("--config", a.configPath, "JSON config file");
    k.track(sub->add_option("--out", a.outDir, "Output directory"), "outDir");
    k.track(sub->add_option("--seed", a.seed, "RNG seed"), "seed");
    k.track(sub->add_option("--duration", a.durationS, "Recording length in seconds"),
            "durationS");
    k.track(sub->add_option("--channels", a.nChannels, "EMG channel count"), "nChannels");
    k.track(sub->add_option("--grid-rows", a.gridRows, "Electrode grid rows"), "gridRows");
    k.track(sub->add_option("--grid-cols", a.gridCols, "Electrode grid columns"), "gridCols");
    k.track(sub->add_option("--emg-fs", a.emgFs, "EMG sampling rate in Hz"), "emgFs");
    k.track(sub->add_option("--marker-fs", a.markerFs, "Marker sampling rate in Hz"),
            "markerFs");
    k.track(sub->add_option("--noise-std", a.noiseStd, "Gain on the modulated noise"),
            "noiseStd");
    k.track(sub->add_option("--noise-floor", a.noiseFloorV, "Unmodulated noise floor in volts"),
            "noiseFloorV");
    k.track(sub->add_option("--line-hum", a.lineHum50HzAmpl, "50 Hz hum amplitude in volts"),
            "lineHum50HzAmpl");
    k.track(sub->add_option("--sinusoids", a.nSinusoids, "Sinusoids per latent drive"),
            "nSinusoids");
    k.track(sub->add_option("--latents", a.nLatents, "Latent drive count"), "nLatents");
    k.track(sub->add_option("--freq-lo", a.freqLoHz, "Lowest latent frequency in Hz"),
            "freqLoHz");
    k.track(sub->add_option("--freq-hi", a.freqHiHz, "Highest latent frequency in Hz"),
            "freqHiHz");
    k.track(sub->add_option("--excursion", a.excursionFrac, "Joint excursion fraction"),
            "excursionFrac");
    k.track(sub->add_option("--active-joints", a.activeJoints, "Driven joint indices"),
            "activeJoints");
    k.track(sub->add_option("--prompt-duration", a.promptDurationS,
                            "Seconds per prompted pose"),
            "promptDurationS");
    k.track(sub->add_option("--prompt-poses", a.nPromptPoses, "Distinct prompted poses"),
            "nPromptPoses");
    sub->callback([synthArgs, synthKeys] {
      synthKeys->collect(synthArgs->flagKeys);
      emgpose::cli::run_synth(*synthArgs);
    });
  }

  // preprocess
  auto preprocessArgs = std::make_shared<emgpose::cli::PreprocessArgs>();
  auto preprocessKeys = std::make_shared<KeyTracker>();
  {
    CLI::App* sub =
        app.add_subcommand("preprocess", "Extract the RMS envelope and align kinematics");
    auto& a = *preprocessArgs;
    auto& k = *preprocessKeys;
    sub->add_option("--config", a.configPath, "JSON config file");
    k.track(sub->add_option("--out", a.outDir, "Output directory"), "outDir");
    k.track(sub->add_option("--emg", a.emgPath, "EMG recording (.bin with JSON sidecar)"),
            "emg");
    k.track(sub->add_option("--markers", a.markersPath, "Marker trajectory CSV"), "markers");
    k.track(sub->add_option("--angles", a.anglesPath, "Joint angle CSV"), "angles");
    k.track(sub->add_option("--prompts", a.promptsPath, "Prompt schedule JSON"), "prompts");
    k.track(sub->add_option("--stats-in", a.statsInPath,
                            "Standardization statistics JSON from a training run"),
            "statsIn");
    k.track(sub->add_option("--grid", a.gridSelection, "Electrode grid selection"),
            "gridSelection");
    k.track(sub->add_option("--window", a.windowLen, "RMS window length in samples"),
            "windowLen");
    k.track(sub->add_option("--slide", a.slide, "RMS window slide in samples"), "slide");
    k.track(sub->add_flag("--standardize,!--no-standardize", a.standardize,
                          "Standardize envelope channels"),
            "standardize");
    sub->callback([preprocessArgs, preprocessKeys] {
      preprocessKeys->collect(preprocessArgs->flagKeys);
      emgpose::cli::run_preprocess(*preprocessArgs);
    });
  }

  // variance
  auto varianceArgs = std::make_shared<emgpose::cli::VarianceArgs>();
  auto varianceKeys = std::make_shared<KeyTracker>();
  {
    CLI::App* sub = app.add_subcommand(
        "variance", "Normalized directional variance across the electrode grid");
    auto& a = *varianceArgs;
    auto& k = *varianceKeys;
    sub->add_option("--config", a.configPath, "JSON config file");
    k.track(sub->add_option("--out", a.outDir, "Output directory"), "outDir");
    k.track(sub->add_option("--emg", a.emgPaths, "EMG recordings, one per subject"), "emg");
    k.track(sub->add_option("--grid", a.gridSelection, "Electrode grid selection"),
            "gridSelection");
    k.track(sub->add_option("--window", a.windowLen, "RMS window length in samples"),
            "windowLen");
    k.track(sub->add_option("--slide", a.slide, "RMS window slide in samples"), "slide");
    sub->callback([varianceArgs, varianceKeys] {
      varianceKeys->collect(varianceArgs->flagKeys);
      emgpose::cli::run_variance(*varianceArgs);
    });
  }

  // impedance
  auto impedanceArgs = std::make_shared<emgpose::cli::ImpedanceArgs>();
  auto impedanceKeys = std::make_shared<KeyTracker>();
  {
    CLI::App* sub =
        app.add_subcommand("impedance", "Electrode impedance fits, Bode summary, attenuation");
    auto& a = *impedanceArgs;
    auto& k = *impedanceKeys;
    sub->add_option("--config", a.configPath, "JSON config file");
    k.track(sub->add_option("--out", a.outDir, "Output directory"), "outDir");
    k.track(sub->add_option("--measurements", a.measurementsPath, "Measurement CSV"),
            "measurements");
    k.track(sub->add_option("--rin", a.rinOhm, "Amplifier input impedance in ohms"), "rinOhm");
    k.track(sub->add_option("--area", a.areaCm2, "Electrode contact area in cm^2"), "areaCm2");
    k.track(sub->add_option("--report-freq", a.reportFreqHz, "Frequency summarized in the report"),
            "reportFreqHz");
    k.track(sub->add_flag("--halve-pairs", a.halvePairs,
                          "Measurements are electrode pairs in series; report one interface"),
            "halvePairs");
    k.track(sub->add_option("--emg-a", a.emgAPath, "First recording for quality comparison"),
            "emgA");
    k.track(sub->add_option("--emg-b", a.emgBPath, "Second recording for quality comparison"),
            "emgB");
    k.track(sub->add_option("--compare-channel", a.compareChannel,
                            "Channel used by the quality comparison"),
            "compareChannel");
    sub->callback([impedanceArgs, impedanceKeys] {
      impedanceKeys->collect(impedanceArgs->flagKeys);
      emgpose::cli::run_impedance(*impedanceArgs);
    });
  }

  // train
  auto trainArgs = std::make_shared<emgpose::cli::TrainArgs>();
  auto trainKeys = std::make_shared<KeyTracker>();
  {
    CLI::App* sub = app.add_subcommand("train", "Train the recursive pose estimator");
    auto& a = *trainArgs;
    auto& k = *trainKeys;
    sub->add_option("--config", a.configPath, "JSON config file");
    k.track(sub->add_option("--out", a.outDir, "Output directory"), "outDir");
    k.track(sub->add_option("--envelope", a.envelopePath, "Standardized envelope CSV"),
            "envelope");
    k.track(sub->add_option("--angles", a.anglesPath, "Normalized angle CSV"), "angles");
    k.track(sub->add_option("--hidden", a.hiddenLayers, "Hidden layer widths"), "hiddenLayers");
    k.track(sub->add_option("--activation", a.activation, "Hidden activation"), "activation");
    k.track(sub->add_option("--lr", a.learningRate, "Adam learning rate"), "learningRate");
    k.track(sub->add_option("--adam-eps", a.adamEps, "Adam epsilon"), "adamEps");
    k.track(sub->add_option("--beta1", a.beta1, "Adam beta1"), "beta1");
    k.track(sub->add_option("--beta2", a.beta2, "Adam beta2"), "beta2");
    k.track(sub->add_option("--batch", a.batchSize, "Minibatch size"), "batchSize");
    k.track(sub->add_option("--epochs", a.epochs, "Training epochs"), "epochs");
    k.track(sub->add_option("--seed", a.seed, "Weight initialization seed"), "seed");
    k.track(sub->add_option("--shuffle-seed", a.shuffleSeed, "Minibatch shuffle seed"),
            "shuffleSeed");
    sub->callback([trainArgs, trainKeys] {
      trainKeys->collect(trainArgs->flagKeys);
      emgpose::cli::run_train(*trainArgs);
    });
  }

  // infer
  auto inferArgs = std::make_shared<emgpose::cli::InferArgs>();
  auto inferKeys = std::make_shared<KeyTracker>();
  {
    CLI::App* sub = app.add_subcommand("infer", "Run the estimator over an envelope");
    auto& a = *inferArgs;
    auto& k = *inferKeys;
    sub->add_option("--config", a.configPath, "JSON config file");
    k.track(sub->add_option("--out", a.outDir, "Output directory"), "outDir");
    k.track(sub->add_option("--model", a.modelPath, "Model checkpoint JSON"), "model");
    k.track(sub->add_option("--envelope", a.envelopePath, "Standardized envelope CSV"),
            "envelope");
    k.track(sub->add_option("--init-angles", a.initAnglesPath,
                            "Normalized angle CSV; first row seeds the recursion"),
            "initAngles");
    sub->callback([inferArgs, inferKeys] {
      inferKeys->collect(inferArgs->flagKeys);
      emgpose::cli::run_infer(*inferArgs);
    });
  }

  // evaluate
  auto evaluateArgs = std::make_shared<emgpose::cli::EvaluateArgs>();
  auto evaluateKeys = std::make_shared<KeyTracker>();
  auto evaluateActual = std::make_shared<std::string>();
  auto evaluateEstimated = std::make_shared<std::string>();
  {
    CLI::App* sub =
        app.add_subcommand("evaluate", "Correlation and wrist-frame distance report");
    auto& a = *evaluateArgs;
    auto& k = *evaluateKeys;
    sub->add_option("--config", a.configPath, "JSON config file");
    k.track(sub->add_option("--out", a.outDir, "Output directory"), "outDir");
    k.track(sub->add_option("--actual", *evaluateActual, "Measured normalized angle CSV"),
            "actual");
    k.track(sub->add_option("--estimated", *evaluateEstimated, "Estimated normalized angle CSV"),
            "estimated");
    sub->callback([evaluateArgs, evaluateKeys, evaluateActual, evaluateEstimated] {
      evaluateKeys->collect(evaluateArgs->flagKeys);
      if (!evaluateActual->empty() || !evaluateEstimated->empty())
        evaluateArgs->pairs.push_back({"pair0", *evaluateActual, *evaluateEstimated});
      emgpose::cli::run_evaluate(*evaluateArgs);
    });
  }

  // spm
  auto spmArgs = std::make_shared<emgpose::cli::SpmArgs>();
  auto spmKeys = std::make_shared<KeyTracker>();
  {
    CLI::App* sub = app.add_subcommand(
        "spm", "Statistical parametric maps and cross-joint difference curves");
    auto& a = *spmArgs;
    auto& k = *spmKeys;
    sub->add_option("--config", a.configPath, "JSON config file");
    k.track(sub->add_option("--out", a.outDir, "Output directory"), "outDir");
    k.track(sub->add_option("--actual", a.actualPath, "Measured normalized angle CSV"),
            "actual");
    k.track(sub->add_option("--estimated", a.estimatedPath, "Estimated normalized angle CSV"),
            "estimated");
    k.track(sub->add_option("--estimated-b", a.estimatedBPath,
                            "Second condition for the curve-level comparison"),
            "estimatedB");
    k.track(sub->add_option("--prompts", a.promptsPath, "Prompt schedule JSON"), "prompts");
    k.track(sub->add_option("--alpha", a.alpha, "Family-wise error rate"), "alpha");
    k.track(sub->add_option("--nodes", a.nodes, "Resampled nodes per movement"), "nodes");
    sub->callback([spmArgs, spmKeys] {
      spmKeys->collect(spmArgs->flagKeys);
      emgpose::cli::run_spm(*spmArgs);
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // help or version
    print_error("ConfigError", e.what());
    return 2;
  } catch (const emgpose::ConfigError& e) {
    print_error("ConfigError", e.what());
    return 2;
  } catch (const emgpose::DataError& e) {
    print_error("DataError", e.what());
    return 3;
  } catch (const emgpose::NumericError& e) {
    print_error("NumericError", e.what());
    return 4;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return 1;
  }
  return 0;
}
