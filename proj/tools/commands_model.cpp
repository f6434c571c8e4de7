#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>

#include <json.hpp>

#include "cli_support.hpp"
#include "emgpose/dataio.hpp"
#include "emgpose/emgproc.hpp"
#include "emgpose/errors.hpp"
#include "emgpose/estimator.hpp"
#include "emgpose/evalspm.hpp"
#include "emgpose/kinematics.hpp"
#include "emgpose/stats.hpp"
#include "emgpose/svgplot.hpp"

namespace emgpose::cli {

namespace {

using nlohmann::ordered_json;

emgproc::EmgEnvelope load_standardized_envelope(const std::string& path) {
  emgproc::EmgEnvelope env = emgproc::load_envelope(path);
  if (!env.standardized)
    throw DataError("the estimator consumes standardized envelopes; " + path + " is raw");
  return env;
}

void check_timestamps(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const char* what) {
  if (a.size() != b.size()) throw DataError(std::string(what) + ": row counts differ");
  if ((a - b).cwiseAbs().maxCoeff() > 1e-9)
    throw DataError(std::string(what) + ": timestamps differ");
}

std::vector<EvaluatePair> parse_pairs(const ordered_json& config, const char* key) {
  std::vector<EvaluatePair> pairs;
  const auto it = config.find(key);
  if (it == config.end()) return pairs;
  if (!it->is_array())
    throw ConfigError(std::string("config key \"") + key + "\" must be an array of objects");
  for (const auto& entry : *it) {
    if (!entry.is_object() || !entry.contains("actual") || !entry.contains("estimated"))
      throw ConfigError(std::string("every \"") + key +
                        "\" entry needs \"actual\" and \"estimated\" paths");
    EvaluatePair pair;
    pair.actualPath = entry["actual"].get<std::string>();
    pair.estimatedPath = entry["estimated"].get<std::string>();
    pair.label = entry.contains("label")
                     ? entry["label"].get<std::string>()
                     : "pair" + std::to_string(pairs.size());
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

// Estimated marker frames laid out as a trajectory on the envelope clock.
dataio::MarkerTrajectory frames_to_trajectory(const std::vector<kin::MarkerFrame>& frames,
                                              const Eigen::VectorXd& timestamps, double fs,
                                              int slide) {
  const std::vector<std::string>& labels = kin::marker_labels();
  dataio::MarkerTrajectory traj;
  traj.labels = labels;
  traj.fs = fs / slide;
  traj.startTime = timestamps.size() > 0 ? timestamps[0] : 0.0;
  traj.xyz.resize(static_cast<Eigen::Index>(frames.size()),
                  static_cast<Eigen::Index>(3 * labels.size()));
  for (std::size_t i = 0; i < frames.size(); ++i)
    for (std::size_t m = 0; m < labels.size(); ++m)
      traj.xyz.row(static_cast<Eigen::Index>(i)).segment<3>(static_cast<Eigen::Index>(3 * m)) =
          frames[i].at(labels[m]).transpose();
  return traj;
}

ordered_json performance_json(const evalspm::PerformanceReport& report) {
  return ordered_json::parse(evalspm::to_json_string(report));
}

void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace

void run_train(TrainArgs args) {
  const ordered_json fileConfig = load_config(
      args.configPath, {"outDir", "envelope", "angles", "hiddenLayers", "activation",
                        "learningRate", "adamEps", "beta1", "beta2", "batchSize", "epochs",
                        "seed", "shuffleSeed"});
  const ConfigMerger merge(fileConfig, args.flagKeys);
  merge("outDir", args.outDir);
  merge("envelope", args.envelopePath);
  merge("angles", args.anglesPath);
  merge("hiddenLayers", args.hiddenLayers);
  merge("activation", args.activation);
  merge("learningRate", args.learningRate);
  merge("adamEps", args.adamEps);
  merge("beta1", args.beta1);
  merge("beta2", args.beta2);
  merge("batchSize", args.batchSize);
  merge("epochs", args.epochs);
  merge("seed", args.seed);
  merge("shuffleSeed", args.shuffleSeed);

  if (args.envelopePath.empty() || args.anglesPath.empty())
    throw ConfigError("train needs --envelope and --angles");

  RunContext ctx("train", args.outDir);
  ctx.set_config(ordered_json{{"envelope", args.envelopePath},
                              {"angles", args.anglesPath},
                              {"hiddenLayers", args.hiddenLayers},
                              {"activation", args.activation},
                              {"learningRate", args.learningRate},
                              {"adamEps", args.adamEps},
                              {"beta1", args.beta1},
                              {"beta2", args.beta2},
                              {"batchSize", args.batchSize},
                              {"epochs", args.epochs},
                              {"seed", args.seed},
                              {"shuffleSeed", args.shuffleSeed}});
  ctx.note_input(args.envelopePath);
  ctx.note_input(args.anglesPath);

  const emgproc::EmgEnvelope env = load_standardized_envelope(args.envelopePath);
  const NormAngleSeries angles = load_norm_angles(args.anglesPath);
  check_timestamps(env.timestamps, angles.timestamps, "train");

  dataio::AlignedDataset dataset;
  dataset.envelope = env.values;
  dataset.anglesNorm = angles.anglesNorm;
  dataset.timestamps = env.timestamps;

  estimator::NetworkConfig netConfig;
  netConfig.nEmgInputs = static_cast<int>(env.values.cols());
  netConfig.hiddenLayers = args.hiddenLayers;
  netConfig.activation = args.activation;

  estimator::TrainHyper hyper;
  hyper.learningRate = args.learningRate;
  hyper.adamEps = args.adamEps;
  hyper.beta1 = args.beta1;
  hyper.beta2 = args.beta2;
  hyper.batchSize = args.batchSize;
  hyper.epochs = args.epochs;

  estimator::ModelWeights model = estimator::init_model(netConfig, args.seed);
  const estimator::TrainResult result = estimator::train(model, dataset, hyper, args.shuffleSeed);
  estimator::save_model(ctx.out_path("model.json"), model);
  estimator::save_loss_csv(ctx.out_path("loss.csv"), result.lossHistory);
  ctx.write_manifest();
  std::cerr << "train: epoch loss " << result.lossHistory.front() << " -> "
            << result.lossHistory.back() << "\n";
}

void run_infer(InferArgs args) {
  const ordered_json fileConfig =
      load_config(args.configPath, {"outDir", "model", "envelope", "initAngles"});
  const ConfigMerger merge(fileConfig, args.flagKeys);
  merge("outDir", args.outDir);
  merge("model", args.modelPath);
  merge("envelope", args.envelopePath);
  merge("initAngles", args.initAnglesPath);

  if (args.modelPath.empty() || args.envelopePath.empty())
    throw ConfigError("infer needs --model and --envelope");

  RunContext ctx("infer", args.outDir);
  ctx.set_config(ordered_json{{"model", args.modelPath},
                              {"envelope", args.envelopePath},
                              {"initAngles", args.initAnglesPath}});
  ctx.note_input(args.modelPath);
  ctx.note_input(args.envelopePath);

  const estimator::ModelWeights model = estimator::load_model(args.modelPath);
  const emgproc::EmgEnvelope env = load_standardized_envelope(args.envelopePath);
  if (env.values.cols() != model.config.nEmgInputs)
    throw DataError("envelope channel count does not match the model input width");

  Eigen::VectorXd init = Eigen::VectorXd::Zero(model.config.nJoints);
  if (!args.initAnglesPath.empty()) {
    ctx.note_input(args.initAnglesPath);
    const NormAngleSeries series = load_norm_angles(args.initAnglesPath);
    if (series.anglesNorm.rows() == 0) throw DataError("initial angle file is empty");
    init = series.anglesNorm.row(0).transpose();
  }

  estimator::InferStats stats;
  const Eigen::MatrixXd estimated = estimator::infer(model, env.values, init, &stats);
  save_norm_angles(ctx.out_path("angles_norm.csv"), env.timestamps, estimated);

  const std::vector<kin::MarkerFrame> frames =
      estimator::postprocess(estimated, kin::default_skeleton());
  dataio::save_markers(ctx.out_path("markers_est.csv"),
                       frames_to_trajectory(frames, env.timestamps, env.fs, env.slide));

  ctx.write_manifest();
  // Latency is timing noise, deliberately kept out of the artifacts.
  std::cerr << "infer: " << estimated.rows() << " steps, mean " << stats.meanStepMs
            << " ms, max " << stats.maxStepMs << " ms per step\n";
}

void run_evaluate(EvaluateArgs args) {
  const ordered_json fileConfig = load_config(
      args.configPath, {"outDir", "pairs", "baselinePairs", "actual", "estimated"});
  const ConfigMerger merge(fileConfig, args.flagKeys);
  merge("outDir", args.outDir);
  std::vector<EvaluatePair> configPairs = parse_pairs(fileConfig, "pairs");
  std::vector<EvaluatePair> baseline = parse_pairs(fileConfig, "baselinePairs");

  std::string actualFlag, estimatedFlag;
  if (!args.pairs.empty()) {
    actualFlag = args.pairs.front().actualPath;
    estimatedFlag = args.pairs.front().estimatedPath;
  }
  merge("actual", actualFlag);
  merge("estimated", estimatedFlag);

  std::vector<EvaluatePair> pairs = std::move(configPairs);
  if (pairs.empty()) {
    if (actualFlag.empty() || estimatedFlag.empty())
      throw ConfigError("evaluate needs --actual and --estimated, or a \"pairs\" config list");
    pairs.push_back({"pair0", actualFlag, estimatedFlag});
  } else if (!actualFlag.empty() || !estimatedFlag.empty()) {
    throw ConfigError("use either --actual/--estimated or the \"pairs\" config list, not both");
  }
  if (!baseline.empty() && baseline.size() != pairs.size())
    throw ConfigError("baselinePairs must match pairs one to one");

  RunContext ctx("evaluate", args.outDir);
  ordered_json pairsJson = ordered_json::array();
  for (const auto& p : pairs)
    pairsJson.push_back(
        ordered_json{{"label", p.label}, {"actual", p.actualPath}, {"estimated", p.estimatedPath}});
  ordered_json baselineJson = ordered_json::array();
  for (const auto& p : baseline)
    baselineJson.push_back(
        ordered_json{{"label", p.label}, {"actual", p.actualPath}, {"estimated", p.estimatedPath}});
  ctx.set_config(ordered_json{{"pairs", pairsJson}, {"baselinePairs", baselineJson}});

  const kin::HandSkeleton skeleton = kin::default_skeleton();
  const auto evaluate_pair = [&](const EvaluatePair& pair) {
    ctx.note_input(pair.actualPath);
    ctx.note_input(pair.estimatedPath);
    const NormAngleSeries actual = load_norm_angles(pair.actualPath);
    const NormAngleSeries estimated = load_norm_angles(pair.estimatedPath);
    check_timestamps(actual.timestamps, estimated.timestamps, pair.label.c_str());
    return evalspm::evaluate(actual.anglesNorm, estimated.anglesNorm,
                             estimator::postprocess(actual.anglesNorm, skeleton),
                             estimator::postprocess(estimated.anglesNorm, skeleton));
  };

  ordered_json report;
  ordered_json perPair = ordered_json::array();
  std::vector<double> mpccs, mds;
  svgplot::BoxPlot box;
  box.title = "per-joint correlation";
  box.yAxis.label = "PCC";
  for (const auto& pair : pairs) {
    const evalspm::PerformanceReport r = evaluate_pair(pair);
    ordered_json entry = performance_json(r);
    entry["label"] = pair.label;
    perPair.push_back(entry);
    mpccs.push_back(r.mpcc);
    mds.push_back(r.mdMm);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (Eigen::Index j = 0; j < r.perJointPcc.size(); ++j) {
      if (std::isnan(r.perJointPcc[j])) continue;
      lo = std::min(lo, r.perJointPcc[j]);
      hi = std::max(hi, r.perJointPcc[j]);
    }
    box.boxes.push_back(
        {lo, r.pccQuartiles.q1, r.pccQuartiles.median, r.pccQuartiles.q3, hi, pair.label});
  }
  report["pairs"] = perPair;

  if (pairs.size() > 1) {
    const stats::Quartiles qm = stats::quartiles(mpccs);
    const stats::Quartiles qd = stats::quartiles(mds);
    report["aggregate"] =
        ordered_json{{"mpcc", ordered_json{{"q1", qm.q1}, {"median", qm.median}, {"q3", qm.q3}}},
                     {"mdMm", ordered_json{{"q1", qd.q1}, {"median", qd.median}, {"q3", qd.q3}}}};
  }

  if (!baseline.empty()) {
    if (pairs.size() < 2)
      throw ConfigError("a paired comparison needs at least two subject pairs");
    std::vector<double> mpccB, mdB;
    ordered_json perBaseline = ordered_json::array();
    for (const auto& pair : baseline) {
      const evalspm::PerformanceReport r = evaluate_pair(pair);
      ordered_json entry = performance_json(r);
      entry["label"] = pair.label;
      perBaseline.push_back(entry);
      mpccB.push_back(r.mpcc);
      mdB.push_back(r.mdMm);
    }
    report["baseline"] = perBaseline;
    const stats::TestReport tMpcc =
        stats::paired_t(mpccs, mpccB, stats::Alternative::TwoSided);
    const stats::TestReport tMd = stats::paired_t(mds, mdB, stats::Alternative::TwoSided);
    report["pairedTests"] =
        ordered_json{{"mpcc", ordered_json::parse(stats::to_json_string(tMpcc))},
                     {"mdMm", ordered_json::parse(stats::to_json_string(tMd))}};
  }

  write_json(ctx.out_path("report.json"), report);
  svgplot::save(ctx.out_path("pcc_box.svg"), svgplot::render(box));
  ctx.write_manifest();
  std::cerr << "evaluate: " << pairs.size() << " pair(s), first MPCC = " << mpccs.front()
            << ", MD = " << mds.front() << " mm\n";
}

void run_spm(SpmArgs args) {
  const ordered_json fileConfig =
      load_config(args.configPath, {"outDir", "actual", "estimated", "estimatedB", "prompts",
                                    "alpha", "nodes"});
  const ConfigMerger merge(fileConfig, args.flagKeys);
  merge("outDir", args.outDir);
  merge("actual", args.actualPath);
  merge("estimated", args.estimatedPath);
  merge("estimatedB", args.estimatedBPath);
  merge("prompts", args.promptsPath);
  merge("alpha", args.alpha);
  merge("nodes", args.nodes);

  if (args.actualPath.empty() || args.estimatedPath.empty() || args.promptsPath.empty())
    throw ConfigError("spm needs --actual, --estimated, and --prompts");

  RunContext ctx("spm", args.outDir);
  ctx.set_config(ordered_json{{"actual", args.actualPath},
                              {"estimated", args.estimatedPath},
                              {"estimatedB", args.estimatedBPath},
                              {"prompts", args.promptsPath},
                              {"alpha", args.alpha},
                              {"nodes", args.nodes}});
  ctx.note_input(args.actualPath);
  ctx.note_input(args.estimatedPath);
  ctx.note_input(args.promptsPath);

  const NormAngleSeries actual = load_norm_angles(args.actualPath);
  const std::vector<dataio::PromptEntry> prompts = dataio::load_prompts(args.promptsPath);

  // Repetitions of one prompted pose are the observations the t-field needs;
  // a pose must recur at least three times to enter the analysis.
  std::map<int, std::vector<std::size_t>> byPose;
  for (std::size_t i = 0; i < prompts.size(); ++i) byPose[prompts[i].poseId].push_back(i);

  const auto cjd_set = [&](const std::string& estimatedPath, ordered_json* movementsJson) {
    const NormAngleSeries estimated = load_norm_angles(estimatedPath);
    check_timestamps(actual.timestamps, estimated.timestamps, "spm");
    const std::vector<Eigen::MatrixXd> segActual =
        evalspm::segment_movements(actual.anglesNorm, actual.timestamps, prompts, args.nodes);
    const std::vector<Eigen::MatrixXd> segEstimated = evalspm::segment_movements(
        estimated.anglesNorm, estimated.timestamps, prompts, args.nodes);

    std::vector<evalspm::CjdResult> set;
    for (const auto& [poseId, occurrences] : byPose) {
      if (occurrences.size() < 3) {
        std::cerr << "spm: skipping pose " << poseId << " with only " << occurrences.size()
                  << " repetition(s)\n";
        continue;
      }
      std::vector<Eigen::VectorXd> fSignals;
      ordered_json jointsJson = ordered_json::array();
      for (int j = 0; j < static_cast<int>(kin::kNumJoints); ++j) {
        Eigen::MatrixXd d(args.nodes, static_cast<Eigen::Index>(occurrences.size()));
        for (std::size_t k = 0; k < occurrences.size(); ++k)
          d.col(static_cast<Eigen::Index>(k)) =
              segActual[occurrences[k]].col(j) - segEstimated[occurrences[k]].col(j);
        const evalspm::SpmResult spm = evalspm::spm_one_sample_t(d, args.alpha);
        fSignals.push_back(spm.fSeries);
        if (movementsJson)
          jointsJson.push_back(ordered_json{
              {"joint", kin::joint_names()[static_cast<std::size_t>(j)]},
              {"tCrit", spm.tCrit},
              {"fwhm", std::isinf(spm.fwhm) ? ordered_json(nullptr) : ordered_json(spm.fwhm)},
              {"dof", spm.dof},
              {"guardedNodes", spm.guardedNodes.size()}});
      }
      evalspm::CjdResult cjd = evalspm::cjd(fSignals);
      cjd.movementId = poseId;
      set.push_back(std::move(cjd));
      if (movementsJson)
        movementsJson->push_back(ordered_json{{"poseId", poseId},
                                              {"repetitions", occurrences.size()},
                                              {"joints", jointsJson}});
    }
    if (set.empty()) throw DataError("no prompted pose recurs at least three times");
    return set;
  };

  ordered_json movementsJson = ordered_json::array();
  const std::vector<evalspm::CjdResult> setA = cjd_set(args.estimatedPath, &movementsJson);

  Eigen::Index totalRows = 0;
  for (const auto& c : setA) totalRows += c.meanSeries.size();
  Eigen::MatrixXd cjdRows(totalRows, 5);
  Eigen::Index at = 0;
  for (const auto& c : setA)
    for (Eigen::Index i = 0; i < c.meanSeries.size(); ++i, ++at) {
      cjdRows(at, 0) = static_cast<double>(c.movementId);
      cjdRows(at, 1) = static_cast<double>(i);
      cjdRows(at, 2) = c.meanSeries[i];
      cjdRows(at, 3) = c.q1Series[i];
      cjdRows(at, 4) = c.q3Series[i];
    }
  dataio::write_csv(ctx.out_path("cjd.csv"), {"movement", "node", "mean", "q1", "q3"}, cjdRows);

  for (const auto& c : setA) {
    std::vector<double> nodes(static_cast<std::size_t>(c.meanSeries.size()));
    for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = static_cast<double>(i);
    svgplot::LinePlot plot;
    plot.title = "cross-joint difference, pose " + std::to_string(c.movementId);
    plot.xAxis.label = "normalized time (node)";
    plot.yAxis.label = "tCrit - t";
    plot.bands.push_back({nodes,
                          std::vector<double>(c.q1Series.data(), c.q1Series.data() + c.q1Series.size()),
                          std::vector<double>(c.q3Series.data(), c.q3Series.data() + c.q3Series.size()),
                          ""});
    plot.series.push_back(
        {nodes,
         std::vector<double>(c.meanSeries.data(), c.meanSeries.data() + c.meanSeries.size()),
         "mean over joints", ""});
    svgplot::save(ctx.out_path("cjd_pose" + std::to_string(c.movementId) + ".svg"),
                  svgplot::render(plot));
  }

  ordered_json report;
  report["alpha"] = args.alpha;
  report["nodes"] = args.nodes;
  report["movements"] = movementsJson;
  if (!args.estimatedBPath.empty()) {
    ctx.note_input(args.estimatedBPath);
    const std::vector<evalspm::CjdResult> setB = cjd_set(args.estimatedBPath, nullptr);
    report["cmcjd"] = evalspm::cmcjd(setA, setB);
  }
  write_json(ctx.out_path("spm.json"), report);
  ctx.write_manifest();
  std::cerr << "spm: " << setA.size() << " movement(s)\n";
}

}  // namespace emgpose::cli
