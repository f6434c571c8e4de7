#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iostream>
#include <optional>

#include <json.hpp>

#include "cli_support.hpp"
#include "emgpose/dataio.hpp"
#include "emgpose/emgproc.hpp"
#include "emgpose/errors.hpp"
#include "emgpose/impedance.hpp"
#include "emgpose/kinematics.hpp"
#include "emgpose/signal.hpp"
#include "emgpose/svgplot.hpp"

namespace emgpose::cli {

namespace {

using nlohmann::ordered_json;

constexpr double kPi = 3.14159265358979323846;

dataio::EmgRecording select_channels(const dataio::EmgRecording& rec, const GridSelection& sel) {
  dataio::EmgRecording out = rec;
  out.samples.resize(rec.sampleCount(), static_cast<Eigen::Index>(sel.channels.size()));
  for (std::size_t i = 0; i < sel.channels.size(); ++i) {
    const int src = sel.channels[i];
    if (src < 0 || src >= rec.channelCount())
      throw ConfigError("grid selection does not match the dataset channel count");
    out.samples.col(static_cast<Eigen::Index>(i)) = rec.samples.col(src);
  }
  out.gridRows = sel.rows;
  out.gridCols = sel.cols;
  out.channelMap = dataio::EmgRecording::default_channel_map(sel.rows, sel.cols);
  return out;
}

emgproc::ChannelStats load_stats_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open statistics file: " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("statistics file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.contains("mean") || !j.contains("std"))
    throw DataError("statistics file needs \"mean\" and \"std\" arrays");
  const auto mean = j["mean"].get<std::vector<double>>();
  const auto sd = j["std"].get<std::vector<double>>();
  if (mean.size() != sd.size() || mean.empty())
    throw DataError("statistics mean and std must be non-empty and equal length");
  emgproc::ChannelStats stats;
  stats.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  stats.std = Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
  stats.dead.assign(mean.size(), false);
  if (j.contains("dead")) stats.dead = j["dead"].get<std::vector<bool>>();
  if (stats.dead.size() != mean.size())
    throw DataError("statistics dead-channel flags must match the channel count");
  return stats;
}

void save_stats_json(const std::string& path, const emgproc::EmgEnvelope& env) {
  ordered_json j;
  j["mean"] = std::vector<double>(env.perChannelMean.data(),
                                  env.perChannelMean.data() + env.perChannelMean.size());
  j["std"] = std::vector<double>(env.perChannelStd.data(),
                                 env.perChannelStd.data() + env.perChannelStd.size());
  j["dead"] = env.deadChannels;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write statistics file: " + path);
  out << j.dump(2) << "\n";
}

ordered_json quartile_json(const stats::Quartiles& q, std::size_t n) {
  return ordered_json{{"q1", q.q1}, {"median", q.median}, {"q3", q.q3}, {"iqr", q.iqr()}, {"n", n}};
}

}  // namespace

void run_synth(SynthArgs args) {
  const ordered_json fileConfig = load_config(
      args.configPath,
      {"outDir", "seed", "durationS", "nChannels", "gridRows", "gridCols", "emgFs", "markerFs",
       "noiseStd", "noiseFloorV", "lineHum50HzAmpl", "nSinusoids", "nLatents", "freqLoHz",
       "freqHiHz", "excursionFrac", "activeJoints", "promptDurationS", "nPromptPoses"});
  const ConfigMerger merge(fileConfig, args.flagKeys);
  merge("outDir", args.outDir);
  merge("seed", args.seed);
  merge("durationS", args.durationS);
  merge("nChannels", args.nChannels);
  merge("gridRows", args.gridRows);
  merge("gridCols", args.gridCols);
  merge("emgFs", args.emgFs);
  merge("markerFs", args.markerFs);
  merge("noiseStd", args.noiseStd);
  merge("noiseFloorV", args.noiseFloorV);
  merge("lineHum50HzAmpl", args.lineHum50HzAmpl);
  merge("nSinusoids", args.nSinusoids);
  merge("nLatents", args.nLatents);
  merge("freqLoHz", args.freqLoHz);
  merge("freqHiHz", args.freqHiHz);
  merge("excursionFrac", args.excursionFrac);
  merge("activeJoints", args.activeJoints);
  merge("promptDurationS", args.promptDurationS);
  merge("nPromptPoses", args.nPromptPoses);

  dataio::SynthConfig cfg;
  cfg.seed = args.seed;
  cfg.durationS = args.durationS;
  cfg.nChannels = args.nChannels;
  cfg.gridRows = args.gridRows;
  cfg.gridCols = args.gridCols;
  cfg.emgFs = args.emgFs;
  cfg.markerFs = args.markerFs;
  cfg.noiseStd = args.noiseStd;
  cfg.noiseFloorV = args.noiseFloorV;
  cfg.lineHum50HzAmpl = args.lineHum50HzAmpl;
  cfg.nSinusoids = args.nSinusoids;
  cfg.nLatents = args.nLatents;
  cfg.freqLoHz = args.freqLoHz;
  cfg.freqHiHz = args.freqHiHz;
  cfg.excursionFrac = args.excursionFrac;
  cfg.activeJoints = args.activeJoints;
  cfg.promptDurationS = args.promptDurationS;
  cfg.nPromptPoses = args.nPromptPoses;

  RunContext ctx("synth", args.outDir);
  ctx.set_config(ordered_json{{"seed", args.seed},
                              {"durationS", args.durationS},
                              {"nChannels", args.nChannels},
                              {"gridRows", args.gridRows},
                              {"gridCols", args.gridCols},
                              {"emgFs", args.emgFs},
                              {"markerFs", args.markerFs},
                              {"noiseStd", args.noiseStd},
                              {"noiseFloorV", args.noiseFloorV},
                              {"lineHum50HzAmpl", args.lineHum50HzAmpl},
                              {"nSinusoids", args.nSinusoids},
                              {"nLatents", args.nLatents},
                              {"freqLoHz", args.freqLoHz},
                              {"freqHiHz", args.freqHiHz},
                              {"excursionFrac", args.excursionFrac},
                              {"activeJoints", args.activeJoints},
                              {"promptDurationS", args.promptDurationS},
                              {"nPromptPoses", args.nPromptPoses}});

  const dataio::SynthResult result = dataio::generate_synthetic(cfg);
  dataio::save_emg(ctx.out_path("emg.bin"), result.emg);
  ctx.note_output("emg.bin.json");
  dataio::save_markers(ctx.out_path("markers.csv"), result.markers);
  dataio::save_angles(ctx.out_path("angles.csv"), result.anglesRad, cfg.markerFs);
  dataio::save_prompts(ctx.out_path("prompts.json"), result.prompts);
  ctx.write_manifest();
  std::cerr << "synth: " << result.emg.sampleCount() << " samples x "
            << result.emg.channelCount() << " channels\n";
}

void run_preprocess(PreprocessArgs args) {
  const ordered_json fileConfig =
      load_config(args.configPath, {"outDir", "emg", "markers", "angles", "prompts", "statsIn",
                                    "gridSelection", "windowLen", "slide", "standardize"});
  const ConfigMerger merge(fileConfig, args.flagKeys);
  merge("outDir", args.outDir);
  merge("emg", args.emgPath);
  merge("markers", args.markersPath);
  merge("angles", args.anglesPath);
  merge("prompts", args.promptsPath);
  merge("statsIn", args.statsInPath);
  merge("gridSelection", args.gridSelection);
  merge("windowLen", args.windowLen);
  merge("slide", args.slide);
  merge("standardize", args.standardize);

  if (args.emgPath.empty()) throw ConfigError("preprocess needs an EMG recording (--emg)");
  if (args.markersPath.empty() != args.anglesPath.empty())
    throw ConfigError("markers and angles must be provided together");

  RunContext ctx("preprocess", args.outDir);
  ctx.set_config(ordered_json{{"emg", args.emgPath},
                              {"markers", args.markersPath},
                              {"angles", args.anglesPath},
                              {"prompts", args.promptsPath},
                              {"statsIn", args.statsInPath},
                              {"gridSelection", args.gridSelection},
                              {"windowLen", args.windowLen},
                              {"slide", args.slide},
                              {"standardize", args.standardize}});
  ctx.note_input(args.emgPath);

  const dataio::EmgRecording raw = dataio::load_emg(args.emgPath);
  const GridSelection sel = grid_selection(args.gridSelection, raw.gridRows, raw.gridCols);
  const dataio::EmgRecording recording = select_channels(raw, sel);

  std::optional<emgproc::ChannelStats> trainingStats;
  if (!args.statsInPath.empty()) {
    ctx.note_input(args.statsInPath);
    trainingStats = load_stats_json(args.statsInPath);
    if (trainingStats->mean.size() != recording.channelCount())
      throw DataError("training statistics do not match the selected channel count");
  }

  const emgproc::EmgEnvelope env = emgproc::preprocess(recording, args.windowLen, args.slide,
                                                       trainingStats, args.standardize);
  emgproc::save_envelope(ctx.out_path("envelope.csv"), env);
  ctx.note_output("envelope.csv.json");
  save_stats_json(ctx.out_path("stats.json"), env);

  if (!args.markersPath.empty()) {
    ctx.note_input(args.markersPath);
    ctx.note_input(args.anglesPath);
    const dataio::MarkerTrajectory markers = dataio::load_markers(args.markersPath);
    const dataio::AngleSeries angles = dataio::load_angles(args.anglesPath);
    const kin::HandSkeleton skeleton = kin::default_skeleton();
    Eigen::MatrixXd anglesNorm(angles.anglesRad.rows(), kin::kNumJoints);
    for (Eigen::Index r = 0; r < angles.anglesRad.rows(); ++r) {
      kin::JointAngles pose;
      for (std::size_t j = 0; j < kin::kNumJoints; ++j)
        pose[j] = angles.anglesRad(r, static_cast<Eigen::Index>(j));
      anglesNorm.row(r) = kin::normalize_angles(pose, skeleton.restPose).transpose();
    }

    std::vector<dataio::PromptEntry> prompts;
    if (!args.promptsPath.empty()) {
      ctx.note_input(args.promptsPath);
      prompts = dataio::load_prompts(args.promptsPath);
    }
    std::vector<std::string> warnings;
    const dataio::ChannelStatsRef statsRef{env.perChannelMean, env.perChannelStd};
    const dataio::AlignedDataset aligned = dataio::align(
        recording, markers, anglesNorm, args.windowLen, args.slide, statsRef, prompts, &warnings);
    for (const auto& w : warnings) std::cerr << "preprocess: warning: " << w << "\n";
    save_norm_angles(ctx.out_path("angles_norm.csv"), aligned.timestamps, aligned.anglesNorm);
    if (!prompts.empty())
      dataio::save_prompts(ctx.out_path("prompts.json"), aligned.promptSchedule);
  }

  ctx.write_manifest();
  std::cerr << "preprocess: " << env.values.rows() << " windows x " << env.values.cols()
            << " channels\n";
}

void run_variance(VarianceArgs args) {
  const ordered_json fileConfig =
      load_config(args.configPath, {"outDir", "emg", "gridSelection", "windowLen", "slide"});
  const ConfigMerger merge(fileConfig, args.flagKeys);
  merge("outDir", args.outDir);
  merge("emg", args.emgPaths);
  merge("gridSelection", args.gridSelection);
  merge("windowLen", args.windowLen);
  merge("slide", args.slide);
  if (args.emgPaths.empty()) throw ConfigError("variance needs at least one EMG recording");

  RunContext ctx("variance", args.outDir);
  ctx.set_config(ordered_json{{"emg", args.emgPaths},
                              {"gridSelection", args.gridSelection},
                              {"windowLen", args.windowLen},
                              {"slide", args.slide}});

  std::vector<double> pdAll, circAll;
  std::vector<std::vector<double>> pdRows, circRows;
  ordered_json excludedJson = ordered_json::array();
  for (const auto& path : args.emgPaths) {
    ctx.note_input(path);
    const dataio::EmgRecording raw = dataio::load_emg(path);
    const GridSelection sel = grid_selection(args.gridSelection, raw.gridRows, raw.gridCols);
    const dataio::EmgRecording recording = select_channels(raw, sel);
    // The variance analysis consumes the scaled envelope without
    // standardization; standardizing would erase the spatial structure.
    const emgproc::EmgEnvelope env =
        emgproc::preprocess(recording, args.windowLen, args.slide, {}, false);
    std::vector<int> excluded;
    const emgproc::NdvResult result = emgproc::ndv(env.values, sel.rows, sel.cols, &excluded);
    excludedJson.push_back(excluded);
    pdRows.emplace_back(result.proximoDistal.data(),
                        result.proximoDistal.data() + result.proximoDistal.size());
    circRows.emplace_back(result.circumferential.data(),
                          result.circumferential.data() + result.circumferential.size());
    pdAll.insert(pdAll.end(), pdRows.back().begin(), pdRows.back().end());
    circAll.insert(circAll.end(), circRows.back().begin(), circRows.back().end());
  }

  const auto writeDirection = [&](const std::string& name,
                                  const std::vector<std::vector<double>>& rows) {
    Eigen::Index total = 0;
    for (const auto& r : rows) total += static_cast<Eigen::Index>(r.size());
    Eigen::MatrixXd values(total, 3);
    Eigen::Index at = 0;
    for (std::size_t rec = 0; rec < rows.size(); ++rec)
      for (std::size_t i = 0; i < rows[rec].size(); ++i, ++at) {
        values(at, 0) = static_cast<double>(rec);
        values(at, 1) = static_cast<double>(i);
        values(at, 2) = rows[rec][i];
      }
    dataio::write_csv(ctx.out_path(name), {"recording", "index", "value"}, values);
  };
  writeDirection("ndv_proximodistal.csv", pdRows);
  writeDirection("ndv_circumferential.csv", circRows);

  const emgproc::NdvComparison cmp = emgproc::ndv_compare(pdAll, circAll);
  ordered_json report;
  report["test"] = ordered_json::parse(stats::to_json_string(cmp.test));
  report["proximoDistal"] = quartile_json(cmp.proximoDistal, pdAll.size());
  report["circumferential"] = quartile_json(cmp.circumferential, circAll.size());
  report["excludedChannels"] = excludedJson;
  {
    std::ofstream out(ctx.out_path("ndv.json"), std::ios::binary);
    if (!out) throw DataError("cannot write ndv.json");
    out << report.dump(2) << "\n";
  }

  svgplot::BoxPlot box;
  box.title = "normalized dimensional variance";
  box.yAxis.label = "NDV";
  box.boxes.push_back({*std::min_element(pdAll.begin(), pdAll.end()), cmp.proximoDistal.q1,
                       cmp.proximoDistal.median, cmp.proximoDistal.q3,
                       *std::max_element(pdAll.begin(), pdAll.end()), "proximo-distal"});
  box.boxes.push_back({*std::min_element(circAll.begin(), circAll.end()), cmp.circumferential.q1,
                       cmp.circumferential.median, cmp.circumferential.q3,
                       *std::max_element(circAll.begin(), circAll.end()), "circumferential"});
  svgplot::save(ctx.out_path("ndv_box.svg"), svgplot::render(box));

  ctx.write_manifest();
  std::cerr << "variance: U = " << cmp.test.statistic << ", p = " << cmp.test.pValue << "\n";
}

void run_impedance(ImpedanceArgs args) {
  const ordered_json fileConfig = load_config(
      args.configPath, {"outDir", "measurements", "rinOhm", "areaCm2", "reportFreqHz",
                        "halvePairs", "emgA", "emgB", "compareChannel"});
  const ConfigMerger merge(fileConfig, args.flagKeys);
  merge("outDir", args.outDir);
  merge("measurements", args.measurementsPath);
  merge("rinOhm", args.rinOhm);
  merge("areaCm2", args.areaCm2);
  merge("reportFreqHz", args.reportFreqHz);
  merge("halvePairs", args.halvePairs);
  merge("emgA", args.emgAPath);
  merge("emgB", args.emgBPath);
  merge("compareChannel", args.compareChannel);

  if (args.measurementsPath.empty())
    throw ConfigError("impedance needs a measurement CSV (--measurements)");
  if (args.emgAPath.empty() != args.emgBPath.empty())
    throw ConfigError("emgA and emgB must be provided together");

  RunContext ctx("impedance", args.outDir);
  ctx.set_config(ordered_json{{"measurements", args.measurementsPath},
                              {"rinOhm", args.rinOhm},
                              {"areaCm2", args.areaCm2},
                              {"reportFreqHz", args.reportFreqHz},
                              {"halvePairs", args.halvePairs},
                              {"emgA", args.emgAPath},
                              {"emgB", args.emgBPath},
                              {"compareChannel", args.compareChannel}});
  ctx.note_input(args.measurementsPath);

  std::vector<impedance::ImpedanceSpectrum> spectra =
      impedance::load_measurements(args.measurementsPath);
  if (args.halvePairs)
    for (auto& s : spectra)
      for (auto& z : s.z) z = impedance::per_interface_from_pair(z);

  ordered_json fitsJson = ordered_json::array();
  Eigen::MatrixXd fitRows(static_cast<Eigen::Index>(spectra.size()), 4);
  for (std::size_t p = 0; p < spectra.size(); ++p) {
    const impedance::RcFit fit = impedance::fit_rc(spectra[p]);
    fitRows(static_cast<Eigen::Index>(p), 0) = static_cast<double>(p);
    fitRows(static_cast<Eigen::Index>(p), 1) = fit.model.rOhm;
    fitRows(static_cast<Eigen::Index>(p), 2) = fit.model.cFarad;
    fitRows(static_cast<Eigen::Index>(p), 3) = fit.residual;
    fitsJson.push_back(ordered_json{{"pair", p},
                                    {"rOhm", fit.model.rOhm},
                                    {"cFarad", fit.model.cFarad},
                                    {"residual", fit.residual}});
  }
  dataio::write_csv(ctx.out_path("fits.csv"), {"pair", "rOhm", "cFarad", "residual"}, fitRows);

  const impedance::BodeAggregate bode = impedance::aggregate_bode(spectra);
  const Eigen::Index nf = static_cast<Eigen::Index>(bode.freqsHz.size());
  Eigen::MatrixXd bodeRows(nf, 9);
  for (Eigen::Index i = 0; i < nf; ++i) {
    bodeRows(i, 0) = bode.freqsHz[static_cast<std::size_t>(i)];
    bodeRows(i, 1) = bode.magnitudeMedianOhm[i];
    bodeRows(i, 2) = bode.magnitudeIqrOhm[i];
    bodeRows(i, 3) = bode.magnitudeQ1Ohm[i];
    bodeRows(i, 4) = bode.magnitudeQ3Ohm[i];
    bodeRows(i, 5) = bode.phaseMedianDeg[i];
    bodeRows(i, 6) = bode.phaseIqrDeg[i];
    bodeRows(i, 7) = bode.phaseQ1Deg[i];
    bodeRows(i, 8) = bode.phaseQ3Deg[i];
  }
  dataio::write_csv(ctx.out_path("bode.csv"),
                    {"freqHz", "magnitudeMedianOhm", "magnitudeIqrOhm", "magnitudeQ1Ohm",
                     "magnitudeQ3Ohm", "phaseMedianDeg", "phaseIqrDeg", "phaseQ1Deg",
                     "phaseQ3Deg"},
                    bodeRows);

  Eigen::MatrixXd attRows(nf, 3);
  for (Eigen::Index i = 0; i < nf; ++i) {
    const std::complex<double> z =
        std::polar(bode.magnitudeMedianOhm[i], bode.phaseMedianDeg[i] * kPi / 180.0);
    const impedance::DividerGain gain = impedance::divider_attenuation(z, {args.rinOhm, 0.0});
    attRows(i, 0) = bode.freqsHz[static_cast<std::size_t>(i)];
    attRows(i, 1) = std::abs(gain.gain);
    attRows(i, 2) = gain.db;
  }
  dataio::write_csv(ctx.out_path("attenuation.csv"), {"freqHz", "gainMagnitude", "gainDb"},
                    attRows);

  Eigen::Index reportIdx = 0;
  for (Eigen::Index i = 1; i < nf; ++i) {
    if (std::abs(bode.freqsHz[static_cast<std::size_t>(i)] - args.reportFreqHz) <
        std::abs(bode.freqsHz[static_cast<std::size_t>(reportIdx)] - args.reportFreqHz))
      reportIdx = i;
  }
  const double reportFreq = bode.freqsHz[static_cast<std::size_t>(reportIdx)];
  const double medianMag = bode.magnitudeMedianOhm[reportIdx];

  ordered_json report;
  report["reportFreqHz"] = reportFreq;
  report["medianMagnitudeOhm"] = medianMag;
  report["areaCm2"] = args.areaCm2;
  report["areaNormalizedOhmCm2"] = impedance::normalize_by_area(medianMag, args.areaCm2);
  report["rinOhm"] = args.rinOhm;
  report["dividerGainMagnitude"] = attRows(reportIdx, 1);
  report["dividerGainDb"] = attRows(reportIdx, 2);
  report["fits"] = fitsJson;

  // Bode plots: median line over the quartile band.
  const std::vector<double> freqs = bode.freqsHz;
  const auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  svgplot::LinePlot magPlot;
  magPlot.title = "impedance magnitude";
  magPlot.xAxis = {"frequency (Hz)", true};
  magPlot.yAxis = {"|Z| (Ohm)", true};
  magPlot.bands.push_back({freqs, vec(bode.magnitudeQ1Ohm), vec(bode.magnitudeQ3Ohm), ""});
  magPlot.series.push_back({freqs, vec(bode.magnitudeMedianOhm), "median", ""});
  svgplot::save(ctx.out_path("bode_magnitude.svg"), svgplot::render(magPlot));

  svgplot::LinePlot phasePlot;
  phasePlot.title = "impedance phase";
  phasePlot.xAxis = {"frequency (Hz)", true};
  phasePlot.yAxis = {"phase (deg)", false};
  phasePlot.bands.push_back({freqs, vec(bode.phaseQ1Deg), vec(bode.phaseQ3Deg), ""});
  phasePlot.series.push_back({freqs, vec(bode.phaseMedianDeg), "median", ""});
  svgplot::save(ctx.out_path("bode_phase.svg"), svgplot::render(phasePlot));

  if (!args.emgAPath.empty()) {
    ctx.note_input(args.emgAPath);
    ctx.note_input(args.emgBPath);
    const dataio::EmgRecording recA = dataio::load_emg(args.emgAPath);
    const dataio::EmgRecording recB = dataio::load_emg(args.emgBPath);
    if (recA.fs != recB.fs) throw DataError("comparison recordings must share a sampling rate");
    if (args.compareChannel < 0 || args.compareChannel >= recA.channelCount() ||
        args.compareChannel >= recB.channelCount())
      throw ConfigError("comparison channel out of range");
    const auto volts = [&](const dataio::EmgRecording& rec) {
      std::vector<double> v(static_cast<std::size_t>(rec.sampleCount()));
      const double scale = rec.countsToVolts();
      for (Eigen::Index i = 0; i < rec.sampleCount(); ++i)
        v[static_cast<std::size_t>(i)] =
            static_cast<double>(rec.samples(i, args.compareChannel)) * scale;
      return v;
    };
    const std::vector<double> a = volts(recA), b = volts(recB);
    const impedance::EmgComparison cmp = impedance::compare_emg(a, b, recA.fs);
    report["emgComparison"] =
        ordered_json{{"channel", args.compareChannel},
                     {"rmseRmsMv", cmp.rmseRmsMv},
                     {"rmseSpectrogramDb", cmp.rmseSpecDb}};

    const std::vector<double> traceA = signal::sliding_rms(a, 200, 25);
    const std::vector<double> traceB = signal::sliding_rms(b, 200, 25);
    const std::vector<double> centers =
        signal::sliding_window_centers(a.size(), 200, 25, recA.fs);
    const auto mv = [](std::vector<double> t) {
      for (double& v : t) v *= 1e3;
      return t;
    };
    svgplot::LinePlot tracePlot;
    tracePlot.title = "rms traces";
    tracePlot.xAxis = {"time (s)", false};
    tracePlot.yAxis = {"RMS (mV)", false};
    tracePlot.series.push_back({centers, mv(traceA), "recording A", ""});
    tracePlot.series.push_back({centers, mv(traceB), "recording B", ""});
    svgplot::save(ctx.out_path("rms_traces.svg"), svgplot::render(tracePlot));
  }

  {
    std::ofstream out(ctx.out_path("report.json"), std::ios::binary);
    if (!out) throw DataError("cannot write report.json");
    out << report.dump(2) << "\n";
  }
  ctx.write_manifest();
  std::cerr << "impedance: median |Z| at " << reportFreq << " Hz = " << medianMag << " Ohm\n";
}

}  // namespace emgpose::cli
