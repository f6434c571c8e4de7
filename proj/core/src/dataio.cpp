#include "emgpose/dataio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "emgpose/emgproc.hpp"
#include "emgpose/errors.hpp"
#include "emgpose/rng.hpp"
#include "emgpose/signal.hpp"

namespace emgpose::dataio {

using json = nlohmann::ordered_json;

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_real(const std::string& s, const std::string& context) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw DataError("malformed number '" + s + "' in " + context);
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

void sample_range(int bits, std::int32_t& lo, std::int32_t& hi) {
  lo = -(std::int32_t{1} << (bits - 1));
  hi = (std::int32_t{1} << (bits - 1)) - 1;
}

}  // namespace

double EmgRecording::countsToVolts() const {
  return vRange / std::pow(2.0, bits) / gain;
}

std::vector<std::pair<int, int>> EmgRecording::default_channel_map(int rows, int cols) {
  std::vector<std::pair<int, int>> map;
  map.reserve(static_cast<std::size_t>(rows) * cols);
  for (int ch = 0; ch < rows * cols; ++ch) map.emplace_back(ch / cols, ch % cols);
  return map;
}

void validate(const EmgRecording& rec) {
  if (rec.fs <= 0.0) throw DataError("sampling rate must be positive");
  if (rec.gain <= 0.0 || rec.vRange <= 0.0) throw DataError("gain and vRange must be positive");
  if (rec.bits < 2 || rec.bits > 16)
    throw DataError("bit depth must be between 2 and 16 for int16 storage");
  const Eigen::Index c = rec.channelCount();
  if (static_cast<Eigen::Index>(rec.gridRows) * rec.gridCols != c)
    throw DataError("grid dimensions do not match the channel count");
  if (static_cast<Eigen::Index>(rec.channelMap.size()) != c)
    throw DataError("channel map size does not match the channel count");
  std::set<std::pair<int, int>> seen;
  for (const auto& [r, col] : rec.channelMap) {
    if (r < 0 || r >= rec.gridRows || col < 0 || col >= rec.gridCols)
      throw DataError("channel map entry outside the grid");
    if (!seen.insert({r, col}).second) throw DataError("duplicate channel map entry");
  }
  std::int32_t lo, hi;
  sample_range(rec.bits, lo, hi);
  if ((rec.samples.array() < lo).any() || (rec.samples.array() > hi).any())
    throw DataError("sample overflows the declared bit depth");
}

kin::MarkerFrame MarkerTrajectory::frame(Eigen::Index i) const {
  if (i < 0 || i >= frameCount()) throw DataError("marker frame index out of range");
  kin::MarkerFrame f;
  f.labels = labels;
  f.positions.reserve(labels.size());
  for (Eigen::Index m = 0; m < markerCount(); ++m)
    f.positions.emplace_back(xyz(i, 3 * m), xyz(i, 3 * m + 1), xyz(i, 3 * m + 2));
  return f;
}

void save_emg(const std::string& path, const EmgRecording& rec) {
  validate(rec);  // overflow for the declared bit depth is a save error
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write EMG file: " + path);
  const Eigen::Index n = rec.sampleCount(), c = rec.channelCount();
  std::vector<unsigned char> row(static_cast<std::size_t>(c) * 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      const auto v = static_cast<std::uint16_t>(static_cast<std::int16_t>(rec.samples(i, j)));
      row[static_cast<std::size_t>(j) * 2] = static_cast<unsigned char>(v & 0xFF);
      row[static_cast<std::size_t>(j) * 2 + 1] = static_cast<unsigned char>(v >> 8);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw DataError("failed writing EMG file: " + path);

  json side;
  side["nSamples"] = n;
  side["nChannels"] = c;
  side["fs"] = rec.fs;
  side["gain"] = rec.gain;
  side["bits"] = rec.bits;
  side["vRange"] = rec.vRange;
  side["grid"] = {{"rows", rec.gridRows}, {"cols", rec.gridCols}};
  json cmap = json::array();
  for (const auto& [r, col] : rec.channelMap) cmap.push_back(json::array({r, col}));
  side["channelMap"] = cmap;
  side["syncStartSample"] = rec.syncStartSample;
  std::ofstream sideOut(path + ".json");
  if (!sideOut) throw DataError("cannot write EMG sidecar: " + path + ".json");
  sideOut << side.dump(2) << "\n";
}

EmgRecording load_emg(const std::string& path) {
  std::ifstream sideIn(path + ".json");
  if (!sideIn) throw DataError("missing EMG sidecar: " + path + ".json");
  json side;
  try {
    sideIn >> side;
  } catch (const json::exception& e) {
    throw DataError("malformed EMG sidecar: " + std::string(e.what()));
  }

  EmgRecording rec;
  Eigen::Index n, c;
  try {
    n = side.at("nSamples").get<Eigen::Index>();
    c = side.at("nChannels").get<Eigen::Index>();
    rec.fs = side.at("fs").get<double>();
    rec.gain = side.at("gain").get<double>();
    rec.bits = side.at("bits").get<int>();
    rec.vRange = side.at("vRange").get<double>();
    rec.gridRows = side.at("grid").at("rows").get<int>();
    rec.gridCols = side.at("grid").at("cols").get<int>();
    for (const auto& entry : side.at("channelMap"))
      rec.channelMap.emplace_back(entry.at(0).get<int>(), entry.at(1).get<int>());
    rec.syncStartSample = side.at("syncStartSample").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw DataError("malformed EMG sidecar: " + std::string(e.what()));
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing EMG file: " + path);
  in.seekg(0, std::ios::end);
  const auto fileSize = static_cast<std::int64_t>(in.tellg());
  if (fileSize != static_cast<std::int64_t>(n) * c * 2)
    throw DataError("EMG file size does not match the declared dimensions");
  in.seekg(0);

  rec.samples.resize(n, c);
  std::vector<unsigned char> row(static_cast<std::size_t>(c) * 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!in) throw DataError("truncated EMG file: " + path);
    for (Eigen::Index j = 0; j < c; ++j) {
      const auto u = static_cast<std::uint16_t>(row[static_cast<std::size_t>(j) * 2] |
                                                (row[static_cast<std::size_t>(j) * 2 + 1] << 8));
      rec.samples(i, j) = static_cast<std::int16_t>(u);
    }
  }
  validate(rec);
  return rec;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols())
    throw DataError("CSV header size does not match the column count");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV file: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].find(',') != std::string::npos)
      throw DataError("CSV header entries must not contain commas");
    out << (i ? "," : "") << header[i];
  }
  out << "\n";
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c)
      out << (c ? "," : "") << format_real(values(r, c));
    out << "\n";
  }
  if (!out) throw DataError("failed writing CSV file: " + path);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing CSV file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  CsvTable table;
  table.header = split_line(line);
  const std::size_t cols = table.header.size();

  std::vector<double> data;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != cols)
      throw DataError("CSV row " + std::to_string(rows + 2) + " has " +
                      std::to_string(cells.size()) + " cells, expected " + std::to_string(cols) +
                      ": " + path);
    for (const std::string& cell : cells) data.push_back(parse_real(cell, path));
    ++rows;
  }
  table.values.resize(rows, static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(cols); ++c)
      table.values(r, c) = data[static_cast<std::size_t>(r) * cols + static_cast<std::size_t>(c)];
  return table;
}

namespace {

Eigen::VectorXd uniform_times(Eigen::Index m, double fs, double startTime) {
  Eigen::VectorXd t(m);
  for (Eigen::Index i = 0; i < m; ++i) t(i) = startTime + static_cast<double>(i) / fs;
  return t;
}

// fs and start from a CSV time column; requires two rows and uniform spacing.
void infer_time_base(const Eigen::VectorXd& t, const std::string& path, double& fs,
                     double& startTime) {
  if (t.size() < 2) throw DataError("time series needs at least two rows: " + path);
  const double dt = t(1) - t(0);
  if (dt <= 0.0) throw DataError("time column must be increasing: " + path);
  for (Eigen::Index i = 1; i + 1 < t.size(); ++i) {
    const double d = t(i + 1) - t(i);
    if (std::abs(d - dt) > 1e-6 * std::max(1.0, std::abs(dt)))
      throw DataError("time column is not uniformly spaced: " + path);
  }
  fs = 1.0 / dt;
  startTime = t(0);
}

}  // namespace

void save_markers(const std::string& path, const MarkerTrajectory& markers) {
  if (markers.xyz.cols() != 3 * markers.markerCount())
    throw DataError("marker matrix width does not match the label count");
  std::vector<std::string> header;
  header.push_back("time");
  for (const std::string& l : markers.labels) {
    header.push_back(l + "_x");
    header.push_back(l + "_y");
    header.push_back(l + "_z");
  }
  Eigen::MatrixXd table(markers.frameCount(), markers.xyz.cols() + 1);
  table.col(0) = uniform_times(markers.frameCount(), markers.fs, markers.startTime);
  table.rightCols(markers.xyz.cols()) = markers.xyz;
  write_csv(path, header, table);
}

MarkerTrajectory load_markers(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header[0] != "time")
    throw DataError("marker CSV must start with a time column: " + path);
  if ((table.header.size() - 1) % 3 != 0)
    throw DataError("marker CSV needs _x/_y/_z column triples: " + path);

  MarkerTrajectory markers;
  for (std::size_t i = 1; i < table.header.size(); i += 3) {
    const std::string& hx = table.header[i];
    if (hx.size() < 3 || hx.substr(hx.size() - 2) != "_x")
      throw DataError("expected an _x column, found '" + hx + "': " + path);
    const std::string label = hx.substr(0, hx.size() - 2);
    if (table.header[i + 1] != label + "_y" || table.header[i + 2] != label + "_z")
      throw DataError("marker '" + label + "' is missing _y/_z columns: " + path);
    markers.labels.push_back(label);
  }
  infer_time_base(table.values.col(0), path, markers.fs, markers.startTime);
  markers.xyz = table.values.rightCols(table.values.cols() - 1);
  if (!markers.xyz.allFinite()) throw DataError("marker coordinates must be finite: " + path);
  return markers;
}

void save_angles(const std::string& path, const Eigen::MatrixXd& anglesRad, double fs,
                 double startTime) {
  if (anglesRad.cols() != static_cast<Eigen::Index>(kin::kNumJoints))
    throw DataError("angle series must have 29 columns");
  std::vector<std::string> header;
  header.push_back("time");
  for (const std::string& n : kin::joint_names()) header.push_back(n + "_deg");
  Eigen::MatrixXd table(anglesRad.rows(), anglesRad.cols() + 1);
  table.col(0) = uniform_times(anglesRad.rows(), fs, startTime);
  table.rightCols(anglesRad.cols()) = anglesRad * (180.0 / 3.14159265358979323846);
  write_csv(path, header, table);
}

AngleSeries load_angles(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.size() != kin::kNumJoints + 1 || table.header[0] != "time")
    throw DataError("angle CSV must have a time column plus 29 joint columns: " + path);
  for (std::size_t i = 0; i < kin::kNumJoints; ++i)
    if (table.header[i + 1] != kin::joint_names()[i] + "_deg")
      throw DataError("unexpected angle column '" + table.header[i + 1] + "': " + path);
  AngleSeries series;
  infer_time_base(table.values.col(0), path, series.fs, series.startTime);
  series.anglesRad =
      table.values.rightCols(table.values.cols() - 1) * (3.14159265358979323846 / 180.0);
  return series;
}

void save_prompts(const std::string& path, const std::vector<PromptEntry>& prompts) {
  json j = json::array();
  for (const PromptEntry& p : prompts)
    j.push_back({{"poseId", p.poseId}, {"startTime", p.startTime}, {"duration", p.duration}});
  std::ofstream out(path);
  if (!out) throw DataError("cannot write prompt schedule: " + path);
  out << j.dump(2) << "\n";
}

std::vector<PromptEntry> load_prompts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing prompt schedule: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed prompt schedule: " + std::string(e.what()));
  }
  std::vector<PromptEntry> prompts;
  try {
    for (const auto& entry : j)
      prompts.push_back({entry.at("poseId").get<int>(), entry.at("startTime").get<double>(),
                         entry.at("duration").get<double>()});
  } catch (const json::exception& e) {
    throw DataError("malformed prompt schedule: " + std::string(e.what()));
  }
  return prompts;
}

AlignedDataset align(const EmgRecording& emg, const MarkerTrajectory& markers,
                     const Eigen::MatrixXd& anglesNorm, int windowLen, int slide,
                     const std::optional<ChannelStatsRef>& stats,
                     const std::vector<PromptEntry>& prompts,
                     std::vector<std::string>* warnings) {
  if (markers.frameCount() < 2) throw DataError("need at least two marker frames to align");
  if (anglesNorm.rows() != markers.frameCount())
    throw DataError("angle series and marker trajectory must have the same frame count");
  if (slide != 25 && slide != 29 && slide != 33 && warnings)
    warnings->push_back("slide " + std::to_string(slide) +
                        " is outside the documented set {25, 29, 33}");

  std::optional<emgproc::ChannelStats> channelStats;
  if (stats) channelStats = emgproc::ChannelStats{stats->mean, stats->std, {}};
  const emgproc::EmgEnvelope env = emgproc::preprocess(emg, windowLen, slide, channelStats);

  const double markerStart = markers.frameTime(0);
  const double markerEnd = markers.frameTime(markers.frameCount() - 1);
  const Eigen::Index n = env.timestamps.size();
  if (n == 0) throw DataError("empty envelope after windowing");
  if (env.timestamps(0) < markerStart - 1e-12 || env.timestamps(n - 1) > markerEnd + 1e-12)
    throw DataError("marker time range does not cover the envelope window centers");

  AlignedDataset out;
  out.envelope = env.values;
  out.timestamps = env.timestamps;
  out.anglesNorm.resize(n, anglesNorm.cols());
  for (Eigen::Index k = 0; k < n; ++k) {
    // Uniform marker clock: locate the bracketing frames directly.
    const double u = (env.timestamps(k) - markerStart) * markers.fs;
    Eigen::Index i0 = static_cast<Eigen::Index>(std::floor(u));
    i0 = std::max<Eigen::Index>(0, std::min(i0, markers.frameCount() - 2));
    const double frac = u - static_cast<double>(i0);
    out.anglesNorm.row(k) =
        anglesNorm.row(i0) * (1.0 - frac) + anglesNorm.row(i0 + 1) * frac;
  }
  out.promptSchedule = prompts;
  return out;
}

namespace {

struct Sinusoid {
  double amp, freq, phase;
};

double eval_sum(const std::vector<Sinusoid>& terms, double t) {
  double v = 0.0;
  for (const Sinusoid& s : terms) v += s.amp * std::sin(kTwoPi * s.freq * t + s.phase);
  return v;
}

double eval_sum_deriv(const std::vector<Sinusoid>& terms, double t) {
  double v = 0.0;
  for (const Sinusoid& s : terms)
    v += s.amp * kTwoPi * s.freq * std::cos(kTwoPi * s.freq * t + s.phase);
  return v;
}

}  // namespace

SynthResult generate_synthetic(const SynthConfig& cfg, const kin::HandSkeleton& skeleton) {
  if (cfg.durationS <= 0.0) throw DataError("duration must be positive");
  if (cfg.nChannels <= 0 || cfg.gridRows * cfg.gridCols != cfg.nChannels)
    throw DataError("grid dimensions do not match the channel count");
  if (cfg.emgFs <= 0.0 || cfg.markerFs <= 0.0) throw DataError("sampling rates must be positive");
  if (cfg.nSinusoids < 1 || cfg.nSinusoids > 5)
    throw DataError("nSinusoids must be between 1 and 5");
  if (cfg.nLatents < 0) throw DataError("nLatents must be non-negative");
  if (!(cfg.freqLoHz > 0.0) || cfg.freqHiHz < cfg.freqLoHz)
    throw DataError("frequency band must satisfy 0 < lo <= hi");
  if (cfg.excursionFrac <= 0.0 || cfg.excursionFrac > 1.0)
    throw DataError("excursionFrac must be in (0, 1]");
  if (cfg.promptDurationS <= 0.0 || cfg.nPromptPoses <= 0)
    throw DataError("prompt schedule needs a positive duration and pose count");
  if (cfg.noiseStd < 0.0 || cfg.noiseFloorV < 0.0)
    throw DataError("noise levels must be non-negative");
  if (cfg.mixing.size() != 0 &&
      (cfg.mixing.rows() != cfg.nChannels ||
       cfg.mixing.cols() != static_cast<Eigen::Index>(kin::kNumJoints)))
    throw DataError("mixing matrix must be nChannels x 29");

  constexpr std::size_t nJ = kin::kNumJoints;
  std::array<bool, nJ> active{};
  if (cfg.activeJoints.empty()) {
    active.fill(true);
  } else {
    for (int j : cfg.activeJoints) {
      if (j < 0 || j >= static_cast<int>(nJ)) throw DataError("active joint index out of range");
      active[static_cast<std::size_t>(j)] = true;
    }
  }

  // The draw order below (latents, joint weights, private terms, mixing,
  // then per-channel noise) is fixed: changing it changes every output of a
  // given seed.
  Rng rng(cfg.seed);
  const std::size_t nSin = static_cast<std::size_t>(cfg.nSinusoids);
  std::vector<std::vector<Sinusoid>> latents(static_cast<std::size_t>(cfg.nLatents));
  for (auto& latent : latents) {
    latent.resize(nSin);
    for (Sinusoid& s : latent)
      s = {rng.uniform(0.3, 1.0), rng.uniform(cfg.freqLoHz, cfg.freqHiHz),
           rng.uniform(0.0, kTwoPi)};
  }
  std::array<std::vector<double>, nJ> weights;
  for (auto& w : weights) {
    w.resize(latents.size());
    for (double& x : w) x = rng.uniform(-1.0, 1.0);
  }
  std::array<std::vector<Sinusoid>, nJ> privateTerms;
  for (auto& terms : privateTerms) {
    terms.resize(nSin);
    for (Sinusoid& s : terms)
      s = {rng.uniform(0.1, 0.4), rng.uniform(cfg.freqLoHz, cfg.freqHiHz),
           rng.uniform(0.0, kTwoPi)};
  }
  Eigen::MatrixXd mixing = cfg.mixing;
  if (mixing.size() == 0) {
    mixing.resize(cfg.nChannels, static_cast<Eigen::Index>(nJ));
    for (Eigen::Index c = 0; c < mixing.rows(); ++c)
      for (Eigen::Index j = 0; j < mixing.cols(); ++j) mixing(c, j) = rng.uniform();
  }

  auto raw_at = [&](std::size_t j, double t) {
    double v = 0.0;
    for (std::size_t l = 0; l < latents.size(); ++l) v += weights[j][l] * eval_sum(latents[l], t);
    return v + eval_sum(privateTerms[j], t);
  };
  auto raw_deriv_at = [&](std::size_t j, double t) {
    double v = 0.0;
    for (std::size_t l = 0; l < latents.size(); ++l)
      v += weights[j][l] * eval_sum_deriv(latents[l], t);
    return v + eval_sum_deriv(privateTerms[j], t);
  };

  const auto m = static_cast<Eigen::Index>(std::llround(cfg.durationS * cfg.markerFs));
  const auto n = static_cast<Eigen::Index>(std::llround(cfg.durationS * cfg.emgFs));
  if (m < 2 || n < 2) throw DataError("duration too short for the sampling rates");

  // Per-joint scale so the raw sum maps one-sidedly into
  // [rest, rest + excursionFrac * (romMax - rest)].
  std::array<double, nJ> scale{}, excursion{};
  for (std::size_t j = 0; j < nJ; ++j) {
    excursion[j] = cfg.excursionFrac * (skeleton.romMax[j] - skeleton.restPose[j]);
    if (!active[j]) continue;
    double maxAbs = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
      maxAbs = std::max(maxAbs, std::abs(raw_at(j, static_cast<double>(i) / cfg.markerFs)));
    scale[j] = maxAbs > 1e-12 ? 1.0 / maxAbs : 0.0;
  }

  SynthResult res;
  res.anglesRad.resize(m, static_cast<Eigen::Index>(nJ));
  Eigen::MatrixXd features(m, static_cast<Eigen::Index>(nJ));  // |dtheta| + (theta - rest)
  for (Eigen::Index i = 0; i < m; ++i) {
    const double t = static_cast<double>(i) / cfg.markerFs;
    for (std::size_t j = 0; j < nJ; ++j) {
      if (!active[j] || scale[j] == 0.0) {
        res.anglesRad(i, static_cast<Eigen::Index>(j)) = skeleton.restPose[j];
        features(i, static_cast<Eigen::Index>(j)) = 0.0;
        continue;
      }
      const double s = (raw_at(j, t) * scale[j] + 1.0) / 2.0;
      const double ds = raw_deriv_at(j, t) * scale[j] / 2.0;
      const double theta = skeleton.restPose[j] + s * excursion[j];
      res.anglesRad(i, static_cast<Eigen::Index>(j)) = theta;
      features(i, static_cast<Eigen::Index>(j)) =
          std::abs(ds * excursion[j]) + (theta - skeleton.restPose[j]);
    }
  }

  res.markers.labels = kin::marker_labels();
  res.markers.fs = cfg.markerFs;
  res.markers.xyz.resize(m, 3 * static_cast<Eigen::Index>(res.markers.labels.size()));
  for (Eigen::Index i = 0; i < m; ++i) {
    kin::JointAngles a;
    for (std::size_t j = 0; j < nJ; ++j) a[j] = res.anglesRad(i, static_cast<Eigen::Index>(j));
    const kin::MarkerFrame f = kin::fka(a, skeleton, kin::RomPolicy::Clamp);
    for (std::size_t p = 0; p < f.positions.size(); ++p) {
      res.markers.xyz(i, static_cast<Eigen::Index>(3 * p)) = f.positions[p].x();
      res.markers.xyz(i, static_cast<Eigen::Index>(3 * p + 1)) = f.positions[p].y();
      res.markers.xyz(i, static_cast<Eigen::Index>(3 * p + 2)) = f.positions[p].z();
    }
  }

  // Channel drives at the marker rate; interpolated to the EMG rate below.
  const Eigen::MatrixXd drive = features * mixing.transpose();  // m x C
  const double drivePeak = drive.maxCoeff();
  const double voltScale = drivePeak > 0.0 ? 1.0e-3 / drivePeak : 0.0;

  res.emg.fs = cfg.emgFs;
  res.emg.gridRows = cfg.gridRows;
  res.emg.gridCols = cfg.gridCols;
  res.emg.channelMap = EmgRecording::default_channel_map(cfg.gridRows, cfg.gridCols);
  res.emg.samples.resize(n, cfg.nChannels);
  const double toVolts = res.emg.countsToVolts();
  std::int32_t clampLo, clampHi;
  sample_range(res.emg.bits, clampLo, clampHi);

  const std::vector<signal::Biquad> lowpassHi =
      signal::butterworth_lowpass_design(6, 500.0, cfg.emgFs);
  const std::vector<signal::Biquad> lowpassLo =
      signal::butterworth_lowpass_design(6, 10.0, cfg.emgFs);

  std::vector<double> noise(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < cfg.nChannels; ++c) {
    for (double& v : noise) v = rng.normal();
    signal::SosFilter hi(lowpassHi), lo(lowpassLo);
    hi.reset(0.0);
    lo.reset(0.0);
    // Band-limit 10-500 Hz as the difference of two lowpasses, then scale to
    // unit variance so the envelope tracks the drive alone.
    double power = 0.0;
    std::vector<double> carrier(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < carrier.size(); ++k) {
      carrier[k] = hi.process(noise[k]) - lo.process(noise[k]);
      power += carrier[k] * carrier[k];
    }
    const double rms = std::sqrt(power / static_cast<double>(n));
    const double carrierScale = rms > 0.0 ? 1.0 / rms : 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / cfg.emgFs;
      const double u = t * cfg.markerFs;
      Eigen::Index i0 = static_cast<Eigen::Index>(std::floor(u));
      i0 = std::max<Eigen::Index>(0, std::min(i0, m - 2));
      const double frac = u - static_cast<double>(i0);
      const double driveT = drive(i0, c) * (1.0 - frac) + drive(i0 + 1, c) * frac;
      const double activation = std::max(0.0, driveT);
      // The carrier amplitude follows the activation on top of a constant
      // noise floor, so a zero mixing matrix still yields band-limited noise.
      const double amplitude =
          cfg.noiseStd * voltScale * activation + cfg.noiseFloorV;
      const double volts = amplitude * carrier[static_cast<std::size_t>(k)] * carrierScale +
                           cfg.lineHum50HzAmpl * std::sin(kTwoPi * 50.0 * t);
      const auto counts = static_cast<std::int32_t>(std::llround(volts / toVolts));
      res.emg.samples(k, c) = std::min(clampHi, std::max(clampLo, counts));
    }
  }

  for (int k = 0;; ++k) {
    const double start = k * cfg.promptDurationS;
    if (start >= cfg.durationS) break;
    res.prompts.push_back({k % cfg.nPromptPoses, start,
                           std::min(cfg.promptDurationS, cfg.durationS - start)});
  }
  return res;
}

}  // namespace emgpose::dataio
