#include "emgpose/emgproc.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "emgpose/errors.hpp"
#include "emgpose/signal.hpp"

namespace emgpose::emgproc {

using json = nlohmann::ordered_json;

ChannelStats compute_channel_stats(const Eigen::MatrixXd& values) {
  const Eigen::Index n = values.rows(), c = values.cols();
  if (n < 2) throw DataError("need at least two rows to compute channel statistics");
  ChannelStats st;
  st.mean = values.colwise().mean();
  st.std.resize(c);
  st.dead.assign(static_cast<std::size_t>(c), false);
  for (Eigen::Index j = 0; j < c; ++j) {
    const double var =
        (values.col(j).array() - st.mean(j)).square().sum() / static_cast<double>(n - 1);
    const double sd = std::sqrt(var);
    if (sd == 0.0) {
      st.dead[static_cast<std::size_t>(j)] = true;
      st.std(j) = 1.0;
    } else {
      st.std(j) = sd;
    }
  }
  return st;
}

Eigen::MatrixXd apply_standardization(const Eigen::MatrixXd& values, const ChannelStats& stats) {
  if (stats.mean.size() != values.cols() || stats.std.size() != values.cols())
    throw DataError("statistics dimension does not match the channel count");
  return (values.rowwise() - stats.mean.transpose()).array().rowwise() /
         stats.std.transpose().array();
}

EmgEnvelope preprocess(const dataio::EmgRecording& raw, int windowLen, int slide,
                       const std::optional<ChannelStats>& trainingStats, bool standardize) {
  if (windowLen <= 0 || slide <= 0) throw DataError("windowLen and slide must be positive");
  const Eigen::Index n = raw.sampleCount(), c = raw.channelCount();
  if (static_cast<Eigen::Index>(windowLen) > n)
    throw DataError("window longer than the recording");

  const double toVolts = raw.countsToVolts();
  const std::size_t nWin = signal::sliding_window_count(
      static_cast<std::size_t>(n), static_cast<std::size_t>(windowLen),
      static_cast<std::size_t>(slide));

  EmgEnvelope env;
  env.windowLen = windowLen;
  env.slide = slide;
  env.fs = raw.fs;
  env.scaled = true;
  env.values.resize(static_cast<Eigen::Index>(nWin), c);

  std::vector<double> channel(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < c; ++j) {
    double mean = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      channel[static_cast<std::size_t>(i)] = raw.samples(i, j) * toVolts;
      mean += channel[static_cast<std::size_t>(i)];
    }
    mean /= static_cast<double>(n);
    for (double& v : channel) v = std::abs(v - mean);
    const std::vector<double> rms = signal::sliding_rms(
        channel, static_cast<std::size_t>(windowLen), static_cast<std::size_t>(slide));
    for (std::size_t k = 0; k < nWin; ++k)
      env.values(static_cast<Eigen::Index>(k), j) = rms[k] / 1e-4;
  }

  const std::vector<double> centers = signal::sliding_window_centers(
      static_cast<std::size_t>(n), static_cast<std::size_t>(windowLen),
      static_cast<std::size_t>(slide), raw.fs);
  env.timestamps.resize(static_cast<Eigen::Index>(nWin));
  const double syncOffset = static_cast<double>(raw.syncStartSample) / raw.fs;
  for (std::size_t k = 0; k < nWin; ++k)
    env.timestamps(static_cast<Eigen::Index>(k)) = centers[k] + syncOffset;

  if (standardize) {
    ChannelStats st = trainingStats ? *trainingStats : compute_channel_stats(env.values);
    if (st.dead.empty()) st.dead.assign(static_cast<std::size_t>(c), false);
    env.values = apply_standardization(env.values, st);
    env.perChannelMean = st.mean;
    env.perChannelStd = st.std;
    env.deadChannels = st.dead;
    env.standardized = true;
  } else {
    env.perChannelMean = Eigen::VectorXd::Zero(c);
    env.perChannelStd = Eigen::VectorXd::Ones(c);
    env.deadChannels.assign(static_cast<std::size_t>(c), false);
    env.standardized = false;
  }
  return env;
}

NdvResult ndv(const Eigen::MatrixXd& envelopeRms, int nCirc, int nProx,
              std::vector<int>* excludedChannels) {
  const Eigen::Index n = envelopeRms.rows(), c = envelopeRms.cols();
  if (nCirc <= 0 || nProx <= 0 || static_cast<Eigen::Index>(nCirc) * nProx != c)
    throw DataError("grid dimensions do not match the channel count");
  if (n < 1) throw DataError("empty envelope");

  std::vector<bool> valid(static_cast<std::size_t>(c), true);
  Eigen::MatrixXd norm(n, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    const double mean = envelopeRms.col(j).mean();
    if (mean == 0.0) {
      valid[static_cast<std::size_t>(j)] = false;
      if (excludedChannels) excludedChannels->push_back(static_cast<int>(j));
      norm.col(j).setZero();
    } else {
      norm.col(j) = envelopeRms.col(j) / mean;
    }
  }

  // Unbiased variance across one grid axis at each time step, skipping
  // excluded channels; a slice with fewer than two valid channels contributes
  // nothing to the temporal mean.
  auto axis_variance = [&](bool alongProx) {
    const int nOut = alongProx ? nCirc : nProx;
    const int nIn = alongProx ? nProx : nCirc;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(nOut);
    std::vector<double> buf(static_cast<std::size_t>(nIn));
    for (int slot = 0; slot < nOut; ++slot) {
      double acc = 0.0;
      Eigen::Index used = 0;
      for (Eigen::Index t = 0; t < n; ++t) {
        int k = 0;
        for (int i = 0; i < nIn; ++i) {
          const int ch = alongProx ? slot * nProx + i : i * nProx + slot;
          if (valid[static_cast<std::size_t>(ch)]) buf[static_cast<std::size_t>(k++)] = norm(t, ch);
        }
        if (k < 2) continue;
        double mean = 0.0;
        for (int i = 0; i < k; ++i) mean += buf[static_cast<std::size_t>(i)];
        mean /= k;
        double ss = 0.0;
        for (int i = 0; i < k; ++i) {
          const double d = buf[static_cast<std::size_t>(i)] - mean;
          ss += d * d;
        }
        acc += ss / (k - 1);
        ++used;
      }
      out(slot) = used > 0 ? acc / static_cast<double>(used) : 0.0;
    }
    return out;
  };

  NdvResult res;
  res.proximoDistal = axis_variance(true);
  res.circumferential = axis_variance(false);
  return res;
}

NdvComparison ndv_compare(const std::vector<double>& pd, const std::vector<double>& circ) {
  NdvComparison cmp;
  cmp.test = stats::mann_whitney_u(pd, circ, stats::Alternative::Less);
  cmp.proximoDistal = stats::quartiles(pd);
  cmp.circumferential = stats::quartiles(circ);
  return cmp;
}

void save_envelope(const std::string& path, const EmgEnvelope& env) {
  std::vector<std::string> header;
  header.push_back("time");
  for (Eigen::Index j = 0; j < env.values.cols(); ++j)
    header.push_back("ch" + std::to_string(j));
  Eigen::MatrixXd table(env.values.rows(), env.values.cols() + 1);
  table.col(0) = env.timestamps;
  table.rightCols(env.values.cols()) = env.values;
  dataio::write_csv(path, header, table);

  json side;
  side["windowLen"] = env.windowLen;
  side["slide"] = env.slide;
  side["fs"] = env.fs;
  side["scaled"] = env.scaled;
  side["standardized"] = env.standardized;
  side["perChannelMean"] = std::vector<double>(
      env.perChannelMean.data(), env.perChannelMean.data() + env.perChannelMean.size());
  side["perChannelStd"] = std::vector<double>(
      env.perChannelStd.data(), env.perChannelStd.data() + env.perChannelStd.size());
  side["deadChannels"] = env.deadChannels;
  std::ofstream out(path + ".json");
  if (!out) throw DataError("cannot write envelope sidecar: " + path + ".json");
  out << side.dump(2) << "\n";
}

EmgEnvelope load_envelope(const std::string& path) {
  const dataio::CsvTable table = dataio::read_csv(path);
  if (table.header.empty() || table.header[0] != "time")
    throw DataError("envelope CSV must start with a time column: " + path);

  std::ifstream in(path + ".json");
  if (!in) throw DataError("missing envelope sidecar: " + path + ".json");
  json side;
  try {
    in >> side;
  } catch (const json::exception& e) {
    throw DataError("malformed envelope sidecar: " + std::string(e.what()));
  }

  EmgEnvelope env;
  env.timestamps = table.values.col(0);
  env.values = table.values.rightCols(table.values.cols() - 1);
  try {
    env.windowLen = side.at("windowLen").get<int>();
    env.slide = side.at("slide").get<int>();
    env.fs = side.at("fs").get<double>();
    env.scaled = side.at("scaled").get<bool>();
    env.standardized = side.at("standardized").get<bool>();
    const auto mean = side.at("perChannelMean").get<std::vector<double>>();
    const auto sd = side.at("perChannelStd").get<std::vector<double>>();
    env.perChannelMean = Eigen::Map<const Eigen::VectorXd>(mean.data(),
                                                           static_cast<Eigen::Index>(mean.size()));
    env.perChannelStd =
        Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
    env.deadChannels = side.at("deadChannels").get<std::vector<bool>>();
  } catch (const json::exception& e) {
    throw DataError("malformed envelope sidecar: " + std::string(e.what()));
  }
  if (env.perChannelMean.size() != env.values.cols())
    throw DataError("envelope sidecar statistics do not match the channel count");
  return env;
}

}  // namespace emgpose::emgproc
