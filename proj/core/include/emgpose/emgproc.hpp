#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "emgpose/dataio.hpp"
#include "emgpose/stats.hpp"

namespace emgpose::emgproc {

/// Per-channel standardization statistics. A channel whose envelope standard
/// deviation is zero is flagged dead and its std replaced by 1 so the channel
/// standardizes to zeros instead of NaNs.
struct ChannelStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  std::vector<bool> dead;
};

/// Column mean and unbiased (n-1) standard deviation, with the dead-channel
/// substitution above.
ChannelStats compute_channel_stats(const Eigen::MatrixXd& values);

/// (values - mean) / std, column-wise.
Eigen::MatrixXd apply_standardization(const Eigen::MatrixXd& values, const ChannelStats& stats);

struct EmgEnvelope {
  Eigen::MatrixXd values;  // nWindows x C, standardized unless requested raw
  int windowLen = 200;
  int slide = 25;
  double fs = 2048.0;          // rate of the raw recording
  bool scaled = true;          // divided by 1e-4
  bool standardized = true;
  Eigen::VectorXd perChannelMean;  // statistics used for standardization
  Eigen::VectorXd perChannelStd;
  std::vector<bool> deadChannels;
  Eigen::VectorXd timestamps;  // window centers, s

  double windowDurationS() const { return windowLen / fs; }
};

/// Envelope pipeline: counts -> volts (vRange / 2^bits / gain), per-channel
/// mean removal, rectification, sliding RMS over windowLen every `slide`
/// samples, division by 1e-4, then standardization with the supplied training
/// statistics (self statistics when absent). `standardize = false` stops
/// after the 1e-4 scaling, which is the form the variance analysis consumes.
EmgEnvelope preprocess(const dataio::EmgRecording& raw, int windowLen, int slide,
                       const std::optional<ChannelStats>& trainingStats = {},
                       bool standardize = true);

/// Normalized dimensional variance over an electrode grid of nCirc
/// circumferential x nProx proximo-distal positions, channel ch =
/// circIdx * nProx + proxIdx. Channels are normalized by their temporal mean;
/// zero-mean channels are excluded (reported via `excludedChannels`).
/// proximoDistal[c] is the temporal mean of the unbiased variance across the
/// nProx positions at circumferential position c; circumferential[p] swaps
/// the axes.
struct NdvResult {
  Eigen::VectorXd proximoDistal;    // length nCirc
  Eigen::VectorXd circumferential;  // length nProx
};

NdvResult ndv(const Eigen::MatrixXd& envelopeRms, int nCirc, int nProx,
              std::vector<int>* excludedChannels = nullptr);

/// One-tailed Mann-Whitney U test of proximo-distal < circumferential plus
/// the per-group medians and interquartile ranges.
struct NdvComparison {
  stats::TestReport test;
  stats::Quartiles proximoDistal;
  stats::Quartiles circumferential;
};

NdvComparison ndv_compare(const std::vector<double>& pd, const std::vector<double>& circ);

/// Envelope files: CSV with a time column plus one column per channel, and a
/// <path>.json sidecar recording windowLen, slide, fs, flags, statistics, and
/// dead channels.
void save_envelope(const std::string& path, const EmgEnvelope& env);
EmgEnvelope load_envelope(const std::string& path);

}  // namespace emgpose::emgproc
