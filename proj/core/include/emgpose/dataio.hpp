#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "emgpose/kinematics.hpp"

namespace emgpose::dataio {

/// Raw multi-channel EMG in ADC counts plus the acquisition constants needed
/// to recover volts: volts = counts * vRange / 2^bits / gain. Samples are
/// held as 32-bit integers so out-of-range values can be detected rather than
/// silently wrapped; the on-disk format is little-endian int16.
struct EmgRecording {
  Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic> samples;  // n x C
  double fs = 2048.0;
  double gain = 192.0;
  int bits = 16;
  double vRange = 2.4;
  int gridRows = 2;
  int gridCols = 32;
  std::vector<std::pair<int, int>> channelMap;  // channel -> (row, col)
  std::int64_t syncStartSample = 0;

  Eigen::Index sampleCount() const { return samples.rows(); }
  Eigen::Index channelCount() const { return samples.cols(); }
  double countsToVolts() const;

  /// Row-major map: channel ch -> (ch / nCols, ch % nCols).
  static std::vector<std::pair<int, int>> default_channel_map(int rows, int cols);
};

/// Checks the recording invariants (grid product, unique channel map, sample
/// range for the declared bit depth). Throws DataError on violation.
void validate(const EmgRecording& rec);

struct MarkerTrajectory {
  Eigen::MatrixXd xyz;  // m x 3M, columns grouped per marker (x, y, z), mm
  std::vector<std::string> labels;
  double fs = 100.0;
  double startTime = 0.0;  // s, on the shared sync timeline

  Eigen::Index frameCount() const { return xyz.rows(); }
  Eigen::Index markerCount() const { return static_cast<Eigen::Index>(labels.size()); }
  double frameTime(Eigen::Index i) const { return startTime + static_cast<double>(i) / fs; }
  kin::MarkerFrame frame(Eigen::Index i) const;
};

struct PromptEntry {
  int poseId = 0;
  double startTime = 0.0;  // s
  double duration = 0.0;   // s
};

struct AlignedDataset {
  Eigen::MatrixXd envelope;    // n x C, standardized
  Eigen::MatrixXd anglesNorm;  // n x 29
  Eigen::VectorXd timestamps;  // s, strictly increasing
  std::vector<PromptEntry> promptSchedule;
};

// --- on-disk formats -------------------------------------------------------
// EMG: <path> holds row-major little-endian int16 counts, <path>.json is a
// sidecar with the acquisition constants. Markers/angles: CSV with a header
// row and a leading time column; reals printed with %.17g so a round trip is
// lossless. Angle CSVs are in degrees, the in-memory unit is radians.

void save_emg(const std::string& path, const EmgRecording& rec);
EmgRecording load_emg(const std::string& path);

void save_markers(const std::string& path, const MarkerTrajectory& markers);
MarkerTrajectory load_markers(const std::string& path);

void save_angles(const std::string& path, const Eigen::MatrixXd& anglesRad, double fs,
                 double startTime = 0.0);
struct AngleSeries {
  Eigen::MatrixXd anglesRad;  // m x 29
  double fs = 100.0;
  double startTime = 0.0;
};
AngleSeries load_angles(const std::string& path);

void save_prompts(const std::string& path, const std::vector<PromptEntry>& prompts);
std::vector<PromptEntry> load_prompts(const std::string& path);

/// Generic numeric CSV helpers shared by the writers above: `header` names
/// the columns of `values`. Values are printed with %.17g.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};
CsvTable read_csv(const std::string& path);

// --- alignment -------------------------------------------------------------

/// Standalone copy of per-channel training statistics so dataio's header does
/// not depend on emgproc's.
struct ChannelStatsRef {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
};

/// Interpolates normalized angle rows (at the marker rate) onto the
/// envelope-window center times of `emg` for the given windowLen/slide, and
/// standardizes the envelope (self statistics unless training statistics are
/// supplied). The marker time range must cover every window center. A slide
/// outside the documented {25, 29, 33} set appends a warning instead of
/// failing.
AlignedDataset align(const EmgRecording& emg, const MarkerTrajectory& markers,
                     const Eigen::MatrixXd& anglesNorm, int windowLen, int slide,
                     const std::optional<ChannelStatsRef>& stats = {},
                     const std::vector<PromptEntry>& prompts = {},
                     std::vector<std::string>* warnings = nullptr);

// --- synthetic data --------------------------------------------------------

/// Configuration for the seeded synthetic generator. Joint trajectories are
/// sums of at most `nSinusoids` sinusoids in [freqLoHz, freqHiHz] built from
/// `nLatents` shared components plus a private one, mapped one-sidedly into
/// [rest, rest + excursionFrac * (romMax - rest)] so that the activation
/// |dtheta/dt| + (theta - rest) is a non-folded readout of the pose.
struct SynthConfig {
  std::uint64_t seed = 0;
  double durationS = 10.0;
  int nChannels = 64;
  int gridRows = 2;
  int gridCols = 32;
  double emgFs = 2048.0;
  double markerFs = 100.0;
  Eigen::MatrixXd mixing;  // C x 29; empty -> seeded random in [0, 1)
  double noiseStd = 1.0;         // gain on the activation-modulated component
  double noiseFloorV = 2e-5;     // unmodulated carrier floor, volts
  double lineHum50HzAmpl = 0.0;  // volts
  int nSinusoids = 5;
  int nLatents = 3;
  double freqLoHz = 0.1;
  double freqHiHz = 1.0;
  double excursionFrac = 0.8;
  std::vector<int> activeJoints;  // empty -> all 29
  double promptDurationS = 8.0;
  int nPromptPoses = 16;
};

struct SynthResult {
  EmgRecording emg;
  MarkerTrajectory markers;
  Eigen::MatrixXd anglesRad;  // m x 29 at markerFs
  std::vector<PromptEntry> prompts;
};

/// Pure function of (cfg, skeleton): identical inputs give bit-identical
/// output, including the serialized forms.
SynthResult generate_synthetic(const SynthConfig& cfg,
                               const kin::HandSkeleton& skeleton = kin::default_skeleton());

}  // namespace emgpose::dataio
