#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "emgpose/dataio.hpp"
#include "emgpose/kinematics.hpp"
#include "emgpose/stats.hpp"

namespace emgpose::evalspm {

/// Correlation and distance summary of an estimated pose series against the
/// ground truth. Joints whose actual or predicted series has zero variance
/// carry a NaN per-joint PCC and are listed in excludedJoints; they do not
/// enter the mean or the quartiles.
struct PerformanceReport {
  double mpcc = 0.0;
  stats::Quartiles pccQuartiles;
  double mdMm = 0.0;
  stats::Quartiles wfdQuartilesMm;
  Eigen::VectorXd perJointPcc;
  std::vector<int> excludedJoints;
};

/// Fills the correlation part of the report from two equally shaped series
/// (rows = time, cols = joints).
PerformanceReport mpcc(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted);

struct WfdResult {
  Eigen::VectorXd seriesMm;  // per-frame mean distance of the three tips
  double mdMm = 0.0;         // temporal mean of the series
  stats::Quartiles quartilesMm;
};

/// Weighted fingertip distance over the index, middle, and thumb tips.
WfdResult wfd(const std::vector<kin::MarkerFrame>& actual,
              const std::vector<kin::MarkerFrame>& predicted);

/// Convenience: correlation metrics plus WFD in one report.
PerformanceReport evaluate(const Eigen::MatrixXd& actualAngles,
                           const Eigen::MatrixXd& predictedAngles,
                           const std::vector<kin::MarkerFrame>& actualMarkers,
                           const std::vector<kin::MarkerFrame>& predictedMarkers);

/// One-sample statistical parametric map over a 1-D field. Input rows are
/// field nodes, columns are the k observed difference curves.
struct SpmResult {
  Eigen::VectorXd tSeries;
  double tCrit = 0.0;
  Eigen::VectorXd fSeries;  // tCrit - tSeries
  int dof = 0;
  double fwhm = 0.0;               // field smoothness in nodes
  std::vector<int> guardedNodes;   // zero-variance nodes whose t used an epsilon guard
};

/// t(i) = mean_k / (std_k / sqrt(k)) per node; the critical threshold solves
/// alpha = P(t > u) + (L / FWHM) * sqrt(4 ln 2) / (2 pi) * (1 + u^2 / nu)^(-(nu-1)/2)
/// for the field length L = n - 1, the random-field-theory expected number
/// of suprathreshold clusters of a smooth t-field.
SpmResult spm_one_sample_t(const Eigen::MatrixXd& d, double alpha = 0.05);

/// Slices rows of `series` into one block per prompt (rows whose timestamp
/// falls inside [start, start + duration]) and linearly resamples each block
/// onto `nodes` uniform time points. Prompts must be sorted and
/// non-overlapping; every block needs at least two rows.
std::vector<Eigen::MatrixXd> segment_movements(const Eigen::MatrixXd& series,
                                               const Eigen::VectorXd& timestamps,
                                               const std::vector<dataio::PromptEntry>& prompts,
                                               int nodes = 256);

/// Node-wise mean and interquartile range across joints of the per-joint
/// f-series (tCrit - t), the cross-joint summary of one movement. The
/// quartiles themselves are kept so spread bands can be drawn.
struct CjdResult {
  Eigen::VectorXd meanSeries;
  Eigen::VectorXd iqrSeries;
  Eigen::VectorXd q1Series;
  Eigen::VectorXd q3Series;
  int movementId = 0;
};

CjdResult cjd(const std::vector<Eigen::VectorXd>& fSignals);

/// Per-movement root-mean-square difference between the mean CJD curves,
/// averaged over movements. Both sets must hold the same number of movements
/// with matching node counts.
double cmcjd(const std::vector<CjdResult>& a, const std::vector<CjdResult>& b);

/// JSON renderings for reports (stable key order).
std::string to_json_string(const PerformanceReport& report);
std::string to_json_string(const SpmResult& result);

}  // namespace emgpose::evalspm
