#include "emgpose/evalspm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "emgpose/errors.hpp"
#include "emgpose/signal.hpp"

namespace emgpose::evalspm {

namespace {

using json = nlohmann::ordered_json;

constexpr double kTGuard = 1e-12;  // stand-in std for zero-variance nodes

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

PerformanceReport mpcc(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted) {
  if (actual.rows() != predicted.rows() || actual.cols() != predicted.cols())
    throw DataError("actual and predicted series must have the same shape");
  if (actual.rows() < 2) throw DataError("correlation needs at least two rows");
  if (actual.cols() < 1) throw DataError("correlation needs at least one joint");

  PerformanceReport report;
  report.perJointPcc = Eigen::VectorXd::Constant(actual.cols(),
                                                 std::numeric_limits<double>::quiet_NaN());
  std::vector<double> kept;
  for (Eigen::Index j = 0; j < actual.cols(); ++j) {
    const Eigen::VectorXd a = actual.col(j), p = predicted.col(j);
    const double va = (a.array() - a.mean()).square().sum();
    const double vp = (p.array() - p.mean()).square().sum();
    if (va <= 0.0 || vp <= 0.0) {
      report.excludedJoints.push_back(static_cast<int>(j));
      continue;
    }
    const double r = stats::pearson(to_vec(a), to_vec(p));
    report.perJointPcc[j] = r;
    kept.push_back(r);
  }
  if (kept.empty()) throw DataError("every joint has zero variance");
  double sum = 0.0;
  for (double r : kept) sum += r;
  report.mpcc = sum / static_cast<double>(kept.size());
  report.pccQuartiles = stats::quartiles(kept);
  return report;
}

WfdResult wfd(const std::vector<kin::MarkerFrame>& actual,
              const std::vector<kin::MarkerFrame>& predicted) {
  if (actual.size() != predicted.size())
    throw DataError("marker streams must have the same frame count");
  if (actual.empty()) throw DataError("marker streams are empty");

  static const std::array<const char*, 3> tips = {"index_tip", "middle_tip", "thumb_tip"};
  WfdResult result;
  result.seriesMm.resize(static_cast<Eigen::Index>(actual.size()));
  for (std::size_t i = 0; i < actual.size(); ++i) {
    double sum = 0.0;
    for (const char* tip : tips) sum += (actual[i].at(tip) - predicted[i].at(tip)).norm();
    result.seriesMm[static_cast<Eigen::Index>(i)] = sum / 3.0;
  }
  result.mdMm = result.seriesMm.mean();
  result.quartilesMm = stats::quartiles(to_vec(result.seriesMm));
  return result;
}

PerformanceReport evaluate(const Eigen::MatrixXd& actualAngles,
                           const Eigen::MatrixXd& predictedAngles,
                           const std::vector<kin::MarkerFrame>& actualMarkers,
                           const std::vector<kin::MarkerFrame>& predictedMarkers) {
  PerformanceReport report = mpcc(actualAngles, predictedAngles);
  const WfdResult w = wfd(actualMarkers, predictedMarkers);
  report.mdMm = w.mdMm;
  report.wfdQuartilesMm = w.quartilesMm;
  return report;
}

namespace {

// Field smoothness from the normalized residual gradients, the standard 1-D
// random-field practice: per node, the squared gradient of the residual
// curves over their squared magnitude gives resels per node. Returns +inf
// for an identically zero residual field (no roughness to estimate).
double estimate_fwhm(const Eigen::MatrixXd& residuals) {
  const Eigen::Index n = residuals.rows(), k = residuals.cols();
  Eigen::MatrixXd grad(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    grad(0, j) = residuals(1, j) - residuals(0, j);
    for (Eigen::Index i = 1; i + 1 < n; ++i)
      grad(i, j) = (residuals(i + 1, j) - residuals(i - 1, j)) / 2.0;
    grad(n - 1, j) = residuals(n - 1, j) - residuals(n - 2, j);
  }

  double rpnSum = 0.0;
  Eigen::Index rpnCount = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ssq = residuals.row(i).squaredNorm();
    if (ssq <= 0.0) continue;
    const double v = grad.row(i).squaredNorm() / ssq;
    rpnSum += std::sqrt(v / (4.0 * std::log(2.0)));
    ++rpnCount;
  }
  if (rpnCount == 0 || rpnSum <= 0.0) return std::numeric_limits<double>::infinity();
  const double rpnMean = rpnSum / static_cast<double>(rpnCount);
  return 1.0 / rpnMean;
}

// Expected suprathreshold cluster count of a smooth 1-D t-field: the 0-D
// tail probability plus the 1-D Euler characteristic density times the
// field's resel count.
double rft_alpha(double u, double nu, double resels) {
  const double p0 = stats::student_t_sf(u, nu);
  const double density = std::sqrt(4.0 * std::log(2.0)) / (2.0 * M_PI) *
                         std::pow(1.0 + u * u / nu, -(nu - 1.0) / 2.0);
  return p0 + resels * density;
}

}  // namespace

SpmResult spm_one_sample_t(const Eigen::MatrixXd& d, double alpha) {
  const Eigen::Index n = d.rows(), k = d.cols();
  if (k < 2) throw DataError("spm needs at least two curves");
  if (n < 3) throw DataError("spm needs at least three field nodes");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!d.allFinite()) throw DataError("spm input contains non-finite values");

  SpmResult result;
  result.dof = static_cast<int>(k - 1);
  result.tSeries.resize(n);
  Eigen::MatrixXd residuals(n, k);
  const double sqrtK = std::sqrt(static_cast<double>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mean = d.row(i).mean();
    residuals.row(i) = d.row(i).array() - mean;
    double sd = std::sqrt(residuals.row(i).squaredNorm() / static_cast<double>(k - 1));
    if (sd == 0.0) {
      sd = kTGuard;
      result.guardedNodes.push_back(static_cast<int>(i));
    }
    result.tSeries[i] = mean / (sd / sqrtK);
  }

  result.fwhm = estimate_fwhm(residuals);
  const double resels = std::isfinite(result.fwhm)
                            ? static_cast<double>(n - 1) / result.fwhm
                            : 0.0;

  const double nu = static_cast<double>(result.dof);
  double lo = 0.0, hi = 1.0;
  while (rft_alpha(hi, nu, resels) > alpha && hi < 1e6) hi *= 2.0;
  if (hi >= 1e6) throw NumericError("rft threshold search failed to bracket");
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (rft_alpha(mid, nu, resels) > alpha)
      lo = mid;
    else
      hi = mid;
  }
  result.tCrit = 0.5 * (lo + hi);
  result.fSeries = result.tCrit - result.tSeries.array();
  return result;
}

std::vector<Eigen::MatrixXd> segment_movements(const Eigen::MatrixXd& series,
                                               const Eigen::VectorXd& timestamps,
                                               const std::vector<dataio::PromptEntry>& prompts,
                                               int nodes) {
  if (series.rows() != timestamps.size())
    throw DataError("series rows and timestamps differ");
  if (prompts.empty()) throw DataError("prompt schedule is empty");
  if (nodes < 2) throw ConfigError("node count must be at least 2");
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (prompts[i].duration <= 0.0) throw DataError("prompt duration must be positive");
    if (i > 0) {
      const auto& prev = prompts[i - 1];
      if (prompts[i].startTime < prev.startTime + prev.duration - 1e-9)
        throw DataError("prompt schedule overlaps or is unsorted");
    }
  }

  std::vector<Eigen::MatrixXd> movements;
  movements.reserve(prompts.size());
  for (const auto& prompt : prompts) {
    const double t0 = prompt.startTime, t1 = prompt.startTime + prompt.duration;
    Eigen::Index lo = -1, hi = -1;
    for (Eigen::Index i = 0; i < timestamps.size(); ++i) {
      if (timestamps[i] < t0 - 1e-12 || timestamps[i] > t1 + 1e-12) continue;
      if (lo < 0) lo = i;
      hi = i;
    }
    if (lo < 0 || hi - lo < 1)
      throw DataError("a prompt window holds fewer than two samples");

    const Eigen::Index rows = hi - lo + 1;
    std::vector<double> t(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i) t[static_cast<std::size_t>(i)] = timestamps[lo + i];

    Eigen::MatrixXd block(nodes, series.cols());
    std::vector<double> column(static_cast<std::size_t>(rows));
    for (Eigen::Index c = 0; c < series.cols(); ++c) {
      for (Eigen::Index i = 0; i < rows; ++i)
        column[static_cast<std::size_t>(i)] = series(lo + i, c);
      for (int q = 0; q < nodes; ++q) {
        const double tq = t.front() + (t.back() - t.front()) * static_cast<double>(q) /
                                          static_cast<double>(nodes - 1);
        block(q, c) = signal::interp1(t, column, tq);
      }
    }
    movements.push_back(std::move(block));
  }
  return movements;
}

CjdResult cjd(const std::vector<Eigen::VectorXd>& fSignals) {
  if (fSignals.size() < 2) throw DataError("cjd needs at least two joint signals");
  const Eigen::Index n = fSignals.front().size();
  for (const auto& s : fSignals)
    if (s.size() != n) throw DataError("cjd signals have mismatched lengths");
  if (n < 1) throw DataError("cjd signals are empty");

  CjdResult result;
  result.meanSeries.resize(n);
  result.iqrSeries.resize(n);
  result.q1Series.resize(n);
  result.q3Series.resize(n);
  std::vector<double> column(fSignals.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < fSignals.size(); ++j) {
      column[j] = fSignals[j][i];
      sum += column[j];
    }
    result.meanSeries[i] = sum / static_cast<double>(fSignals.size());
    const stats::Quartiles q = stats::quartiles(column);
    result.iqrSeries[i] = q.iqr();
    result.q1Series[i] = q.q1;
    result.q3Series[i] = q.q3;
  }
  return result;
}

double cmcjd(const std::vector<CjdResult>& a, const std::vector<CjdResult>& b) {
  if (a.size() != b.size() || a.empty())
    throw DataError("cmcjd needs two matched, nonempty movement sets");
  double sum = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (a[m].meanSeries.size() != b[m].meanSeries.size())
      throw DataError("cmcjd movement node counts differ");
    const Eigen::VectorXd diff = a[m].meanSeries - b[m].meanSeries;
    sum += std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
  }
  return sum / static_cast<double>(a.size());
}

std::string to_json_string(const PerformanceReport& report) {
  json doc;
  doc["mpcc"] = report.mpcc;
  doc["pccQuartiles"] = {{"q1", report.pccQuartiles.q1},
                         {"median", report.pccQuartiles.median},
                         {"q3", report.pccQuartiles.q3}};
  doc["mdMm"] = report.mdMm;
  doc["wfdQuartilesMm"] = {{"q1", report.wfdQuartilesMm.q1},
                           {"median", report.wfdQuartilesMm.median},
                           {"q3", report.wfdQuartilesMm.q3}};
  json pcc = json::array();
  for (Eigen::Index j = 0; j < report.perJointPcc.size(); ++j) {
    if (std::isfinite(report.perJointPcc[j]))
      pcc.push_back(report.perJointPcc[j]);
    else
      pcc.push_back(nullptr);
  }
  doc["perJointPcc"] = std::move(pcc);
  doc["excludedJoints"] = report.excludedJoints;
  return doc.dump(2);
}

std::string to_json_string(const SpmResult& result) {
  json doc;
  doc["tCrit"] = result.tCrit;
  doc["dof"] = result.dof;
  doc["fwhm"] = std::isfinite(result.fwhm) ? json(result.fwhm) : json(nullptr);
  doc["tSeries"] = to_vec(result.tSeries);
  doc["fSeries"] = to_vec(result.fSeries);
  doc["guardedNodes"] = result.guardedNodes;
  return doc.dump(2);
}

}  // namespace emgpose::evalspm
