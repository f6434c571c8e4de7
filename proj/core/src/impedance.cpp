#include "emgpose/impedance.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

#include "emgpose/dataio.hpp"
#include "emgpose/errors.hpp"
#include "emgpose/signal.hpp"
#include "emgpose/stats.hpp"

namespace emgpose::impedance {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_model(const RcModel& model) {
  if (!(model.rOhm > 0.0)) throw ConfigError("resistance must be positive");
  if (!(model.cFarad >= 0.0)) throw ConfigError("capacitance must be non-negative");
}

void check_spectrum(const ImpedanceSpectrum& s) {
  if (s.freqsHz.size() != s.z.size()) throw DataError("frequency and impedance counts differ");
  if (s.freqsHz.empty()) throw DataError("empty impedance spectrum");
  for (std::size_t i = 0; i < s.freqsHz.size(); ++i) {
    if (!(s.freqsHz[i] >= 0.0) || !std::isfinite(s.freqsHz[i]))
      throw DataError("frequencies must be finite and non-negative");
    if (!std::isfinite(s.z[i].real()) || !std::isfinite(s.z[i].imag()) ||
        std::abs(s.z[i]) <= 0.0)
      throw DataError("impedance values must be finite and non-zero");
  }
}

}  // namespace

std::complex<double> rc_impedance(const RcModel& model, double fHz) {
  check_model(model);
  if (!(fHz >= 0.0) || !std::isfinite(fHz)) throw ConfigError("frequency must be non-negative");
  const std::complex<double> denom(1.0, 2.0 * kPi * fHz * model.rOhm * model.cFarad);
  return model.rOhm / denom;
}

std::vector<double> standard_frequency_grid() {
  std::vector<double> freqs(50);
  for (int i = 0; i < 50; ++i) freqs[i] = std::pow(10.0, 4.0 * i / 49.0);
  return freqs;
}

ImpedanceSpectrum model_spectrum(const RcModel& model, const std::vector<double>& freqsHz) {
  ImpedanceSpectrum out;
  out.freqsHz = freqsHz;
  out.z.reserve(freqsHz.size());
  for (double f : freqsHz) out.z.push_back(rc_impedance(model, f));
  return out;
}

namespace {

// The misfit separates: phase depends only on s = ln(R C), and for fixed s
// the optimal a = ln R of the log-magnitude part is the mean of
// lm_i + ln|1 + j u_i|. That profiles the fit down to one dimension in s.
struct FitWork {
  const std::vector<double>& omega;
  const std::vector<double>& logMag;
  const std::vector<double>& phase;

  double profiled_a(double s) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < omega.size(); ++i) {
      const double u = omega[i] * std::exp(s);
      acc += logMag[i] + 0.5 * std::log1p(u * u);
    }
    return acc / static_cast<double>(omega.size());
  }

  double cost(double s) const {
    const double a = profiled_a(s);
    double acc = 0.0;
    for (std::size_t i = 0; i < omega.size(); ++i) {
      const double u = omega[i] * std::exp(s);
      const double rm = (a - 0.5 * std::log1p(u * u)) - logMag[i];
      const double rp = -std::atan(u) - phase[i];
      acc += rm * rm + rp * rp;
    }
    return acc;
  }
};

}  // namespace

RcFit fit_rc(const ImpedanceSpectrum& spectrum) {
  check_spectrum(spectrum);
  const std::size_t n = spectrum.freqsHz.size();
  std::vector<double> distinct = spectrum.freqsHz;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw DataError("fit needs at least two distinct frequencies");

  std::vector<double> omega(n), logMag(n), phase(n);
  for (std::size_t i = 0; i < n; ++i) {
    omega[i] = 2.0 * kPi * spectrum.freqsHz[i];
    logMag[i] = std::log(std::abs(spectrum.z[i]));
    phase[i] = std::arg(spectrum.z[i]);
  }

  const double meanLogMag =
      std::accumulate(logMag.begin(), logMag.end(), 0.0) / static_cast<double>(n);
  double maxLag = 0.0;
  for (double p : phase) maxLag = std::max(maxLag, -p);

  RcFit fit;
  if (maxLag < 1e-3) {
    // No measurable phase lag: the interface is purely resistive and C is
    // pinned to zero instead of chasing noise.
    fit.model = {std::exp(meanLogMag), 0.0};
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double rm = std::log(fit.model.rOhm) - logMag[i];
      s += rm * rm + phase[i] * phase[i];
    }
    fit.residual = std::sqrt(s / (2.0 * static_cast<double>(n)));
    return fit;
  }

  const FitWork work{omega, logMag, phase};

  // Bracket s = ln(R C) generously around the measured band: u = omega e^s
  // spans [e^-21, e^21] at the band edges, far beyond any identifiable knee.
  double omegaLo = std::numeric_limits<double>::infinity(), omegaHi = 0.0;
  for (double w : omega) {
    if (w > 0.0) {
      omegaLo = std::min(omegaLo, w);
      omegaHi = std::max(omegaHi, w);
    }
  }
  const double sLo = -std::log(omegaHi) - 21.0;
  const double sHi = -std::log(omegaLo) + 21.0;

  // Coarse scan, then golden-section refinement inside the best cell.
  const int kScan = 400;
  double bestS = sLo, bestCost = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const double s = sLo + (sHi - sLo) * i / kScan;
    const double c = work.cost(s);
    if (c < bestCost) {
      bestCost = c;
      bestS = s;
    }
  }
  const double cell = (sHi - sLo) / kScan;
  double lo = bestS - cell, hi = bestS + cell;
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
  double f1 = work.cost(x1), f2 = work.cost(x2);
  for (int it = 0; it < 120 && hi - lo > 1e-13; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - golden * (hi - lo);
      f1 = work.cost(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + golden * (hi - lo);
      f2 = work.cost(x2);
    }
  }
  bestS = f1 < f2 ? x1 : x2;
  bestCost = std::min(f1, f2);
  if (!std::isfinite(bestCost)) throw NumericError("impedance fit failed to converge");
  const double bestA = work.profiled_a(bestS);
  fit.model = {std::exp(bestA), std::exp(bestS - bestA)};
  fit.residual = std::sqrt(bestCost / (2.0 * static_cast<double>(n)));
  return fit;
}

BodeAggregate aggregate_bode(const std::vector<ImpedanceSpectrum>& spectra) {
  if (spectra.empty()) throw DataError("no spectra to aggregate");
  for (const auto& s : spectra) check_spectrum(s);
  const std::vector<double>& freqs = spectra.front().freqsHz;
  for (const auto& s : spectra) {
    if (s.freqsHz.size() != freqs.size())
      throw DataError("spectra use different frequency grids");
    for (std::size_t i = 0; i < freqs.size(); ++i) {
      if (std::abs(s.freqsHz[i] - freqs[i]) > 1e-9 * std::max(1.0, freqs[i]))
        throw DataError("spectra use different frequency grids");
    }
  }

  BodeAggregate agg;
  agg.freqsHz = freqs;
  const Eigen::Index nf = static_cast<Eigen::Index>(freqs.size());
  agg.magnitudeMedianOhm.resize(nf);
  agg.magnitudeIqrOhm.resize(nf);
  agg.magnitudeQ1Ohm.resize(nf);
  agg.magnitudeQ3Ohm.resize(nf);
  agg.phaseMedianDeg.resize(nf);
  agg.phaseIqrDeg.resize(nf);
  agg.phaseQ1Deg.resize(nf);
  agg.phaseQ3Deg.resize(nf);
  std::vector<double> mags(spectra.size()), phases(spectra.size());
  for (Eigen::Index i = 0; i < nf; ++i) {
    for (std::size_t p = 0; p < spectra.size(); ++p) {
      mags[p] = std::abs(spectra[p].z[static_cast<std::size_t>(i)]);
      phases[p] = std::arg(spectra[p].z[static_cast<std::size_t>(i)]) * 180.0 / kPi;
    }
    const stats::Quartiles qm = stats::quartiles(mags);
    const stats::Quartiles qp = stats::quartiles(phases);
    agg.magnitudeMedianOhm[i] = qm.median;
    agg.magnitudeIqrOhm[i] = qm.iqr();
    agg.magnitudeQ1Ohm[i] = qm.q1;
    agg.magnitudeQ3Ohm[i] = qm.q3;
    agg.phaseMedianDeg[i] = qp.median;
    agg.phaseIqrDeg[i] = qp.iqr();
    agg.phaseQ1Deg[i] = qp.q1;
    agg.phaseQ3Deg[i] = qp.q3;
  }
  return agg;
}

DividerGain divider_attenuation(std::complex<double> zE, std::complex<double> zIn) {
  const std::complex<double> denom = zIn + zE;
  if (std::abs(denom) <= 0.0) throw DataError("divider denominator is zero");
  DividerGain out;
  out.gain = zIn / denom;
  if (std::abs(out.gain) <= 0.0) throw DataError("divider gain is zero");
  out.db = 20.0 * std::log10(std::abs(out.gain));
  return out;
}

double normalize_by_area(double zMagnitudeOhm, double areaCm2) {
  if (!(areaCm2 > 0.0)) throw ConfigError("electrode area must be positive");
  if (!(zMagnitudeOhm >= 0.0)) throw DataError("impedance magnitude must be non-negative");
  return zMagnitudeOhm * areaCm2;
}

std::complex<double> per_interface_from_pair(std::complex<double> zPair) {
  return zPair * 0.5;
}

std::vector<ImpedanceSpectrum> load_measurements(const std::string& path) {
  const dataio::CsvTable table = dataio::read_csv(path);
  const std::vector<std::string> expected = {"pair", "freqHz", "magnitudeOhm", "phaseDeg"};
  if (table.header != std::vector<std::string>(expected.begin(), expected.end()))
    throw DataError("unexpected measurement CSV header in " + path);
  if (table.values.rows() == 0) throw DataError("no measurements in " + path);

  std::map<long long, std::vector<std::pair<double, std::complex<double>>>> byPair;
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    const double rawPair = table.values(r, 0);
    const long long pairId = std::llround(rawPair);
    if (std::abs(rawPair - static_cast<double>(pairId)) > 1e-9 || pairId < 0)
      throw DataError("pair ids must be non-negative integers in " + path);
    const double f = table.values(r, 1);
    const double mag = table.values(r, 2);
    const double phaseRad = table.values(r, 3) * kPi / 180.0;
    byPair[pairId].emplace_back(f, std::polar(mag, phaseRad));
  }

  std::vector<ImpedanceSpectrum> spectra;
  spectra.reserve(byPair.size());
  for (auto& [id, rows] : byPair) {
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    ImpedanceSpectrum s;
    for (const auto& [f, z] : rows) {
      s.freqsHz.push_back(f);
      s.z.push_back(z);
    }
    check_spectrum(s);
    spectra.push_back(std::move(s));
  }
  return spectra;
}

void save_measurements(const std::string& path, const std::vector<ImpedanceSpectrum>& spectra) {
  if (spectra.empty()) throw DataError("no spectra to save");
  Eigen::Index rows = 0;
  for (const auto& s : spectra) {
    check_spectrum(s);
    rows += static_cast<Eigen::Index>(s.freqsHz.size());
  }
  Eigen::MatrixXd values(rows, 4);
  Eigen::Index r = 0;
  for (std::size_t p = 0; p < spectra.size(); ++p) {
    for (std::size_t i = 0; i < spectra[p].freqsHz.size(); ++i, ++r) {
      values(r, 0) = static_cast<double>(p);
      values(r, 1) = spectra[p].freqsHz[i];
      values(r, 2) = std::abs(spectra[p].z[i]);
      values(r, 3) = std::arg(spectra[p].z[i]) * 180.0 / kPi;
    }
  }
  dataio::write_csv(path, {"pair", "freqHz", "magnitudeOhm", "phaseDeg"}, values);
}

Spectrogram spectrogram(const std::vector<double>& x, double fsHz, int winLen, int hop,
                        double floorDb) {
  if (winLen < 2 || (winLen & (winLen - 1)) != 0)
    throw ConfigError("spectrogram window length must be a power of two");
  if (hop < 1) throw ConfigError("spectrogram hop must be positive");
  if (!(fsHz > 0.0)) throw ConfigError("sampling rate must be positive");
  if (!std::isfinite(floorDb)) throw ConfigError("spectrogram floor must be finite");
  if (x.size() < static_cast<std::size_t>(winLen))
    throw DataError("signal shorter than one spectrogram window");

  const std::vector<double> window = signal::hann_window(static_cast<std::size_t>(winLen));
  const std::size_t nFrames = (x.size() - static_cast<std::size_t>(winLen)) /
                                  static_cast<std::size_t>(hop) +
                              1;
  const int nBins = winLen / 2 + 1;

  Spectrogram out;
  out.db.resize(static_cast<Eigen::Index>(nFrames), nBins);
  out.timesS.resize(nFrames);
  out.freqsHz.resize(static_cast<std::size_t>(nBins));
  for (int k = 0; k < nBins; ++k) out.freqsHz[static_cast<std::size_t>(k)] = k * fsHz / winLen;

  std::vector<std::complex<double>> frame(static_cast<std::size_t>(winLen));
  for (std::size_t fIdx = 0; fIdx < nFrames; ++fIdx) {
    const std::size_t start = fIdx * static_cast<std::size_t>(hop);
    for (int k = 0; k < winLen; ++k) {
      const std::size_t kk = static_cast<std::size_t>(k);
      if (!std::isfinite(x[start + kk])) throw DataError("non-finite sample in spectrogram input");
      frame[kk] = x[start + kk] * window[kk];
    }
    signal::fft(frame);
    for (int k = 0; k < nBins; ++k) {
      const double mag = std::abs(frame[static_cast<std::size_t>(k)]);
      const double db = mag > 0.0 ? 20.0 * std::log10(mag) : floorDb;
      out.db(static_cast<Eigen::Index>(fIdx), k) = std::max(db, floorDb);
    }
    out.timesS[fIdx] =
        (static_cast<double>(start) + (static_cast<double>(winLen) - 1.0) / 2.0) / fsHz;
  }
  return out;
}

EmgComparison compare_emg(const std::vector<double>& aVolts, const std::vector<double>& bVolts,
                          double fsHz, int windowLen, int slide) {
  if (aVolts.size() != bVolts.size()) throw DataError("signals must have equal length");
  if (windowLen < 1 || slide < 1) throw ConfigError("window and slide must be positive");
  if (aVolts.size() < static_cast<std::size_t>(windowLen))
    throw DataError("signals shorter than one RMS window");

  // Raw-signal RMS traces: a DC offset is part of the quality difference
  // here, so unlike envelope extraction nothing is removed first.
  const std::vector<double> ta =
      signal::sliding_rms(aVolts, static_cast<std::size_t>(windowLen),
                          static_cast<std::size_t>(slide));
  const std::vector<double> tb =
      signal::sliding_rms(bVolts, static_cast<std::size_t>(windowLen),
                          static_cast<std::size_t>(slide));
  double s = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    const double d = ta[i] - tb[i];
    s += d * d;
  }
  EmgComparison out;
  out.rmseRmsMv = std::sqrt(s / static_cast<double>(ta.size())) * 1e3;

  const Spectrogram sa = spectrogram(aVolts, fsHz);
  const Spectrogram sb = spectrogram(bVolts, fsHz);
  out.rmseSpecDb = std::sqrt((sa.db - sb.db).squaredNorm() /
                             static_cast<double>(sa.db.size()));
  return out;
}

}  // namespace emgpose::impedance
