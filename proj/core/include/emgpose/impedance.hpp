#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace emgpose::impedance {

/// Parallel R-C model of one skin-electrode interface; tissue impedance is
/// treated as negligible.
struct RcModel {
  double rOhm = 0.0;
  double cFarad = 0.0;
};

/// Z(f) = R / (1 + j 2 pi f R C).
std::complex<double> rc_impedance(const RcModel& model, double fHz);

/// Measured or synthesized spectrum of one electrode pair.
struct ImpedanceSpectrum {
  std::vector<double> freqsHz;
  std::vector<std::complex<double>> z;
};

/// 50 geometric points from 1 Hz to 10 kHz (12.25 points per decade).
std::vector<double> standard_frequency_grid();

/// Synthesizes a spectrum of the model on the given grid.
ImpedanceSpectrum model_spectrum(const RcModel& model, const std::vector<double>& freqsHz);

struct RcFit {
  RcModel model;
  double residual = 0.0;  // RMS misfit over log-magnitude and phase residuals
};

/// Least-squares fit of (R, C) over log-magnitude and phase residuals. The
/// phase part depends only on the time constant, so ln(R C) is found by a
/// bracketed 1-D search with ln R profiled out in closed form. Needs at
/// least two distinct frequencies; data without measurable phase lag fits
/// C = 0 directly. A spectrum no RC model can produce still converges, with
/// a large reported residual.
RcFit fit_rc(const ImpedanceSpectrum& spectrum);

/// Per-frequency median and interquartile range over electrode pairs. The
/// quartiles themselves are kept as well so spread bands can be drawn.
struct BodeAggregate {
  std::vector<double> freqsHz;
  Eigen::VectorXd magnitudeMedianOhm;
  Eigen::VectorXd magnitudeIqrOhm;
  Eigen::VectorXd magnitudeQ1Ohm;
  Eigen::VectorXd magnitudeQ3Ohm;
  Eigen::VectorXd phaseMedianDeg;
  Eigen::VectorXd phaseIqrDeg;
  Eigen::VectorXd phaseQ1Deg;
  Eigen::VectorXd phaseQ3Deg;
};

BodeAggregate aggregate_bode(const std::vector<ImpedanceSpectrum>& spectra);

/// Voltage-divider transfer from source through the electrode into the
/// amplifier input: gain = zIn / (zIn + zE).
struct DividerGain {
  std::complex<double> gain;
  double db = 0.0;
};

DividerGain divider_attenuation(std::complex<double> zE, std::complex<double> zIn);

/// Impedance times electrode contact area, ohm * cm^2.
double normalize_by_area(double zMagnitudeOhm, double areaCm2);

/// A measurement between two identical electrodes in series is split equally:
/// the per-interface impedance is half the pair reading.
std::complex<double> per_interface_from_pair(std::complex<double> zPair);

/// Measurement CSV: columns pair, freqHz, magnitudeOhm, phaseDeg; rows
/// grouped into one spectrum per pair id (sorted by frequency).
std::vector<ImpedanceSpectrum> load_measurements(const std::string& path);
void save_measurements(const std::string& path, const std::vector<ImpedanceSpectrum>& spectra);

/// Short-time Fourier magnitude in dB (re 1 V) with a raised-cosine window.
/// Frames start every `hop` samples; bins cover 0..fs/2. Magnitudes below
/// the floor are clamped to floorDb.
struct Spectrogram {
  Eigen::MatrixXd db;  // nFrames x nBins
  std::vector<double> timesS;
  std::vector<double> freqsHz;
};

Spectrogram spectrogram(const std::vector<double>& x, double fsHz, int winLen = 256,
                        int hop = 128, double floorDb = -120.0);

/// Signal-quality comparison of two recordings of the same activity: RMSE
/// between sliding RMS traces (millivolts, computed on the raw signals with
/// no offset removal) and elementwise RMSE between the spectrograms (dB).
struct EmgComparison {
  double rmseRmsMv = 0.0;
  double rmseSpecDb = 0.0;
};

EmgComparison compare_emg(const std::vector<double>& aVolts, const std::vector<double>& bVolts,
                          double fsHz, int windowLen = 200, int slide = 25);

}  // namespace emgpose::impedance
