#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace emgpose::signal {

/// Sliding-window RMS. Windows are left-aligned: window k covers samples
/// [k*slide, k*slide + windowLen) and only complete windows are emitted.
/// The per-window sum runs left to right so results match a naive
/// recomputation bit for bit.
std::vector<double> sliding_rms(const std::vector<double>& x,
                                std::size_t windowLen,
                                std::size_t slide);

/// Number of complete windows for a signal of length n.
std::size_t sliding_window_count(std::size_t n, std::size_t windowLen, std::size_t slide);

/// Center timestamps (seconds) of each window; the center of window k is
/// sample index k*slide + (windowLen-1)/2.
std::vector<double> sliding_window_centers(std::size_t n,
                                           std::size_t windowLen,
                                           std::size_t slide,
                                           double fsHz);

struct Biquad {
  double b0, b1, b2;  // numerator, z^0..z^-2
  double a1, a2;      // denominator, z^-1..z^-2 (a0 normalized to 1)
};

/// Cascade of second-order sections with direct-form-II-transposed state.
class SosFilter {
 public:
  explicit SosFilter(std::vector<Biquad> sections);

  /// Resets state to the steady-state response for constant input x0,
  /// suppressing the startup transient of causal filtering.
  void reset(double x0 = 0.0);

  double process(double x);
  std::vector<double> process(const std::vector<double>& x);

 private:
  std::vector<Biquad> sections_;
  std::vector<double> s1_, s2_;
};

/// Butterworth lowpass design: analog prototype poles, frequency pre-warping,
/// bilinear transform, conjugate poles paired into unit-DC-gain sections.
/// Requires 0 < cutoffHz < fsHz/2.
std::vector<Biquad> butterworth_lowpass_design(int order, double cutoffHz, double fsHz);

/// In-place radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& x);

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

/// Piecewise-linear interpolation of (xs, ys) at xq. xs must be strictly
/// increasing; xq outside [xs.front(), xs.back()] is an error (no
/// extrapolation).
double interp1(const std::vector<double>& xs, const std::vector<double>& ys, double xq);

/// Resample a series onto nOut equally spaced points spanning its full index
/// range, by linear interpolation.
std::vector<double> resample_linear(const std::vector<double>& y, std::size_t nOut);

}  // namespace emgpose::signal
