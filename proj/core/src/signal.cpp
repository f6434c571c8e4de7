#include "emgpose/signal.hpp"

#include <algorithm>
#include <cmath>

#include "emgpose/errors.hpp"

namespace emgpose::signal {

std::size_t sliding_window_count(std::size_t n, std::size_t windowLen, std::size_t slide) {
  if (windowLen == 0 || slide == 0) throw DataError("sliding window: zero window or slide");
  if (windowLen > n) return 0;
  return (n - windowLen) / slide + 1;
}

std::vector<double> sliding_rms(const std::vector<double>& x,
                                std::size_t windowLen,
                                std::size_t slide) {
  const std::size_t count = sliding_window_count(x.size(), windowLen, slide);
  if (count == 0) throw DataError("sliding_rms: window longer than signal");
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t start = k * slide;
    double ss = 0.0;
    for (std::size_t i = 0; i < windowLen; ++i) ss += x[start + i] * x[start + i];
    out[k] = std::sqrt(ss / static_cast<double>(windowLen));
  }
  return out;
}

std::vector<double> sliding_window_centers(std::size_t n,
                                           std::size_t windowLen,
                                           std::size_t slide,
                                           double fsHz) {
  const std::size_t count = sliding_window_count(n, windowLen, slide);
  std::vector<double> t(count);
  const double half = 0.5 * static_cast<double>(windowLen - 1);
  for (std::size_t k = 0; k < count; ++k)
    t[k] = (static_cast<double>(k * slide) + half) / fsHz;
  return t;
}

SosFilter::SosFilter(std::vector<Biquad> sections)
    : sections_(std::move(sections)),
      s1_(sections_.size(), 0.0),
      s2_(sections_.size(), 0.0) {}

void SosFilter::reset(double x0) {
  // Steady state for constant input: per section y = x * H(1), then
  // s1 = y - b0*x, s2 = b2*x - a2*y. The section output feeds the next.
  double x = x0;
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const Biquad& s = sections_[i];
    const double den = 1.0 + s.a1 + s.a2;
    const double y = den != 0.0 ? x * (s.b0 + s.b1 + s.b2) / den : 0.0;
    s1_[i] = y - s.b0 * x;
    s2_[i] = s.b2 * x - s.a2 * y;
    x = y;
  }
}

double SosFilter::process(double x) {
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    const Biquad& s = sections_[i];
    const double y = s.b0 * x + s1_[i];
    s1_[i] = s.b1 * x - s.a1 * y + s2_[i];
    s2_[i] = s.b2 * x - s.a2 * y;
    x = y;
  }
  return x;
}

std::vector<double> SosFilter::process(const std::vector<double>& x) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = process(x[i]);
  return y;
}

std::vector<Biquad> butterworth_lowpass_design(int order, double cutoffHz, double fsHz) {
  if (order < 1) throw DataError("butterworth: order must be >= 1");
  if (!(cutoffHz > 0.0) || !(cutoffHz < 0.5 * fsHz))
    throw DataError("butterworth: cutoff must satisfy 0 < fc < fs/2");

  // Pre-warped analog cutoff so the digital response hits -3 dB at cutoffHz.
  const double warped = 2.0 * fsHz * std::tan(M_PI * cutoffHz / fsHz);
  const double k = 2.0 * fsHz;

  std::vector<Biquad> sections;
  const int nPairs = order / 2;
  for (int i = 0; i < nPairs; ++i) {
    // Conjugate analog pole pair on the unit circle, scaled by the warped
    // cutoff: p = warped * exp(j*theta), theta in (pi/2, pi).
    const double theta = M_PI * (2.0 * i + order + 1.0) / (2.0 * order);
    const std::complex<double> p = warped * std::exp(std::complex<double>(0.0, theta));
    const std::complex<double> zp = (k + p) / (k - p);  // bilinear transform
    const double re = zp.real();
    const double mag2 = std::norm(zp);
    Biquad s{};
    s.a1 = -2.0 * re;
    s.a2 = mag2;
    // Two zeros at z = -1; gain sets unit DC response.
    const double g = (1.0 + s.a1 + s.a2) / 4.0;
    s.b0 = g;
    s.b1 = 2.0 * g;
    s.b2 = g;
    sections.push_back(s);
  }
  if (order % 2 == 1) {
    // Real pole at -warped.
    const double p = -warped;
    const double zp = (k + p) / (k - p);
    Biquad s{};
    s.a1 = -zp;
    s.a2 = 0.0;
    const double g = (1.0 + s.a1) / 2.0;
    s.b0 = g;
    s.b1 = g;
    s.b2 = 0.0;
    sections.push_back(s);
  }
  return sections;
}

void fft(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0) throw DataError("fft: size must be a power of two");
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = x[i + j];
        const std::complex<double> v = x[i + j + len / 2] * w;
        x[i + j] = u + v;
        x[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n)));
  return w;
}

double interp1(const std::vector<double>& xs, const std::vector<double>& ys, double xq) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw DataError("interp1: need matched series of length >= 2");
  if (xq < xs.front() || xq > xs.back())
    throw DataError("interp1: query outside data range (no extrapolation)");
  const auto it = std::upper_bound(xs.begin(), xs.end(), xq);
  std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  if (hi == xs.size()) hi = xs.size() - 1;
  if (hi == 0) hi = 1;
  const std::size_t lo = hi - 1;
  const double span = xs[hi] - xs[lo];
  if (span <= 0.0) throw DataError("interp1: x values must be strictly increasing");
  const double f = (xq - xs[lo]) / span;
  return ys[lo] + f * (ys[hi] - ys[lo]);
}

std::vector<double> resample_linear(const std::vector<double>& y, std::size_t nOut) {
  if (y.size() < 2) throw DataError("resample_linear: need at least 2 points");
  if (nOut < 2) throw DataError("resample_linear: need at least 2 output points");
  std::vector<double> out(nOut);
  const double scale = static_cast<double>(y.size() - 1) / static_cast<double>(nOut - 1);
  for (std::size_t i = 0; i < nOut; ++i) {
    const double h = static_cast<double>(i) * scale;
    const std::size_t lo = std::min(static_cast<std::size_t>(h), y.size() - 2);
    const double f = h - static_cast<double>(lo);
    out[i] = y[lo] + f * (y[lo + 1] - y[lo]);
  }
  return out;
}

}  // namespace emgpose::signal
