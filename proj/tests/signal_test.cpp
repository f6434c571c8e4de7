#include "emgpose/signal.hpp"

#include <cmath>
#include <complex>
#include <vector>

#include <doctest.h>

#include "emgpose/errors.hpp"
#include "emgpose/rng.hpp"

using namespace emgpose;

namespace {

// Steady-state amplitude of a sinusoid at frequency f in y over whole
// periods, by quadrature projection.
double tone_amplitude(const std::vector<double>& y, double fHz, double fsHz,
                      std::size_t start, std::size_t len) {
  double cs = 0.0, sn = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double t = static_cast<double>(start + i) / fsHz;
    const double ph = 2.0 * M_PI * fHz * t;
    cs += y[start + i] * std::cos(ph);
    sn += y[start + i] * std::sin(ph);
  }
  return 2.0 * std::hypot(cs, sn) / static_cast<double>(len);
}

}  // namespace

TEST_CASE("sliding_rms equals the naive per-window oracle exactly") {
  Rng rng(101);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 300 + rng.below(700);
    std::vector<double> x(n);
    for (double& v : x) v = rng.normal() * 3.0;
    const std::size_t slides[4] = {1, 25, 29, 33};
    const std::size_t slide = slides[rep % 4];
    const std::size_t w = 10 + rng.below(191);
    const auto rms = signal::sliding_rms(x, w, slide);
    REQUIRE(rms.size() == signal::sliding_window_count(n, w, slide));
    for (std::size_t k = 0; k < rms.size(); ++k) {
      double ss = 0.0;
      for (std::size_t i = 0; i < w; ++i) ss += x[k * slide + i] * x[k * slide + i];
      const double naive = std::sqrt(ss / static_cast<double>(w));
      CHECK(rms[k] == naive);  // bit-exact: same summation order
    }
  }
}

TEST_CASE("sliding_rms of a whole-period sinusoid is A/sqrt(2)") {
  const double fs = 2048.0;
  const double A = 0.37;
  const std::size_t w = 200;
  // Frequency chosen so the window spans exactly 5 periods.
  const double f = fs * 5.0 / static_cast<double>(w);
  std::vector<double> x(4096);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = A * std::sin(2.0 * M_PI * f * static_cast<double>(i) / fs);
  const auto rms = signal::sliding_rms(x, w, 25);
  const double expected = A / std::sqrt(2.0);
  for (double v : rms) CHECK(std::fabs(v - expected) / expected < 0.01);
}

TEST_CASE("sliding window centers are left-aligned window midpoints") {
  const auto t = signal::sliding_window_centers(1000, 200, 25, 2048.0);
  REQUIRE(t.size() == (1000 - 200) / 25 + 1);
  CHECK(t[0] == doctest::Approx((199.0 / 2.0) / 2048.0));
  CHECK(t[1] == doctest::Approx((25.0 + 199.0 / 2.0) / 2048.0));
  CHECK_THROWS_AS(signal::sliding_rms(std::vector<double>(10, 1.0), 20, 5), DataError);
}

TEST_CASE("butterworth lowpass: unit DC gain") {
  const auto sos = signal::butterworth_lowpass_design(6, 1.0, 100.0);
  CHECK(sos.size() == 3);

  signal::SosFilter primed(sos);
  primed.reset(2.5);
  for (int i = 0; i < 50; ++i) CHECK(primed.process(2.5) == doctest::Approx(2.5).epsilon(1e-12));

  signal::SosFilter cold(sos);
  cold.reset(0.0);
  double y = 0.0;
  for (int i = 0; i < 4000; ++i) y = cold.process(2.5);
  CHECK(y == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("butterworth order 6: -3.01 dB at cutoff, >= 115 dB one decade above") {
  const double fs = 100.0;
  const double fc = 1.0;
  const auto sos = signal::butterworth_lowpass_design(6, fc, fs);

  auto run = [&](double f) {
    signal::SosFilter filt(sos);
    filt.reset(0.0);
    const std::size_t n = static_cast<std::size_t>(60.0 * fs);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = filt.process(std::sin(2.0 * M_PI * f * static_cast<double>(i) / fs));
    // Measure over the last 20 s (whole periods for f = 1 and f = 10).
    const std::size_t len = static_cast<std::size_t>(20.0 * fs);
    return tone_amplitude(y, f, fs, n - len, len);
  };

  const double aCut = run(fc);
  const double dbCut = 20.0 * std::log10(aCut);
  CHECK(std::fabs(dbCut - (-3.0103)) < 0.1);

  const double aDec = run(10.0 * fc);
  const double dbDec = 20.0 * std::log10(aDec);
  CHECK(dbDec <= -115.0);
}

TEST_CASE("butterworth filter is linear and time-invariant in superposition") {
  const auto sos = signal::butterworth_lowpass_design(6, 1.0, 100.0);
  Rng rng(7);
  std::vector<double> x(500), y(500), mix(500);
  const double a = 1.7, b = -0.6;
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = rng.normal();
    mix[i] = a * x[i] + b * y[i];
  }
  signal::SosFilter fx(sos), fy(sos), fm(sos);
  fx.reset(0.0);
  fy.reset(0.0);
  fm.reset(0.0);
  const auto ox = fx.process(x);
  const auto oy = fy.process(y);
  const auto om = fm.process(mix);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(std::fabs(om[i] - (a * ox[i] + b * oy[i])) < 1e-9);
}

TEST_CASE("fft: impulse, known tone, naive DFT cross-check, Parseval") {
  std::vector<std::complex<double>> imp(8, {0.0, 0.0});
  imp[0] = {1.0, 0.0};
  signal::fft(imp);
  for (const auto& v : imp) {
    CHECK(v.real() == doctest::Approx(1.0));
    CHECK(v.imag() == doctest::Approx(0.0));
  }

  // Bin-centered cosine: energy concentrated in bins k and N-k.
  const std::size_t n = 64;
  std::vector<std::complex<double>> tone(n);
  for (std::size_t i = 0; i < n; ++i)
    tone[i] = {std::cos(2.0 * M_PI * 5.0 * static_cast<double>(i) / n), 0.0};
  signal::fft(tone);
  for (std::size_t k = 0; k < n; ++k) {
    const double mag = std::abs(tone[k]);
    if (k == 5 || k == n - 5) {
      CHECK(mag == doctest::Approx(n / 2.0).epsilon(1e-9));
    } else {
      CHECK(mag < 1e-9);
    }
  }

  Rng rng(13);
  std::vector<std::complex<double>> x(16);
  for (auto& v : x) v = {rng.normal(), rng.normal()};
  auto X = x;
  signal::fft(X);
  double et = 0.0, ef = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    et += std::norm(x[k]);
    ef += std::norm(X[k]);
    // Naive DFT oracle.
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double ang = -2.0 * M_PI * static_cast<double>(k * i) / static_cast<double>(x.size());
      acc += x[i] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    CHECK(std::abs(X[k] - acc) < 1e-9);
  }
  CHECK(ef / static_cast<double>(x.size()) == doctest::Approx(et).epsilon(1e-12));

  std::vector<std::complex<double>> bad(6);
  CHECK_THROWS_AS(signal::fft(bad), DataError);
}

TEST_CASE("interp1 and resample_linear") {
  const std::vector<double> xs = {0.0, 1.0, 2.0, 4.0};
  const std::vector<double> ys = {0.0, 10.0, 20.0, 40.0};
  CHECK(signal::interp1(xs, ys, 0.5) == doctest::Approx(5.0));
  CHECK(signal::interp1(xs, ys, 3.0) == doctest::Approx(30.0));
  CHECK(signal::interp1(xs, ys, 4.0) == doctest::Approx(40.0));
  CHECK(signal::interp1(xs, ys, 0.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(signal::interp1(xs, ys, -0.1), DataError);
  CHECK_THROWS_AS(signal::interp1(xs, ys, 4.1), DataError);

  // Linear data resamples exactly; endpoints preserved.
  std::vector<double> lin(37);
  for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = 3.0 * static_cast<double>(i) - 5.0;
  const auto rs = signal::resample_linear(lin, 256);
  CHECK(rs.front() == doctest::Approx(lin.front()));
  CHECK(rs.back() == doctest::Approx(lin.back()));
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const double h = static_cast<double>(i) * 36.0 / 255.0;
    CHECK(rs[i] == doctest::Approx(3.0 * h - 5.0).epsilon(1e-12));
  }
}
