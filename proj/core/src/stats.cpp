#include "emgpose/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "emgpose/errors.hpp"

namespace emgpose::stats {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation, n-1 denominator.
double sd_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Midranks of the pooled sample; ties share the average rank (1-based).
std::vector<double> midranks(const std::vector<double>& pooled) {
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// Sum of t^3 - t over tie groups of the pooled sample.
double tie_correction_sum(std::vector<double> pooled) {
  std::sort(pooled.begin(), pooled.end());
  double total = 0.0;
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j + 1 < pooled.size() && pooled[j + 1] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    total += t * t * t - t;
    i = j + 1;
  }
  return total;
}

// Horner evaluation from the highest-order coefficient; c[0] is the constant.
template <std::size_t N>
double horner(const double (&c)[N], double x) {
  double acc = c[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) acc = acc * x + c[i];
  return acc;
}

// Lentz continued fraction for the incomplete beta (Numerical Recipes form).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

std::string to_string(Alternative alt) {
  switch (alt) {
    case Alternative::Less: return "less";
    case Alternative::Greater: return "greater";
    case Alternative::TwoSided: return "two-sided";
  }
  return "two-sided";
}

std::string to_json_string(const TestReport& report) {
  nlohmann::ordered_json j;
  j["statistic"] = report.statistic;
  j["pValue"] = report.pValue;
  j["alternative"] = to_string(report.alternative);
  j["n"] = report.n;
  j["method"] = report.method;
  return j.dump();
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double normal_sf(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }

double normal_quantile(double p) {
  // Wichura (1988), algorithm AS 241, PPND16.
  if (!(p > 0.0 && p < 1.0)) throw DataError("normal_quantile: p must be in (0, 1)");
  static constexpr double A[8] = {
      3.3871328727963666080e0,  1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4,  4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4,  2.5090809287301226727e3};
  static constexpr double B[8] = {
      1.0,                      4.2313330701600911252e1, 6.8718700749205790830e2,
      5.3941960214247511077e3,  2.1213794301586595867e4, 3.9307895800092710610e4,
      2.8729085735721942674e4,  5.2264952788528545610e3};
  static constexpr double C[8] = {
      1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double D[8] = {
      1.0,                      2.05319162663775882187e0, 1.67638483018380384940e0,
      6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static constexpr double E[8] = {
      6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double F[8] = {
      1.0,                      5.99832206555887937690e-1, 1.36929880922735805310e-1,
      1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15};
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * horner(A, r) / horner(B, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double v;
  if (r <= 5.0) {
    r -= 1.6;
    v = horner(C, r) / horner(D, r);
  } else {
    r -= 5.0;
    v = horner(E, r) / horner(F, r);
  }
  return q < 0.0 ? -v : v;
}

double incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw DataError("incomplete_beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lnBt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(lnBt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double nu) {
  if (nu <= 0.0) throw DataError("student_t_cdf: nu must be positive");
  const double x = nu / (nu + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * nu, 0.5, x);
  return t <= 0.0 ? tail : 1.0 - tail;
}

double student_t_sf(double t, double nu) { return student_t_cdf(-t, nu); }

TestReport mann_whitney_u(const std::vector<double>& a,
                          const std::vector<double>& b,
                          Alternative alt,
                          const std::string& method) {
  const std::size_t n1 = a.size();
  const std::size_t n2 = b.size();
  if (n1 == 0 || n2 == 0) throw DataError("mann_whitney_u: empty sample");
  if (!method.empty() && method != "exact" && method != "approx")
    throw DataError("mann_whitney_u: unknown method '" + method + "'");
  const std::size_t n = n1 + n2;

  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::vector<double> ranks = midranks(pooled);
  double r1 = 0.0;
  for (std::size_t i = 0; i < n1; ++i) r1 += ranks[i];
  const double u1 = r1 - 0.5 * static_cast<double>(n1) * static_cast<double>(n1 + 1);

  const bool exact = method == "exact" || (method.empty() && n <= 16);

  TestReport report;
  report.statistic = u1;
  report.alternative = alt;
  report.n = {n1, n2};

  double pLess, pGreater;
  if (exact) {
    // Enumerate every size-n1 subset of the pooled midranks. Conditioning on
    // the observed pooled values makes this valid under ties as well.
    std::vector<std::size_t> idx(n1);
    std::iota(idx.begin(), idx.end(), 0);
    std::size_t total = 0, countLe = 0, countGe = 0;
    const double eps = 1e-9;
    while (true) {
      double rs = 0.0;
      for (std::size_t i : idx) rs += ranks[i];
      ++total;
      if (rs <= r1 + eps) ++countLe;
      if (rs >= r1 - eps) ++countGe;
      // Next lexicographic combination.
      std::size_t k = n1;
      while (k > 0 && idx[k - 1] == n - n1 + k - 1) --k;
      if (k == 0) break;
      ++idx[k - 1];
      for (std::size_t i = k; i < n1; ++i) idx[i] = idx[i - 1] + 1;
    }
    pLess = static_cast<double>(countLe) / static_cast<double>(total);
    pGreater = static_cast<double>(countGe) / static_cast<double>(total);
    report.method = "exact";
  } else {
    const double mu = 0.5 * static_cast<double>(n1) * static_cast<double>(n2);
    const double ties = tie_correction_sum(pooled);
    const double nn = static_cast<double>(n);
    const double var = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
                       ((nn + 1.0) - ties / (nn * (nn - 1.0)));
    if (var <= 0.0) {
      // Every pooled value identical: no evidence either way.
      pLess = pGreater = 1.0;
    } else {
      const double sigma = std::sqrt(var);
      pLess = normal_cdf((u1 + 0.5 - mu) / sigma);
      pGreater = normal_sf((u1 - 0.5 - mu) / sigma);
    }
    report.method = "normal-approximation";
  }

  switch (alt) {
    case Alternative::Less: report.pValue = pLess; break;
    case Alternative::Greater: report.pValue = pGreater; break;
    case Alternative::TwoSided:
      report.pValue = std::min(1.0, 2.0 * std::min(pLess, pGreater));
      break;
  }
  return report;
}

TestReport shapiro_wilk(const std::vector<double>& x) {
  // Royston (1995), algorithm AS R94.
  const std::size_t n = x.size();
  if (n < 3 || n > 5000) throw DataError("shapiro_wilk: n must be in [3, 5000]");
  std::vector<double> xs(x);
  std::sort(xs.begin(), xs.end());
  if (xs.front() == xs.back()) throw DataError("shapiro_wilk: zero variance");

  const double nd = static_cast<double>(n);
  std::vector<double> m(n);
  double ssqM = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (nd + 0.25));
    ssqM += m[i] * m[i];
  }

  std::vector<double> a(n);
  if (n == 3) {
    a[0] = -std::sqrt(0.5);
    a[1] = 0.0;
    a[2] = std::sqrt(0.5);
  } else {
    const double rms = std::sqrt(ssqM);
    const double u = 1.0 / std::sqrt(nd);
    static constexpr double C1[6] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static constexpr double C2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    const double an = m[n - 1] / rms + horner(C1, u);
    double phi;
    if (n <= 5) {
      phi = (ssqM - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
      a[n - 1] = an;
      for (std::size_t i = 1; i + 1 < n; ++i) a[i] = m[i] / std::sqrt(phi);
      a[0] = -an;
    } else {
      const double an1 = m[n - 2] / rms + horner(C2, u);
      phi = (ssqM - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
            (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
      a[n - 1] = an;
      a[n - 2] = an1;
      for (std::size_t i = 2; i + 2 < n; ++i) a[i] = m[i] / std::sqrt(phi);
      a[0] = -an;
      a[1] = -an1;
    }
  }

  const double xbar = mean_of(xs);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += a[i] * xs[i];
    den += (xs[i] - xbar) * (xs[i] - xbar);
  }
  if (den <= 0.0) throw DataError("shapiro_wilk: zero variance");
  const double w = num * num / den;

  double p;
  if (n == 3) {
    constexpr double kPiOver6 = 0.5235987755982988;
    constexpr double kStqr = 1.0471975511965976;  // asin(sqrt(3/4))
    p = std::clamp((std::asin(std::sqrt(w)) - kStqr) / kPiOver6, 0.0, 1.0);
  } else if (n <= 11) {
    const double g = -2.273 + 0.459 * nd;
    const double mu = 0.5440 - 0.39978 * nd + 0.025054 * nd * nd - 0.0006714 * nd * nd * nd;
    const double sigma =
        std::exp(1.3822 - 0.77857 * nd + 0.062767 * nd * nd - 0.0020322 * nd * nd * nd);
    const double z = (-std::log(g - std::log1p(-w)) - mu) / sigma;
    p = normal_sf(z);
  } else {
    const double ln = std::log(nd);
    const double mu = -1.5861 - 0.31082 * ln - 0.083751 * ln * ln + 0.0038915 * ln * ln * ln;
    const double sigma = std::exp(-0.4803 - 0.082676 * ln + 0.0030302 * ln * ln);
    const double z = (std::log1p(-w) - mu) / sigma;
    p = normal_sf(z);
  }

  TestReport report;
  report.statistic = w;
  report.pValue = p;
  report.alternative = Alternative::Less;  // small p: evidence against normality
  report.n = {n};
  report.method = "royston-1995";
  return report;
}

TestReport paired_t(const std::vector<double>& a,
                    const std::vector<double>& b,
                    Alternative alt) {
  if (a.size() != b.size()) throw DataError("paired_t: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw DataError("paired_t: need at least 2 pairs");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double sd = sd_of(d);
  if (sd <= 0.0) throw DataError("paired_t: zero-variance differences");
  const double t = mean_of(d) / (sd / std::sqrt(static_cast<double>(n)));
  const double nu = static_cast<double>(n - 1);

  TestReport report;
  report.statistic = t;
  report.alternative = alt;
  report.n = {n};
  report.method = "student-t";
  switch (alt) {
    case Alternative::Less: report.pValue = student_t_cdf(t, nu); break;
    case Alternative::Greater: report.pValue = student_t_sf(t, nu); break;
    case Alternative::TwoSided: report.pValue = 2.0 * student_t_sf(std::fabs(t), nu); break;
  }
  return report;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("pearson: length mismatch");
  if (x.size() < 2) throw DataError("pearson: need at least 2 points");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw DataError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double quantile(const std::vector<double>& x, double p) {
  if (x.empty()) throw DataError("quantile: empty input");
  if (p < 0.0 || p > 1.0) throw DataError("quantile: p outside [0, 1]");
  std::vector<double> xs(x);
  std::sort(xs.begin(), xs.end());
  const double h = p * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= xs.size()) return xs.back();
  const double frac = h - static_cast<double>(lo);
  return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

Quartiles quartiles(const std::vector<double>& x) {
  if (x.empty()) throw DataError("quartiles: empty input");
  std::vector<double> xs(x);
  std::sort(xs.begin(), xs.end());
  auto interp = [&](double p) {
    const double h = p * static_cast<double>(xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= xs.size()) return xs.back();
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[lo + 1] - xs[lo]);
  };
  return Quartiles{interp(0.25), interp(0.5), interp(0.75)};
}

}  // namespace emgpose::stats
