#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace emgpose::stats {

enum class Alternative { Less, Greater, TwoSided };

std::string to_string(Alternative alt);

/// Outcome of a hypothesis test. `alternative` records the exact alternative
/// hypothesis used so reported signs can be matched without guessing.
struct TestReport {
  double statistic = 0.0;
  double pValue = 1.0;
  Alternative alternative = Alternative::TwoSided;
  std::vector<std::size_t> n;       // sample sizes
  std::string method;               // e.g. "exact", "normal-approximation"
};

/// JSON rendering of a report (single object, stable key order).
std::string to_json_string(const TestReport& report);

// Distribution primitives. Exposed because downstream analyses (random field
// thresholds, normality transforms) need them directly.

/// Standard normal CDF, accurate in the far tails (erfc based).
double normal_cdf(double x);
/// Standard normal survival function 1 - CDF.
double normal_sf(double x);
/// Standard normal quantile (inverse CDF), Wichura's AS 241 rational
/// approximation, |error| < 1e-15 over (0, 1).
double normal_quantile(double p);
/// Regularized incomplete beta I_x(a, b) via continued fraction.
double incomplete_beta(double a, double b, double x);
/// Student t CDF with nu degrees of freedom.
double student_t_cdf(double t, double nu);
/// Student t survival function.
double student_t_sf(double t, double nu);

/// Mann-Whitney U test. The statistic is U of the first sample, computed from
/// midranks so ties are handled. p-value: exact enumeration over all
/// C(n1+n2, n1) group assignments when n1 + n2 <= 16, otherwise normal
/// approximation with tie correction and 0.5 continuity correction.
/// `method` may force "exact" or "approx" (empty selects by size).
TestReport mann_whitney_u(const std::vector<double>& a,
                          const std::vector<double>& b,
                          Alternative alt,
                          const std::string& method = "");

/// Shapiro-Wilk normality test, Royston's 1995 approximation (AS R94),
/// valid for 3 <= n <= 5000. Alternative is fixed: small p means non-normal.
TestReport shapiro_wilk(const std::vector<double>& x);

/// Paired t test on d = a - b with n-1 degrees of freedom.
/// Requires equal lengths >= 2 and nonzero variance of the differences.
TestReport paired_t(const std::vector<double>& a,
                    const std::vector<double>& b,
                    Alternative alt);

/// Sample Pearson correlation. Requires equal lengths >= 2 and nonzero
/// variance on both sides.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double iqr() const { return q3 - q1; }
};

/// Linear-interpolation quantiles at 0.25 / 0.5 / 0.75 (h = (n-1)p between
/// closest ranks). Requires a nonempty sample.
Quartiles quartiles(const std::vector<double>& x);

/// Linear-interpolation quantile at arbitrary p in [0, 1].
double quantile(const std::vector<double>& x, double p);

}  // namespace emgpose::stats
