#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "emgpose/rng.hpp"

namespace testsupport {

// Smooth unit-variance Gaussian field: white noise convolved with a Gaussian
// kernel of sd = FWHM / sqrt(8 ln 2), padded by 4 sd on both ends so the
// edges see a full kernel, and divided by sqrt(sum w^2) to restore unit
// marginal variance. No mean subtraction: the null holds per sample, not per
// realization.
inline Eigen::VectorXd smooth_gaussian_field(emgpose::Rng& rng, int nodes, double fwhm) {
  const double sd = fwhm / std::sqrt(8.0 * std::log(2.0));
  const int half = static_cast<int>(std::ceil(4.0 * sd));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  double wsq = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double w = std::exp(-0.5 * (i / sd) * (i / sd));
    kernel[static_cast<std::size_t>(i + half)] = w;
    wsq += w * w;
  }
  const double norm = 1.0 / std::sqrt(wsq);

  std::vector<double> noise(static_cast<std::size_t>(nodes + 2 * half));
  for (double& v : noise) v = rng.normal();

  Eigen::VectorXd field(nodes);
  for (int i = 0; i < nodes; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 2 * half + 1; ++j)
      acc += kernel[static_cast<std::size_t>(j)] * noise[static_cast<std::size_t>(i + j)];
    field[i] = acc * norm;
  }
  return field;
}

}  // namespace testsupport
