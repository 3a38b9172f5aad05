#pragma once

#include <vector>

namespace blochrate {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  int points = 0;
};

/// Ordinary least squares y = intercept + slope·x. Needs ≥ 3 points.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Least-squares slope of log y against log x. Needs ≥ 3 positive pairs.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace blochrate
