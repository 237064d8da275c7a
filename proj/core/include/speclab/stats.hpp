#pragma once

#include <span>

namespace speclab {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rss = 0.0;  // residual sum of squares
};

/// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Slope of log(y) against log(x); x and y must be positive.
LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

}  // namespace speclab
