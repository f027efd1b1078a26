#pragma once

#include <span>
#include <vector>

namespace bandlab {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of y - (slope * x + intercept)
};

// Ordinary least squares. Throws DomainError with fewer than two points or
// when all x coincide.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Median of a nonempty sample (mean of the two middle values for even sizes).
double median(std::vector<double> values);

}  // namespace bandlab
