#pragma once

#include <span>

namespace hsfem {

/// Least-squares slope of log(y) against log(x) over the last tail_points
/// samples. Throws std::invalid_argument when fewer than tail_points samples
/// (or fewer than 2) are available or any tail value is not positive.
double rate_fit(std::span<const double> x, std::span<const double> y, int tail_points);

}  // namespace hsfem
