#pragma once

#include "hsfem/assemble.hpp"

namespace hsfem {

struct ErrorNorms {
    double l2 = 0.0;
    double h1_semi = 0.0;
};

/// L2 and H1-seminorm errors against the problem's exact solution,
/// elementwise Gauss quadrature with p+2 (+boost) points per direction;
/// `split_lines` mark directions' coordinates where the exact data is only
/// piecewise smooth.
ErrorNorms h1_error(const Solution& solution, const NurbsGeometry& geom,
                    const EllipticProblem& problem, int quad_boost = 0,
                    const std::array<std::vector<double>, 2>& split_lines = {});

}  // namespace hsfem
