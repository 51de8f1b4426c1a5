#pragma once

#include "hsfem/assemble.hpp"

namespace hsfem {

struct EstimateOptions {
    int quad_boost = 0;
    /// Use the parametric element size instead of the physical one in the
    /// weights (default physical).
    bool parametric_h = false;
    /// Lines across which the load is only piecewise smooth; volume
    /// quadrature is split there.
    std::array<std::vector<double>, 2> split_lines;
};

/// Per-element weighted-residual indicators, element ids following
/// HierMesh::active_cells() order.
struct EstimatorResult {
    std::vector<double> volume2;
    std::vector<double> jump2;
    double total2 = 0.0;

    double indicator2(std::size_t i) const { return volume2[i] + jump2[i]; }
    std::vector<double> indicators2() const;
    double total() const;

    /// Sum of parametric fragment lengths, one contribution per element
    /// side; every interior edge is covered exactly twice.
    double fragment_measure = 0.0;
};

/// eta(Q)^2 = h_Q^2 ||f - PU||^2_{L2(Q)} + h_Q ||[A grad U . n]||^2_{L2(dQ cap Omega)}.
EstimatorResult estimate(const HierBasis& basis, const NurbsGeometry& geom,
                         const EllipticProblem& problem, const Solution& solution,
                         const EstimateOptions& opts = {});

}  // namespace hsfem
