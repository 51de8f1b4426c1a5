#pragma once

#include "hsfem/assemble.hpp"

namespace hsfem {

/// Per-element data oscillations: the parts of the residual and of the
/// conormal jumps that mapped tensor polynomials of degree (p', p') cannot
/// see. Element order follows HierMesh::active_cells().
struct OscillationResult {
    std::vector<double> volume2;
    std::vector<double> edge2;
    double total2 = 0.0;

    double osc2(std::size_t i) const { return volume2[i] + edge2[i]; }
    double total() const;
};

OscillationResult oscillations(const HierBasis& basis, const NurbsGeometry& geom,
                               const EllipticProblem& problem, const Solution& solution,
                               int poly_degree, int quad_boost = 0);

}  // namespace hsfem
