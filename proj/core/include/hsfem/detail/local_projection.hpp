#pragma once

#include <array>
#include <functional>
#include <vector>

#include "hsfem/tensor_space.hpp"

namespace hsfem::detail {

/// One direction of an element-local tensor basis: interval [a,b] and an
/// evaluator for the p+1 local function values.
struct DirElement {
    double a = 0.0;
    double b = 1.0;
    int p = 0;
    std::function<void(double x, double* values)> eval;
};

/// Coefficients of the L2(Q)-projection of f onto the local tensor basis of
/// the element Q described by `dirs`, in direction-0-fastest order. Gauss
/// quadrature with p+1 points per direction (exact for the degree-2p Gram).
/// Throws std::runtime_error on non-finite data or singular Gram.
std::vector<double> local_l2_projection(int dim, const std::array<DirElement, 3>& dirs,
                                        const ScalarField& f);

}  // namespace hsfem::detail
