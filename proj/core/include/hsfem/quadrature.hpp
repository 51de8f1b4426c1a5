#pragma once

#include <cstddef>
#include <vector>

namespace hsfem {

/// Gauss-Legendre rule on [0, 1]; n points integrate polynomials of degree
/// <= 2n-1 exactly.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Returns the cached n-point Gauss-Legendre rule on [0,1], 1 <= n <= 32.
const GaussRule& gauss_rule(int n);

/// Composite rule on [a, b]: the n-point Gauss rule applied on every
/// subinterval between the splits that fall strictly inside (a, b). With no
/// interior split this is the plain mapped rule. Integrands that are only
/// piecewise smooth (loads defined in pieces) keep full accuracy this way.
GaussRule segmented_rule(int n, double a, double b, const std::vector<double>& splits);

}  // namespace hsfem
