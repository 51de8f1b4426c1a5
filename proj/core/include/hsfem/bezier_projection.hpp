#pragma once

#include "hsfem/tensor_space.hpp"

namespace hsfem {

/// Element of supp(B_i) used for the local projection: per direction the
/// element whose center is closest to the support midpoint, ties broken by
/// the lowest index.
Idx projection_element(const TensorSpace& space, const Idx& i);

/// Dual functional lambda_i(f) realized as the local L2 projection onto the
/// tensor B-splines restricted to the chosen element of supp(B_i).
/// Gauss rule has p+1 points per direction, exact for the degree-2p Gram.
double bezier_projection_coefficient(const TensorSpace& space, const Idx& i,
                                     const ScalarField& f);

/// Full quasi-interpolant: coefficients lambda_i(f) for every basis
/// function, linear-index order.
std::vector<double> bezier_quasi_interpolant(const TensorSpace& space, const ScalarField& f);

}  // namespace hsfem
