#pragma once

#include <Eigen/Sparse>

#include "hsfem/knot_vector.hpp"

namespace hsfem {

/// Raised when `fine` does not refine `coarse`.
class NestingError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Two-scale matrix M (n_fine x n_coarse) with S_coarse(c) = S_fine(M c),
/// built by composing single-knot Boehm insertions. Column i carries the
/// coefficients of coarse B-spline i in the fine basis.
Eigen::SparseMatrix<double> knot_insertion_matrix(const KnotVector& coarse,
                                                  const KnotVector& fine);

}  // namespace hsfem
