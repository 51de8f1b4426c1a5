#pragma once

#include <Eigen/Sparse>

#include <memory>

#include "hsfem/elliptic_problem.hpp"
#include "hsfem/geometry.hpp"
#include "hsfem/hier_basis.hpp"

namespace hsfem {

/// Map from basis ordinals to equation indices; functions with nonzero
/// boundary trace carry -1.
struct DofMap {
    std::vector<std::int64_t> fun_to_eq;
    std::vector<std::int64_t> free_funs;  // equation index -> basis ordinal
    std::int64_t num_free() const { return static_cast<std::int64_t>(free_funs.size()); }
};

/// Free dofs of the homogeneous Dirichlet space: drop the (T)HB functions
/// whose mother has nonzero boundary trace (first/last univariate index at
/// their level).
DofMap free_dofs(const HierBasis& basis);

struct LinearSystem {
    Eigen::SparseMatrix<double> matrix;  // over free dofs
    Eigen::VectorXd rhs;
    DofMap dofs;
    bool symmetric = true;               // b == 0
    std::vector<std::string> warnings;   // sampled coefficient checks
};

struct AssembleOptions {
    int quad_boost = 0;   ///< extra Gauss points per direction (default p+2)
    bool check_coefficients = true;  ///< sample ellipticity at quadrature points
    /// Known lines (per direction) across which the problem data is only
    /// piecewise smooth; element quadrature is split there.
    std::array<std::vector<double>, 2> split_lines;
};

/// Galerkin matrix/load over the free (T)HB functions; elementwise Gauss
/// quadrature with (p+2)^2 points per active element.
LinearSystem assemble(const HierBasis& basis, const NurbsGeometry& geom,
                      const EllipticProblem& problem, const AssembleOptions& opts = {});

/// Coordinate text dump "row col value" (one entry per line) for external
/// verification of the assembled matrix.
std::string dump_matrix(const Eigen::SparseMatrix<double>& m);

/// Discrete solution: coefficients over the full basis with boundary
/// functions pinned to exactly zero.
struct Solution {
    std::shared_ptr<const HierBasis> basis;
    std::vector<double> coeffs;
};

Solution expand_solution(std::shared_ptr<const HierBasis> basis, const DofMap& dofs,
                         const Eigen::VectorXd& free_values);

}  // namespace hsfem
