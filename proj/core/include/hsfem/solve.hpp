#pragma once

#include "hsfem/assemble.hpp"

namespace hsfem {

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double achieved_residual)
        : std::runtime_error(what), achieved_residual(achieved_residual) {}
    double achieved_residual;
};

struct SolveOptions {
    enum class Kind { Auto, PCG, Direct };
    Kind kind = Kind::Auto;     ///< Auto: PCG when symmetric, direct otherwise
    double tol = 1e-10;         ///< relative residual target
    std::int64_t max_iters = 0; ///< 0: 20 n + 2000
};

struct SolveStats {
    std::string method;
    std::int64_t iterations = 0;
    double rel_residual = 0.0;
    /// Energy functional 0.5 x'Ax - b'x per PCG iteration; monotone
    /// decreasing for SPD systems.
    std::vector<double> energy_history;
};

/// Free-dof solution values; SolverError (with the achieved residual) when
/// the iteration cap is hit before the tolerance.
Eigen::VectorXd solve_system(const LinearSystem& system, const SolveOptions& opts = {},
                             SolveStats* stats = nullptr);

}  // namespace hsfem
