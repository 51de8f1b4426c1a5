#pragma once

#include <functional>

#include "hsfem/estimator.hpp"
#include "hsfem/fem_errors.hpp"
#include "hsfem/marking.hpp"
#include "hsfem/solve.hpp"

namespace hsfem {

/// One iteration of the solve -> estimate -> mark -> refine loop.
struct AdaptRecord {
    int iter = 0;
    std::int64_t n_elements = 0;
    std::int64_t n_dofs = 0;
    double eta = 0.0;
    double err_h1 = std::numeric_limits<double>::quiet_NaN();
    double err_l2 = std::numeric_limits<double>::quiet_NaN();
    std::int64_t n_marked = 0;
    int max_level = 0;
    double wall_ms = 0.0;
};

struct AdaptiveConfig {
    std::shared_ptr<const LevelSequence> levels;
    NurbsGeometry geometry = NurbsGeometry::identity_square();
    EllipticProblem problem;

    BasisFlavor flavor = BasisFlavor::THB;
    Admissibility kind = Admissibility::T;
    int mu = 2;
    MarkParams mark{0.25, 1.0};

    // Stop rules; the loop halts at the first satisfied one.
    int max_iterations = 50;
    std::int64_t max_dofs = 0;   ///< 0: no dof cap
    double eta_tol = 0.0;        ///< 0: no estimator tolerance stop

    SolveOptions solver;
    int quad_boost = 0;
    /// Lines of reduced data smoothness, forwarded to every volume
    /// quadrature (assembly, estimator, error norms).
    std::array<std::vector<double>, 2> split_lines;
    bool measure_wall_time = true;

    /// Called after each record is appended (CSV/SVG hooks); the mesh passed
    /// is the one the record describes.
    std::function<void(const AdaptRecord&, const HierMesh&)> on_iteration;
};

struct AdaptiveResult {
    std::vector<AdaptRecord> records;
    std::shared_ptr<const HierMesh> mesh;
    Solution solution;
    /// (#Q_k - #Q_0) / sum #M_j after the last refinement, the closure
    /// monitor of the run.
    double closure_ratio = 0.0;
};

AdaptiveResult adaptive_loop(const AdaptiveConfig& config);

}  // namespace hsfem
