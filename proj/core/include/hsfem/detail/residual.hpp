#pragma once

#include "hsfem/assemble.hpp"

namespace hsfem::detail {

/// One maximal piece of an element side shared with exactly one active
/// neighbor: tangent interval [a, b] on the line t_dir = line.
struct Fragment {
    Cell neighbor;
    int dir = 0;    ///< normal direction
    int sign = 1;   ///< +1: neighbor at larger coordinates
    double line = 0.0;
    double a = 0.0, b = 0.0;
};

/// Fragments of the side of q facing `sign` in direction `dir`; empty on the
/// domain boundary. Levels differing between q and its neighbors induce the
/// fragment subdivision (finer side wins).
std::vector<Fragment> side_fragments(const HierMesh& mesh, const Cell& q, int dir, int sign);

/// Parametric-space evaluator of the discrete solution restricted to one
/// element (one-sided on the closure).
class ElementSolution {
public:
    ElementSolution(const HierBasis& basis, const Cell& q, const std::vector<double>& coeffs);

    const Cell& element() const { return q_; }
    /// value / parametric gradient / parametric hessian at t in closure(q)
    void eval(const std::array<double, 3>& t, int order, double& value, Eigen::Vector2d& grad,
              Eigen::Matrix2d& hess) const;

private:
    const HierBasis& basis_;
    Cell q_;
    Eigen::VectorXd local_;
    int p0_, p1_;
};

/// Physical gradient of U at t given the parametric gradient.
Eigen::Vector2d physical_gradient(const GeomEval& ge, const Eigen::Vector2d& grad_param);

/// Physical Hessian of U at t from parametric derivatives and the geometry
/// second derivatives (inverse-map chain rule).
Eigen::Matrix2d physical_hessian(const GeomEval& ge, const Eigen::Vector2d& grad_param,
                                 const Eigen::Matrix2d& hess_param);

/// Strong residual f - PU at one point; `ge` must carry second derivatives
/// (order >= 1 geometry evaluation).
double strong_residual(const EllipticProblem& problem, const GeomEval& ge,
                       const ElementSolution& u, const std::array<double, 3>& t);

}  // namespace hsfem::detail
