#include "hsfem/elliptic_problem.hpp"

namespace hsfem {

EllipticProblem EllipticProblem::poisson(ScalarFn f, ScalarFn exact, VectorFn exact_grad) {
    EllipticProblem p;
    p.A = [](const Eigen::Vector2d&) { return Eigen::Matrix2d::Identity().eval(); };
    p.A_constant = true;
    p.f = std::move(f);
    p.exact_u = std::move(exact);
    p.exact_grad_u = std::move(exact_grad);
    return p;
}

}  // namespace hsfem
