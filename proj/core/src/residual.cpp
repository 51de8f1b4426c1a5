#include "hsfem/detail/residual.hpp"

#include <cmath>
#include <stdexcept>

namespace hsfem::detail {

namespace {

// Neighbor-side element index in the normal direction at level l, for a side
// at breakpoint index b of level L.
std::int64_t neighbor_elem_at_level(std::int64_t b, int big_l, int sign, int l) {
    const std::int64_t nb = sign > 0 ? b : b - 1;  // neighbor element at level L
    if (l <= big_l) return nb >> (big_l - l);
    const int shift = l - big_l;
    return sign > 0 ? (nb << shift) : (((nb + 1) << shift) - 1);
}

}  // namespace

std::vector<Fragment> side_fragments(const HierMesh& mesh, const Cell& q, int dir, int sign) {
    std::vector<Fragment> out;
    const auto& levels = mesh.levels();
    const int L = q.level;
    const int e = 1 - dir;  // tangent direction
    const std::int64_t b = q.idx[dir] + (sign > 0 ? 1 : 0);
    if (sign < 0 && b == 0) return out;
    if (sign > 0 && b == levels.num_elements(L, dir)) return out;

    const double line = levels.breakpoint(L, dir, b).to_double();
    // Tangent interval of q's side at level L in breakpoint units.
    const std::int64_t t0 = q.idx[e], t1 = q.idx[e] + 1;

    struct Walk {
        Cell cell;
    };
    std::vector<Walk> stack;
    Cell start;
    start.level = 0;
    start.idx = {0, 0, 0};
    start.idx[dir] = static_cast<int>(neighbor_elem_at_level(b, L, sign, 0));
    start.idx[e] = static_cast<int>(q.idx[e] >> L);
    stack.push_back({start});

    while (!stack.empty()) {
        const Cell c = stack.back().cell;
        stack.pop_back();
        const int l = c.level;
        // Tangent overlap at the finer of the two levels.
        const int w = std::max(l, L);
        const std::int64_t qa = t0 << (w - L), qb = t1 << (w - L);
        const std::int64_t ca = static_cast<std::int64_t>(c.idx[e]) << (w - l);
        const std::int64_t cb = static_cast<std::int64_t>(c.idx[e] + 1) << (w - l);
        const std::int64_t oa = std::max(qa, ca), ob = std::min(qb, cb);
        if (oa >= ob) continue;

        if (mesh.is_active(c)) {
            Fragment frag;
            frag.neighbor = c;
            frag.dir = dir;
            frag.sign = sign;
            frag.line = line;
            frag.a = levels.breakpoint(w, e, oa).to_double();
            frag.b = levels.breakpoint(w, e, ob).to_double();
            out.push_back(frag);
        } else if (mesh.is_deactivated(c)) {
            const std::int64_t child_d = neighbor_elem_at_level(b, L, sign, l + 1);
            for (int tchild = 0; tchild < 2; ++tchild) {
                Cell ch;
                ch.level = l + 1;
                ch.idx = c.idx;
                ch.idx[dir] = static_cast<int>(child_d);
                ch.idx[e] = 2 * c.idx[e] + tchild;
                stack.push_back({ch});
            }
        } else {
            throw std::logic_error("side_fragments: walked outside the mesh hierarchy");
        }
    }
    // Deterministic order along the tangent.
    std::sort(out.begin(), out.end(), [](const Fragment& x, const Fragment& y) { return x.a < y.a; });
    return out;
}

ElementSolution::ElementSolution(const HierBasis& basis, const Cell& q,
                                 const std::vector<double>& coeffs)
    : basis_(basis), q_(q) {
    const ElementExtraction ex = basis.extraction(q);
    local_ = basis.local_coeffs(ex, coeffs);
    p0_ = basis.mesh().levels().degree(0);
    p1_ = basis.mesh().levels().degree(1);
}

void ElementSolution::eval(const std::array<double, 3>& t, int order, double& value,
                           Eigen::Vector2d& grad, Eigen::Matrix2d& hess) const {
    const auto& levels = basis_.mesh().levels();
    const SpanBasis s0 = levels.eval_on_element(q_.level, 0, q_.idx[0], t[0], order);
    const SpanBasis s1 = levels.eval_on_element(q_.level, 1, q_.idx[1], t[1], order);
    value = 0.0;
    grad.setZero();
    hess.setZero();
    int a = 0;
    for (int r1 = 0; r1 <= p1_; ++r1) {
        for (int r0 = 0; r0 <= p0_; ++r0, ++a) {
            const double c = local_[a];
            if (c == 0.0) continue;
            value += c * s0.value[r0] * s1.value[r1];
            if (order >= 1) {
                grad[0] += c * s0.d1[r0] * s1.value[r1];
                grad[1] += c * s0.value[r0] * s1.d1[r1];
            }
            if (order >= 2) {
                hess(0, 0) += c * s0.d2[r0] * s1.value[r1];
                hess(1, 1) += c * s0.value[r0] * s1.d2[r1];
                hess(0, 1) += c * s0.d1[r0] * s1.d1[r1];
            }
        }
    }
    hess(1, 0) = hess(0, 1);
}

Eigen::Vector2d physical_gradient(const GeomEval& ge, const Eigen::Vector2d& grad_param) {
    return ge.jac.inverse().transpose() * grad_param;
}

Eigen::Matrix2d physical_hessian(const GeomEval& ge, const Eigen::Vector2d& grad_param,
                                 const Eigen::Matrix2d& hess_param) {
    const Eigen::Matrix2d jin = ge.jac.inverse();
    Eigen::Matrix2d h = jin.transpose() * hess_param * jin;
    const Eigen::Vector2d gx = jin.transpose() * grad_param;
    for (int r = 0; r < 2; ++r) {
        h.noalias() -= gx[r] * (jin.transpose() * ge.hess[r] * jin);
    }
    return h;
}

double strong_residual(const EllipticProblem& problem, const GeomEval& ge,
                       const ElementSolution& u, const std::array<double, 3>& t) {
    double value;
    Eigen::Vector2d gp;
    Eigen::Matrix2d hp;
    u.eval(t, 2, value, gp, hp);
    const Eigen::Vector2d gx = physical_gradient(ge, gp);
    const Eigen::Matrix2d hx = physical_hessian(ge, gp, hp);

    const Eigen::Matrix2d A = problem.A(ge.x);
    double div_a_grad = (A.array() * hx.array()).sum();
    if (!problem.A_constant) {
        if (!problem.dA)
            throw ConfigError("estimator: non-constant A requires dA derivatives");
        const auto dA = problem.dA(ge.x);
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) div_a_grad += dA[i](i, j) * gx[j];
        }
    }
    double pu = -div_a_grad;
    if (problem.b) pu += problem.b(ge.x).dot(gx);
    if (problem.c) pu += problem.c(ge.x) * value;
    return problem.f(ge.x) - pu;
}

}  // namespace hsfem::detail
