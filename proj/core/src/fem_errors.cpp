#include "hsfem/fem_errors.hpp"

#include <cmath>

#include "hsfem/parallel.hpp"
#include "hsfem/quadrature.hpp"

namespace hsfem {

ErrorNorms h1_error(const Solution& solution, const NurbsGeometry& geom,
                    const EllipticProblem& problem, int quad_boost,
                    const std::array<std::vector<double>, 2>& split_lines) {
    if (!problem.exact_u || !problem.exact_grad_u)
        throw ConfigError("h1_error: problem carries no exact solution callbacks");
    const HierBasis& basis = *solution.basis;
    const HierMesh& mesh = basis.mesh();
    const LevelSequence& levels = mesh.levels();
    const std::vector<Cell> cells = mesh.active_cells();
    const int p0 = levels.degree(0), p1 = levels.degree(1);
    const int np0 = p0 + 2 + quad_boost, np1 = p1 + 2 + quad_boost;

    const std::int64_t chunk_size = 64;
    std::vector<std::array<double, 2>> acc(static_cast<std::size_t>(
                                               num_chunks(static_cast<std::int64_t>(cells.size()),
                                                          chunk_size)),
                                           {0.0, 0.0});

    for_chunks(static_cast<std::int64_t>(cells.size()), chunk_size,
               [&](std::int64_t begin, std::int64_t end, int chunk_id) {
        double l2 = 0.0, h1 = 0.0;
        for (std::int64_t ci = begin; ci < end; ++ci) {
            const Cell& q = cells[static_cast<std::size_t>(ci)];
            const ElementExtraction ex = basis.extraction(q);
            const Eigen::VectorXd c = basis.local_coeffs(ex, solution.coeffs);
            const double lo0 = levels.breakpoint(q.level, 0, q.idx[0]).to_double();
            const double hi0 = levels.breakpoint(q.level, 0, q.idx[0] + 1).to_double();
            const double lo1 = levels.breakpoint(q.level, 1, q.idx[1]).to_double();
            const double hi1 = levels.breakpoint(q.level, 1, q.idx[1] + 1).to_double();
            const GaussRule rule0 = segmented_rule(np0, lo0, hi0, split_lines[0]);
            const GaussRule rule1 = segmented_rule(np1, lo1, hi1, split_lines[1]);
            const int mp0 = static_cast<int>(rule0.nodes.size());
            const int mp1 = static_cast<int>(rule1.nodes.size());

            // Univariate tables at the tensor Gauss nodes.
            Eigen::MatrixXd v0(p0 + 1, mp0), d0(p0 + 1, mp0), v1(p1 + 1, mp1), d1(p1 + 1, mp1);
            for (int k = 0; k < mp0; ++k) {
                const SpanBasis sb =
                    levels.eval_on_element(q.level, 0, q.idx[0], rule0.nodes[k], 1);
                for (int r = 0; r <= p0; ++r) {
                    v0(r, k) = sb.value[r];
                    d0(r, k) = sb.d1[r];
                }
            }
            for (int k = 0; k < mp1; ++k) {
                const SpanBasis sb =
                    levels.eval_on_element(q.level, 1, q.idx[1], rule1.nodes[k], 1);
                for (int r = 0; r <= p1; ++r) {
                    v1(r, k) = sb.value[r];
                    d1(r, k) = sb.d1[r];
                }
            }

            for (int k1 = 0; k1 < mp1; ++k1) {
                for (int k0 = 0; k0 < mp0; ++k0) {
                    const std::array<double, 3> t{rule0.nodes[k0], rule1.nodes[k1], 0.0};
                    const GeomEval ge = geom.eval(t, 0);
                    const double w = rule0.weights[k0] * rule1.weights[k1] * (hi0 - lo0) *
                                     (hi1 - lo1) * std::abs(ge.jac.determinant());
                    double uval = 0.0, ut0 = 0.0, ut1 = 0.0;
                    int a = 0;
                    for (int r1 = 0; r1 <= p1; ++r1) {
                        for (int r0 = 0; r0 <= p0; ++r0, ++a) {
                            uval += c[a] * v0(r0, k0) * v1(r1, k1);
                            ut0 += c[a] * d0(r0, k0) * v1(r1, k1);
                            ut1 += c[a] * v0(r0, k0) * d1(r1, k1);
                        }
                    }
                    const Eigen::Vector2d grad_u =
                        ge.jac.inverse().transpose() * Eigen::Vector2d(ut0, ut1);
                    const double eu = uval - problem.exact_u(ge.x);
                    const Eigen::Vector2d eg = grad_u - problem.exact_grad_u(ge.x);
                    l2 += w * eu * eu;
                    h1 += w * eg.squaredNorm();
                }
            }
        }
        acc[static_cast<std::size_t>(chunk_id)] = {l2, h1};
    });

    ErrorNorms norms;
    double l2 = 0.0, h1 = 0.0;
    for (const auto& a : acc) {
        l2 += a[0];
        h1 += a[1];
    }
    norms.l2 = std::sqrt(l2);
    norms.h1_semi = std::sqrt(h1);
    return norms;
}

}  // namespace hsfem
