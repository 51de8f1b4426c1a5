#include "hsfem/estimator.hpp"

#include <cmath>

#include "hsfem/detail/residual.hpp"
#include "hsfem/parallel.hpp"
#include "hsfem/quadrature.hpp"

namespace hsfem {

std::vector<double> EstimatorResult::indicators2() const {
    std::vector<double> out(volume2.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = volume2[i] + jump2[i];
    return out;
}

double EstimatorResult::total() const { return std::sqrt(total2); }

EstimatorResult estimate(const HierBasis& basis, const NurbsGeometry& geom,
                         const EllipticProblem& problem, const Solution& solution,
                         const EstimateOptions& opts) {
    const HierMesh& mesh = basis.mesh();
    const LevelSequence& levels = mesh.levels();
    if (mesh.dim() != 2) throw std::invalid_argument("estimate: 2D meshes only");
    if (!problem.A_constant && !problem.dA)
        throw ConfigError("estimate: non-constant A requires dA derivatives");

    const std::vector<Cell> cells = mesh.active_cells();
    const std::size_t n = cells.size();
    const int p0 = levels.degree(0), p1 = levels.degree(1);
    const int np0 = p0 + 2 + opts.quad_boost, np1 = p1 + 2 + opts.quad_boost;
    const int npe = std::max(p0, p1) + 2 + opts.quad_boost;

    EstimatorResult result;
    result.volume2.assign(n, 0.0);
    result.jump2.assign(n, 0.0);

    // Local solution views for every element, shared by both sides of the
    // jump integrals.
    std::vector<detail::ElementSolution> views;
    views.reserve(n);
    for (const Cell& q : cells) views.emplace_back(basis, q, solution.coeffs);

    // Element id lookup (active_cells order is (level, lex)).
    std::vector<std::int64_t> level_offset(mesh.num_levels() + 1, 0);
    for (int l = 0; l < mesh.num_levels(); ++l)
        level_offset[l + 1] = level_offset[l] + static_cast<std::int64_t>(mesh.active(l).size());
    auto ordinal_of = [&](const Cell& c) -> std::int64_t {
        const auto& lvl = mesh.active(c.level);
        const auto it = std::lower_bound(lvl.begin(), lvl.end(), c.idx);
        return level_offset[c.level] + (it - lvl.begin());
    };

    const std::int64_t chunk_size = 64;
    std::vector<double> frag_measure(static_cast<std::size_t>(num_chunks(
                                         static_cast<std::int64_t>(n), chunk_size)),
                                     0.0);

    for_chunks(static_cast<std::int64_t>(n), chunk_size,
               [&](std::int64_t begin, std::int64_t end, int chunk_id) {
        const GaussRule& rule_e = gauss_rule(npe);
        double fragments = 0.0;

        for (std::int64_t ci = begin; ci < end; ++ci) {
            const Cell& q = cells[static_cast<std::size_t>(ci)];
            const detail::ElementSolution& u = views[static_cast<std::size_t>(ci)];
            const std::array<double, 2> lo{levels.breakpoint(q.level, 0, q.idx[0]).to_double(),
                                           levels.breakpoint(q.level, 1, q.idx[1]).to_double()};
            const std::array<double, 2> hi{
                levels.breakpoint(q.level, 0, q.idx[0] + 1).to_double(),
                levels.breakpoint(q.level, 1, q.idx[1] + 1).to_double()};

            const double h_q = opts.parametric_h
                                   ? std::sqrt((hi[0] - lo[0]) * (hi[1] - lo[1]))
                                   : geom.element_size(lo, hi);

            // Volume term.
            const GaussRule rule0 = segmented_rule(np0, lo[0], hi[0], opts.split_lines[0]);
            const GaussRule rule1 = segmented_rule(np1, lo[1], hi[1], opts.split_lines[1]);
            double vol = 0.0;
            for (std::size_t k1 = 0; k1 < rule1.nodes.size(); ++k1) {
                for (std::size_t k0 = 0; k0 < rule0.nodes.size(); ++k0) {
                    const std::array<double, 3> t{rule0.nodes[k0], rule1.nodes[k1], 0.0};
                    const GeomEval ge = geom.eval(t, 1);
                    const double w = rule0.weights[k0] * rule1.weights[k1] * (hi[0] - lo[0]) *
                                     (hi[1] - lo[1]) * std::abs(ge.jac.determinant());
                    const double r = detail::strong_residual(problem, ge, u, t);
                    vol += w * r * r;
                }
            }
            result.volume2[static_cast<std::size_t>(ci)] = h_q * h_q * vol;

            // Jump term over the four sides.
            double jump = 0.0;
            for (int dir = 0; dir < 2; ++dir) {
                for (int sign = -1; sign <= 1; sign += 2) {
                    const auto frags = detail::side_fragments(mesh, q, dir, sign);
                    for (const auto& frag : frags) {
                        fragments += frag.b - frag.a;
                        const detail::ElementSolution& un =
                            views[static_cast<std::size_t>(ordinal_of(frag.neighbor))];
                        const int e = 1 - dir;
                        for (int k = 0; k < npe; ++k) {
                            std::array<double, 3> t{0.0, 0.0, 0.0};
                            t[dir] = frag.line;
                            t[e] = frag.a + (frag.b - frag.a) * rule_e.nodes[k];
                            const GeomEval ge = geom.eval(t, 0);

                            double v;
                            Eigen::Vector2d g_here, g_there;
                            Eigen::Matrix2d hdummy;
                            u.eval(t, 1, v, g_here, hdummy);
                            un.eval(t, 1, v, g_there, hdummy);
                            const Eigen::Matrix2d jin_t = ge.jac.inverse().transpose();
                            const Eigen::Vector2d diff = jin_t * (g_here - g_there);
                            const Eigen::Matrix2d A = problem.A(ge.x);

                            // Physical outward normal of q and arc element.
                            Eigen::Vector2d n_ref = Eigen::Vector2d::Zero();
                            n_ref[dir] = static_cast<double>(sign);
                            Eigen::Vector2d nu = jin_t * n_ref;
                            nu.normalize();
                            const double ds =
                                ge.jac.col(e).norm() * (frag.b - frag.a) * rule_e.weights[k];
                            const double jv = (A * diff).dot(nu);
                            jump += ds * jv * jv;
                        }
                    }
                }
            }
            result.jump2[static_cast<std::size_t>(ci)] = h_q * jump;
        }
        frag_measure[static_cast<std::size_t>(chunk_id)] = fragments;
    });

    for (double f : frag_measure) result.fragment_measure += f;
    result.total2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) result.total2 += result.volume2[i] + result.jump2[i];
    return result;
}

}  // namespace hsfem
