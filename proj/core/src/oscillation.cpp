#include "hsfem/oscillation.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "hsfem/detail/residual.hpp"
#include "hsfem/quadrature.hpp"

namespace hsfem {

namespace {

// Shifted Legendre values L_0..L_n at xi in [0,1] (orthogonal on [0,1]).
void legendre01(int n, double xi, double* out) {
    const double x = 2.0 * xi - 1.0;
    out[0] = 1.0;
    if (n >= 1) out[1] = x;
    for (int k = 2; k <= n; ++k) {
        out[k] = ((2.0 * k - 1.0) * x * out[k - 1] - (k - 1.0) * out[k - 2]) / k;
    }
}

// || r ||^2_w - projection onto span(phi) in the same discrete inner
// product: values (nbasis x npts), r and w per point.
double projection_remainder(const Eigen::MatrixXd& phi, const Eigen::VectorXd& r,
                            const Eigen::VectorXd& w) {
    const Eigen::MatrixXd phiw = phi * w.asDiagonal();
    const Eigen::MatrixXd gram = phiw * phi.transpose();
    const Eigen::VectorXd rhs = phiw * r;
    const double norm2 = r.dot(w.asDiagonal() * r);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success) return norm2;
    const double fitted = rhs.dot(ldlt.solve(rhs));
    return std::max(0.0, norm2 - fitted);
}

}  // namespace

double OscillationResult::total() const { return std::sqrt(total2); }

OscillationResult oscillations(const HierBasis& basis, const NurbsGeometry& geom,
                               const EllipticProblem& problem, const Solution& solution,
                               int poly_degree, int quad_boost) {
    if (poly_degree < 0) throw std::invalid_argument("oscillations: negative polynomial degree");
    const HierMesh& mesh = basis.mesh();
    const LevelSequence& levels = mesh.levels();
    const std::vector<Cell> cells = mesh.active_cells();
    const std::size_t n = cells.size();
    const int p0 = levels.degree(0), p1 = levels.degree(1);
    // Enough points for the degree-2p' Gram plus the residual data.
    const int np0 = std::max(p0 + 2, poly_degree + 1) + quad_boost;
    const int np1 = std::max(p1 + 2, poly_degree + 1) + quad_boost;
    const int npe = std::max({p0, p1, poly_degree}) + 2 + quad_boost;
    const GaussRule& rule0 = gauss_rule(np0);
    const GaussRule& rule1 = gauss_rule(np1);
    const GaussRule& rule_e = gauss_rule(npe);
    const int nb = poly_degree + 1;

    std::vector<detail::ElementSolution> views;
    views.reserve(n);
    for (const Cell& q : cells) views.emplace_back(basis, q, solution.coeffs);

    std::vector<std::int64_t> level_offset(mesh.num_levels() + 1, 0);
    for (int l = 0; l < mesh.num_levels(); ++l)
        level_offset[l + 1] = level_offset[l] + static_cast<std::int64_t>(mesh.active(l).size());
    auto ordinal_of = [&](const Cell& c) -> std::int64_t {
        const auto& lvl = mesh.active(c.level);
        const auto it = std::lower_bound(lvl.begin(), lvl.end(), c.idx);
        return level_offset[c.level] + (it - lvl.begin());
    };

    OscillationResult result;
    result.volume2.assign(n, 0.0);
    result.edge2.assign(n, 0.0);

    std::vector<double> leg0(static_cast<std::size_t>(nb)), leg1(static_cast<std::size_t>(nb));
    for (std::size_t ci = 0; ci < n; ++ci) {
        const Cell& q = cells[ci];
        const detail::ElementSolution& u = views[ci];
        const std::array<double, 2> lo{levels.breakpoint(q.level, 0, q.idx[0]).to_double(),
                                       levels.breakpoint(q.level, 1, q.idx[1]).to_double()};
        const std::array<double, 2> hi{levels.breakpoint(q.level, 0, q.idx[0] + 1).to_double(),
                                       levels.breakpoint(q.level, 1, q.idx[1] + 1).to_double()};
        const double h_q = geom.element_size(lo, hi);

        // Volume oscillation: (1 - P_Q)(f - PU).
        const int npts = np0 * np1;
        Eigen::MatrixXd phi(nb * nb, npts);
        Eigen::VectorXd r(npts), w(npts);
        int k = 0;
        for (int k1 = 0; k1 < np1; ++k1) {
            for (int k0 = 0; k0 < np0; ++k0, ++k) {
                const std::array<double, 3> t{lo[0] + (hi[0] - lo[0]) * rule0.nodes[k0],
                                              lo[1] + (hi[1] - lo[1]) * rule1.nodes[k1], 0.0};
                const GeomEval ge = geom.eval(t, 1);
                w[k] = rule0.weights[k0] * rule1.weights[k1] * (hi[0] - lo[0]) * (hi[1] - lo[1]) *
                       std::abs(ge.jac.determinant());
                r[k] = detail::strong_residual(problem, ge, u, t);
                legendre01(poly_degree, rule0.nodes[k0], leg0.data());
                legendre01(poly_degree, rule1.nodes[k1], leg1.data());
                int a = 0;
                for (int b1 = 0; b1 < nb; ++b1)
                    for (int b0 = 0; b0 < nb; ++b0, ++a) phi(a, k) = leg0[b0] * leg1[b1];
            }
        }
        result.volume2[ci] = h_q * h_q * projection_remainder(phi, r, w);

        // Edge oscillation: (1 - P_E)[A grad U . n] per interior fragment.
        double edge = 0.0;
        for (int dir = 0; dir < 2; ++dir) {
            for (int sign = -1; sign <= 1; sign += 2) {
                for (const auto& frag : detail::side_fragments(mesh, q, dir, sign)) {
                    const detail::ElementSolution& un =
                        views[static_cast<std::size_t>(ordinal_of(frag.neighbor))];
                    const int e = 1 - dir;
                    Eigen::MatrixXd phie(nb, npe);
                    Eigen::VectorXd re(npe), we(npe);
                    for (int kq = 0; kq < npe; ++kq) {
                        std::array<double, 3> t{0.0, 0.0, 0.0};
                        t[dir] = frag.line;
                        t[e] = frag.a + (frag.b - frag.a) * rule_e.nodes[kq];
                        const GeomEval ge = geom.eval(t, 0);
                        double v;
                        Eigen::Vector2d g_here, g_there;
                        Eigen::Matrix2d hdummy;
                        u.eval(t, 1, v, g_here, hdummy);
                        un.eval(t, 1, v, g_there, hdummy);
                        const Eigen::Matrix2d jin_t = ge.jac.inverse().transpose();
                        const Eigen::Vector2d diff = jin_t * (g_here - g_there);
                        Eigen::Vector2d n_ref = Eigen::Vector2d::Zero();
                        n_ref[dir] = static_cast<double>(sign);
                        Eigen::Vector2d nu = jin_t * n_ref;
                        nu.normalize();
                        re[kq] = (problem.A(ge.x) * diff).dot(nu);
                        we[kq] = ge.jac.col(e).norm() * (frag.b - frag.a) * rule_e.weights[kq];
                        legendre01(poly_degree, rule_e.nodes[kq], leg0.data());
                        for (int b0 = 0; b0 < nb; ++b0) phie(b0, kq) = leg0[b0];
                    }
                    edge += projection_remainder(phie, re, we);
                }
            }
        }
        result.edge2[ci] = h_q * edge;
    }

    result.total2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) result.total2 += result.volume2[i] + result.edge2[i];
    return result;
}

}  // namespace hsfem
