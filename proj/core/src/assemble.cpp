#include "hsfem/assemble.hpp"

#include <cmath>
#include <sstream>

#include "hsfem/parallel.hpp"
#include "hsfem/quadrature.hpp"

namespace hsfem {

DofMap free_dofs(const HierBasis& basis) {
    DofMap map;
    map.fun_to_eq.assign(static_cast<std::size_t>(basis.size()), -1);
    for (std::size_t i = 0; i < basis.functions().size(); ++i) {
        if (basis.vanishes_on_boundary(basis.functions()[i])) {
            map.fun_to_eq[i] = static_cast<std::int64_t>(map.free_funs.size());
            map.free_funs.push_back(static_cast<std::int64_t>(i));
        }
    }
    return map;
}

namespace {

struct ElementQuadrature {
    // Per-direction absolute nodes/weights (weights carry the interval
    // measure) plus univariate basis values/derivatives at the nodes.
    std::array<std::vector<double>, 2> nodes, weights;
    std::array<double, 2> lo{}, hi{};
    std::array<Eigen::MatrixXd, 2> vals, ders;
    int npts(int d) const { return static_cast<int>(nodes[d].size()); }
};

ElementQuadrature element_quadrature(const LevelSequence& levels, const Cell& q, int npts0,
                                     int npts1,
                                     const std::array<std::vector<double>, 2>& splits) {
    ElementQuadrature eq;
    const int np[2] = {npts0, npts1};
    for (int d = 0; d < 2; ++d) {
        eq.lo[d] = levels.breakpoint(q.level, d, q.idx[d]).to_double();
        eq.hi[d] = levels.breakpoint(q.level, d, q.idx[d] + 1).to_double();
        const GaussRule rule = segmented_rule(np[d], eq.lo[d], eq.hi[d], splits[d]);
        const auto npts = static_cast<int>(rule.nodes.size());
        eq.nodes[d] = rule.nodes;
        eq.weights[d].resize(rule.weights.size());
        for (std::size_t k = 0; k < rule.weights.size(); ++k)
            eq.weights[d][k] = rule.weights[k] * (eq.hi[d] - eq.lo[d]);
        const int p = levels.degree(d);
        eq.vals[d].resize(p + 1, npts);
        eq.ders[d].resize(p + 1, npts);
        for (int k = 0; k < npts; ++k) {
            const SpanBasis sb = levels.eval_on_element(q.level, d, q.idx[d], rule.nodes[k], 1);
            for (int r = 0; r <= p; ++r) {
                eq.vals[d](r, k) = sb.value[r];
                eq.ders[d](r, k) = sb.d1[r];
            }
        }
    }
    return eq;
}

}  // namespace

LinearSystem assemble(const HierBasis& basis, const NurbsGeometry& geom,
                      const EllipticProblem& problem, const AssembleOptions& opts) {
    if (basis.mesh().dim() != 2)
        throw std::invalid_argument("assemble: 2D meshes only");
    if (!problem.A || !problem.f) throw ConfigError("assemble: problem needs A and f");

    const HierMesh& mesh = basis.mesh();
    const LevelSequence& levels = mesh.levels();
    const std::vector<Cell> cells = mesh.active_cells();
    const int p0 = levels.degree(0), p1 = levels.degree(1);
    const int np0 = p0 + 2 + opts.quad_boost, np1 = p1 + 2 + opts.quad_boost;
    const int nloc = (p0 + 1) * (p1 + 1);

    LinearSystem sys;
    sys.dofs = free_dofs(basis);
    sys.symmetric = !problem.has_advection();
    const std::int64_t nfree = sys.dofs.num_free();
    sys.rhs = Eigen::VectorXd::Zero(nfree);

    // Pass A: per-element free-equation lists and the global sparsity
    // pattern. Couplings exist only between functions sharing an element,
    // so each matrix row is the union of the equation lists of the
    // elements its function touches.
    std::vector<std::vector<std::int32_t>> elem_eqs(cells.size());
    {
        std::vector<std::vector<std::int32_t>> fun_elems(static_cast<std::size_t>(nfree));
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            const ElementExtraction ex = basis.extraction(cells[ci]);
            auto& eqs = elem_eqs[ci];
            eqs.reserve(ex.global.size());
            for (const std::int32_t g : ex.global) {
                const std::int64_t eq = sys.dofs.fun_to_eq[static_cast<std::size_t>(g)];
                if (eq >= 0) {
                    eqs.push_back(static_cast<std::int32_t>(eq));
                    fun_elems[static_cast<std::size_t>(eq)].push_back(
                        static_cast<std::int32_t>(ci));
                }
            }
        }
        std::vector<Eigen::Triplet<double>> pattern;
        std::vector<std::int32_t> cols;
        for (std::int64_t row = 0; row < nfree; ++row) {
            cols.clear();
            for (const std::int32_t e : fun_elems[static_cast<std::size_t>(row)]) {
                const auto& eqs = elem_eqs[static_cast<std::size_t>(e)];
                cols.insert(cols.end(), eqs.begin(), eqs.end());
            }
            std::sort(cols.begin(), cols.end());
            cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
            for (const std::int32_t col : cols)
                pattern.emplace_back(static_cast<int>(row), static_cast<int>(col), 0.0);
        }
        sys.matrix.resize(nfree, nfree);
        sys.matrix.setFromTriplets(pattern.begin(), pattern.end());
        sys.matrix.makeCompressed();
    }

    // Pass B: element quadrature in deterministic streamed chunks,
    // scatter-added into the preallocated pattern.
    struct ElementBlock {
        std::int32_t element;
        Eigen::MatrixXd ke;
        Eigen::VectorXd fe;
    };
    struct ChunkOut {
        std::vector<ElementBlock> blocks;
        double min_eig = std::numeric_limits<double>::infinity();
        double min_ell = std::numeric_limits<double>::infinity();  // -0.5 div b + c
    };
    double min_eig = std::numeric_limits<double>::infinity();
    double min_ell = std::numeric_limits<double>::infinity();
    const std::int64_t chunk_size = 64;

    auto produce = [&](std::int64_t begin, std::int64_t end, int) {
        ChunkOut out;
        out.blocks.reserve(static_cast<std::size_t>(end - begin));
        Eigen::MatrixXd kloc(nloc, nloc), phi(nloc, 3);  // phi: value, gx, gy
        Eigen::VectorXd floc(nloc);
        for (std::int64_t ci = begin; ci < end; ++ci) {
            const Cell& q = cells[static_cast<std::size_t>(ci)];
            const ElementExtraction ex = basis.extraction(q);
            const ElementQuadrature eq =
                element_quadrature(levels, q, np0, np1, opts.split_lines);
            kloc.setZero();
            floc.setZero();

            for (int q1 = 0; q1 < eq.npts(1); ++q1) {
                for (int q0 = 0; q0 < eq.npts(0); ++q0) {
                    const std::array<double, 3> t{eq.nodes[0][static_cast<std::size_t>(q0)],
                                                  eq.nodes[1][static_cast<std::size_t>(q1)],
                                                  0.0};
                    const GeomEval ge = geom.eval(t, 0);
                    const double det = ge.jac.determinant();
                    if (!(std::abs(det) > 0.0))
                        throw GeometryError("assemble: singular geometry Jacobian");
                    const Eigen::Matrix2d jinv_t = ge.jac.inverse().transpose();
                    const double w = eq.weights[0][static_cast<std::size_t>(q0)] *
                                     eq.weights[1][static_cast<std::size_t>(q1)] * std::abs(det);

                    // Local basis values and physical gradients.
                    int a = 0;
                    for (int r1 = 0; r1 <= p1; ++r1) {
                        for (int r0 = 0; r0 <= p0; ++r0, ++a) {
                            const double v = eq.vals[0](r0, q0) * eq.vals[1](r1, q1);
                            const Eigen::Vector2d gref(eq.ders[0](r0, q0) * eq.vals[1](r1, q1),
                                                       eq.vals[0](r0, q0) * eq.ders[1](r1, q1));
                            const Eigen::Vector2d g = jinv_t * gref;
                            phi(a, 0) = v;
                            phi(a, 1) = g[0];
                            phi(a, 2) = g[1];
                        }
                    }

                    const Eigen::Matrix2d A = problem.A(ge.x);
                    const double fval = problem.f(ge.x);
                    const Eigen::Vector2d bval =
                        problem.b ? problem.b(ge.x) : Eigen::Vector2d::Zero().eval();
                    const double cval = problem.c ? problem.c(ge.x) : 0.0;

                    if (opts.check_coefficients && q0 == 0 && q1 == 0) {
                        const double tr = A.trace(), dt = A.determinant();
                        const double lam_min = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4 * dt)));
                        out.min_eig = std::min(out.min_eig, lam_min);
                        if (problem.b) {
                            const double h = 1e-6;
                            const auto bx = [&](const Eigen::Vector2d& y) { return problem.b(y); };
                            const double divb =
                                (bx(ge.x + Eigen::Vector2d(h, 0))[0] -
                                 bx(ge.x - Eigen::Vector2d(h, 0))[0] +
                                 bx(ge.x + Eigen::Vector2d(0, h))[1] -
                                 bx(ge.x - Eigen::Vector2d(0, h))[1]) /
                                (2 * h);
                            out.min_ell = std::min(out.min_ell, -0.5 * divb + cval);
                        }
                    }

                    for (int col = 0; col < nloc; ++col) {
                        const Eigen::Vector2d Ag(A(0, 0) * phi(col, 1) + A(0, 1) * phi(col, 2),
                                                 A(1, 0) * phi(col, 1) + A(1, 1) * phi(col, 2));
                        const double badv = bval[0] * phi(col, 1) + bval[1] * phi(col, 2);
                        for (int row = 0; row < nloc; ++row) {
                            kloc(row, col) += w * (Ag[0] * phi(row, 1) + Ag[1] * phi(row, 2) +
                                                   (badv + cval * phi(col, 0)) * phi(row, 0));
                        }
                        floc(col) += w * fval * phi(col, 0);
                    }
                }
            }

            // E^T K E over the element's active functions; kept in free
            // rows/cols only (boundary functions dropped here).
            const Eigen::MatrixXd ke_full = ex.coeffs.transpose() * kloc * ex.coeffs;
            const Eigen::VectorXd fe_full = ex.coeffs.transpose() * floc;
            const auto ncols = static_cast<int>(ex.global.size());
            std::vector<int> keep;
            keep.reserve(static_cast<std::size_t>(ncols));
            for (int j = 0; j < ncols; ++j) {
                if (sys.dofs.fun_to_eq[static_cast<std::size_t>(ex.global[j])] >= 0)
                    keep.push_back(j);
            }
            ElementBlock block;
            block.element = static_cast<std::int32_t>(ci);
            const auto nk = static_cast<Eigen::Index>(keep.size());
            block.ke.resize(nk, nk);
            block.fe.resize(nk);
            for (Eigen::Index j = 0; j < nk; ++j) {
                block.fe[j] = fe_full[keep[static_cast<std::size_t>(j)]];
                for (Eigen::Index i = 0; i < nk; ++i) {
                    block.ke(i, j) = ke_full(keep[static_cast<std::size_t>(i)],
                                             keep[static_cast<std::size_t>(j)]);
                }
            }
            out.blocks.push_back(std::move(block));
        }
        return out;
    };

    auto merge = [&](ChunkOut&& out, int) {
        for (const ElementBlock& block : out.blocks) {
            const auto& eqs = elem_eqs[static_cast<std::size_t>(block.element)];
            const auto nk = static_cast<Eigen::Index>(eqs.size());
            for (Eigen::Index j = 0; j < nk; ++j) {
                const int eq_j = eqs[static_cast<std::size_t>(j)];
                sys.rhs[eq_j] += block.fe[j];
                for (Eigen::Index i = 0; i < nk; ++i) {
                    sys.matrix.coeffRef(eqs[static_cast<std::size_t>(i)], eq_j) +=
                        block.ke(i, j);
                }
            }
        }
        min_eig = std::min(min_eig, out.min_eig);
        min_ell = std::min(min_ell, out.min_ell);
    };
    for_chunks_ordered<ChunkOut>(static_cast<std::int64_t>(cells.size()), chunk_size, produce,
                                 merge);

    if (opts.check_coefficients) {
        if (min_eig <= 0.0 && std::isfinite(min_eig)) {
            sys.warnings.push_back("sampled smallest eigenvalue of A is not positive: " +
                                   std::to_string(min_eig));
        }
        if (problem.has_advection() && min_ell < 0.0 && std::isfinite(min_ell)) {
            sys.warnings.push_back("sampled -0.5 div b + c is negative: " +
                                   std::to_string(min_ell) + "; ellipticity not guaranteed");
        }
    }
    return sys;
}

std::string dump_matrix(const Eigen::SparseMatrix<double>& m) {
    std::ostringstream os;
    os.precision(17);
    for (int k = 0; k < m.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
            os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
        }
    }
    return os.str();
}

Solution expand_solution(std::shared_ptr<const HierBasis> basis, const DofMap& dofs,
                         const Eigen::VectorXd& free_values) {
    Solution sol;
    sol.coeffs.assign(static_cast<std::size_t>(basis->size()), 0.0);
    for (std::size_t eq = 0; eq < dofs.free_funs.size(); ++eq) {
        sol.coeffs[static_cast<std::size_t>(dofs.free_funs[eq])] =
            free_values[static_cast<Eigen::Index>(eq)];
    }
    sol.basis = std::move(basis);
    return sol;
}

}  // namespace hsfem
