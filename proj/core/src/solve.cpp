#include "hsfem/solve.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace hsfem {

namespace {

Eigen::VectorXd pcg(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b, double tol,
                    std::int64_t max_iters, SolveStats* stats) {
    const Eigen::Index n = a.rows();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) return x;

    Eigen::VectorXd diag_inv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = a.coeff(i, i);
        diag_inv[i] = d != 0.0 ? 1.0 / d : 1.0;
    }

    Eigen::VectorXd r = b;
    Eigen::VectorXd z = diag_inv.cwiseProduct(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    std::int64_t it = 0;
    double rel = r.norm() / bnorm;
    while (rel > tol) {
        if (it >= max_iters)
            throw SolverError("pcg: iteration cap reached, residual " + std::to_string(rel), rel);
        const Eigen::VectorXd ap = a * p;
        const double alpha = rz / p.dot(ap);
        x += alpha * p;
        r -= alpha * ap;
        z = diag_inv.cwiseProduct(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
        ++it;
        rel = r.norm() / bnorm;
        if (stats) {
            // 0.5 x'Ax - b'x, with Ax = b - r.
            stats->energy_history.push_back(-0.5 * x.dot(b) - 0.5 * x.dot(r));
        }
    }
    if (stats) {
        stats->iterations = it;
        stats->rel_residual = rel;
    }
    return x;
}

}  // namespace

Eigen::VectorXd solve_system(const LinearSystem& system, const SolveOptions& opts,
                             SolveStats* stats) {
    const auto& a = system.matrix;
    const auto& b = system.rhs;
    if (a.rows() == 0) return Eigen::VectorXd();
    const std::int64_t cap = opts.max_iters > 0 ? opts.max_iters : 20 * a.rows() + 2000;

    const bool use_pcg = opts.kind == SolveOptions::Kind::PCG ||
                         (opts.kind == SolveOptions::Kind::Auto && system.symmetric);
    if (use_pcg) {
        if (!system.symmetric)
            throw SolverError("solve: PCG requires a symmetric system", 0.0);
        if (stats) stats->method = "pcg-jacobi";
        return pcg(a, b, opts.tol, cap, stats);
    }

    if (stats) stats->method = system.symmetric ? "ldlt" : "sparselu";
    Eigen::VectorXd x;
    const double bnorm = b.norm();
    if (system.symmetric) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> fac(a);
        if (fac.info() != Eigen::Success)
            throw SolverError("solve: LDLT factorization failed", 0.0);
        x = fac.solve(b);
        for (int refine = 0; refine < 2 && bnorm > 0.0; ++refine) {
            const Eigen::VectorXd r = b - a * x;
            if (r.norm() / bnorm <= opts.tol) break;
            x += fac.solve(r);
        }
    } else {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> fac(a);
        if (fac.info() != Eigen::Success)
            throw SolverError("solve: LU factorization failed", 0.0);
        x = fac.solve(b);
        for (int refine = 0; refine < 2 && bnorm > 0.0; ++refine) {
            const Eigen::VectorXd r = b - a * x;
            if (r.norm() / bnorm <= opts.tol) break;
            x += fac.solve(r);
        }
    }
    const double rel = bnorm > 0.0 ? (b - a * x).norm() / bnorm : 0.0;
    if (rel > opts.tol)
        throw SolverError("solve: direct residual above tolerance, " + std::to_string(rel), rel);
    if (stats) stats->rel_residual = rel;
    return x;
}

}  // namespace hsfem
