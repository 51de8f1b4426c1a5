#include "hsfem/knot_insertion.hpp"

#include <algorithm>

namespace hsfem {

namespace {

// One Boehm insertion of knot u into t (degree p): returns the (n+1) x n
// two-scale factor applied to coefficient vectors.
Eigen::SparseMatrix<double> boehm_step(const std::vector<double>& t, int p, double u) {
    const int n = static_cast<int>(t.size()) - p - 1;
    // span k with t_k <= u < t_{k+1}; u == 1 uses the last nonempty span.
    int k = p;
    for (int i = p; i + 1 < static_cast<int>(t.size()) - p; ++i) {
        if (t[i] <= u && (u < t[i + 1] || (u == t.back() && t[i] < t[i + 1]))) k = i;
    }
    Eigen::SparseMatrix<double> a(n + 1, n);
    a.reserve(Eigen::VectorXi::Constant(n, 2));
    for (int i = 0; i <= n; ++i) {
        if (i <= k - p) {
            a.insert(i, i) = 1.0;
        } else if (i >= k + 1) {
            a.insert(i, i - 1) = 1.0;
        } else {
            const double denom = t[i + p] - t[i];
            const double alpha = denom > 0.0 ? (u - t[i]) / denom : 0.0;
            if (alpha != 0.0) a.insert(i, i) = alpha;
            if (alpha != 1.0) a.insert(i, i - 1) = 1.0 - alpha;
        }
    }
    a.makeCompressed();
    return a;
}

}  // namespace

Eigen::SparseMatrix<double> knot_insertion_matrix(const KnotVector& coarse,
                                                  const KnotVector& fine) {
    if (!refines(coarse, fine)) {
        throw NestingError("knot_insertion_matrix: fine does not refine coarse");
    }
    const int p = coarse.degree();

    std::vector<double> work(coarse.knots().begin(), coarse.knots().end());
    Eigen::SparseMatrix<double> m(coarse.n(), coarse.n());
    m.setIdentity();

    // Insert the missing copies breakpoint by breakpoint.
    int jc = 0;
    for (int jf = 0; jf < fine.num_breakpoints(); ++jf) {
        int missing = fine.multiplicity(jf);
        if (jc < coarse.num_breakpoints() && coarse.breakpoint(jc) == fine.breakpoint(jf)) {
            missing -= coarse.multiplicity(jc);
            ++jc;
        }
        const double u = fine.breakpoint(jf).to_double();
        for (int r = 0; r < missing; ++r) {
            m = (boehm_step(work, p, u) * m).eval();
            work.insert(std::upper_bound(work.begin(), work.end(), u), u);
        }
    }
    m.makeCompressed();
    return m;
}

}  // namespace hsfem
