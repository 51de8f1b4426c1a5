#include "hsfem/bezier_projection.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hsfem/detail/local_projection.hpp"

namespace hsfem {

namespace {

int choose_element_1d(const KnotVector& kv, int i) {
    const auto range = kv.support_elements(i);
    const double mid = kv.support_midpoint(i);
    int best = range[0];
    double best_dist = std::numeric_limits<double>::infinity();
    for (int e = range[0]; e <= range[1]; ++e) {
        const double c = 0.5 * (kv.breakpoint(e).to_double() + kv.breakpoint(e + 1).to_double());
        const double dist = std::abs(c - mid);
        if (dist < best_dist) {
            best_dist = dist;
            best = e;
        }
    }
    return best;
}

}  // namespace

Idx projection_element(const TensorSpace& space, const Idx& i) {
    Idx e{0, 0, 0};
    for (int d = 0; d < space.dim(); ++d) e[d] = choose_element_1d(space.kv(d), i[d]);
    return e;
}

double bezier_projection_coefficient(const TensorSpace& space, const Idx& i,
                                     const ScalarField& f) {
    const int dim = space.dim();
    const Idx elem = projection_element(space, i);

    std::array<detail::DirElement, 3> dirs;
    Idx first{0, 0, 0};
    Idx nf{1, 1, 1};
    for (int d = 0; d < dim; ++d) {
        const auto& kv = space.kv(d);
        const int e = elem[d];
        first[d] = kv.first_fun_on_element(e);
        nf[d] = kv.degree() + 1;
        dirs[d].a = kv.breakpoint(e).to_double();
        dirs[d].b = kv.breakpoint(e + 1).to_double();
        dirs[d].p = kv.degree();
        dirs[d].eval = [&kv, e](double x, double* out) {
            const SpanBasis sb = kv.eval_on_element(e, x, 0);
            for (int r = 0; r <= kv.degree(); ++r) out[r] = sb.value[r];
        };
    }
    const std::vector<double> lambda = detail::local_l2_projection(dim, dirs, f);

    std::int64_t loc = 0, mul = 1;
    for (int d = 0; d < dim; ++d) {
        const int off = i[d] - first[d];
        if (off < 0 || off >= nf[d])
            throw std::logic_error("bezier_projection: chosen element outside support");
        loc += off * mul;
        mul *= nf[d];
    }
    return lambda[static_cast<std::size_t>(loc)];
}

std::vector<double> bezier_quasi_interpolant(const TensorSpace& space, const ScalarField& f) {
    std::vector<double> coeffs(static_cast<std::size_t>(space.dimension()));
    const Idx n = space.funs_per_dir();
    IndexBox all{{0, 0, 0}, {n[0] - 1, n[1] - 1, n[2] - 1}};
    all.for_each(space.dim(), [&](const Idx& i) {
        coeffs[static_cast<std::size_t>(space.linear_index(i))] =
            bezier_projection_coefficient(space, i, f);
    });
    return coeffs;
}

}  // namespace hsfem
