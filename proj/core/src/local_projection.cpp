#include "hsfem/detail/local_projection.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "hsfem/quadrature.hpp"

namespace hsfem::detail {

std::vector<double> local_l2_projection(int dim, const std::array<DirElement, 3>& dirs,
                                        const ScalarField& f) {
    std::array<Eigen::MatrixXd, 3> vals;
    std::array<Eigen::LLT<Eigen::MatrixXd>, 3> gram;
    std::array<const GaussRule*, 3> rules{};
    Idx nf{1, 1, 1};
    for (int d = 0; d < dim; ++d) {
        const auto& dir = dirs[d];
        const int p = dir.p;
        nf[d] = p + 1;
        rules[d] = &gauss_rule(p + 1);
        vals[d].resize(p + 1, p + 1);
        std::array<double, kMaxDegree + 1> buf{};
        for (int q = 0; q <= p; ++q) {
            dir.eval(dir.a + (dir.b - dir.a) * rules[d]->nodes[q], buf.data());
            for (int r = 0; r <= p; ++r) vals[d](r, q) = buf[r];
        }
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p + 1, p + 1);
        for (int q = 0; q <= p; ++q) {
            const double w = rules[d]->weights[q] * (dir.b - dir.a);
            g.noalias() += w * vals[d].col(q) * vals[d].col(q).transpose();
        }
        gram[d].compute(g);
        if (gram[d].info() != Eigen::Success)
            throw std::runtime_error("local_l2_projection: singular Gram in direction " +
                                     std::to_string(d));
    }

    std::int64_t nlocal = 1;
    for (int d = 0; d < dim; ++d) nlocal *= nf[d];
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nlocal);

    IndexBox qbox{{0, 0, 0}, {nf[0] - 1, nf[1] - 1, nf[2] - 1}};
    qbox.for_each(dim, [&](const Idx& q) {
        std::array<double, 3> x{0.0, 0.0, 0.0};
        double w = 1.0;
        for (int d = 0; d < dim; ++d) {
            x[d] = dirs[d].a + (dirs[d].b - dirs[d].a) * rules[d]->nodes[q[d]];
            w *= rules[d]->weights[q[d]] * (dirs[d].b - dirs[d].a);
        }
        const double fx = f(x);
        if (!std::isfinite(fx))
            throw std::runtime_error("local_l2_projection: non-finite field value at (" +
                                     std::to_string(x[0]) + "," + std::to_string(x[1]) + "," +
                                     std::to_string(x[2]) + ")");
        std::int64_t loc = 0;
        IndexBox fbox{{0, 0, 0}, {nf[0] - 1, nf[1] - 1, nf[2] - 1}};
        fbox.for_each(dim, [&](const Idx& r) {
            double b = w * fx;
            for (int d = 0; d < dim; ++d) b *= vals[d](r[d], q[d]);
            rhs[loc++] += b;
        });
    });

    // Directionwise solve with the Kronecker-factored Gram.
    for (int d = 0; d < dim; ++d) {
        std::int64_t stride = 1;
        for (int dd = 0; dd < d; ++dd) stride *= nf[dd];
        const std::int64_t nd = nf[d];
        const std::int64_t outer = nlocal / (stride * nd);
        Eigen::VectorXd slice(nd);
        for (std::int64_t o = 0; o < outer; ++o) {
            for (std::int64_t s = 0; s < stride; ++s) {
                for (std::int64_t k = 0; k < nd; ++k)
                    slice[k] = rhs[o * stride * nd + k * stride + s];
                slice = gram[d].solve(slice);
                for (std::int64_t k = 0; k < nd; ++k)
                    rhs[o * stride * nd + k * stride + s] = slice[k];
            }
        }
    }
    return {rhs.data(), rhs.data() + nlocal};
}

}  // namespace hsfem::detail
