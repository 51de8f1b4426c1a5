#include "hsfem/tensor_space.hpp"

#include <algorithm>
#include <stdexcept>

namespace hsfem {

TensorSpace::TensorSpace(std::vector<KnotVector> kvs) : kv_(std::move(kvs)) {
    if (kv_.empty() || kv_.size() > 3)
        throw std::invalid_argument("TensorSpace: dimension must be in {1,2,3}");
}

std::int64_t TensorSpace::dimension() const {
    std::int64_t n = 1;
    for (const auto& k : kv_) n *= k.n();
    return n;
}

Idx TensorSpace::funs_per_dir() const {
    Idx n{1, 1, 1};
    for (int d = 0; d < dim(); ++d) n[d] = kv_[d].n();
    return n;
}

Idx TensorSpace::elements_per_dir() const {
    Idx n{1, 1, 1};
    for (int d = 0; d < dim(); ++d) n[d] = kv_[d].num_elements();
    return n;
}

std::int64_t TensorSpace::num_elements() const {
    std::int64_t n = 1;
    for (const auto& k : kv_) n *= k.num_elements();
    return n;
}

std::int64_t TensorSpace::linear_index(const Idx& f) const {
    const Idx n = funs_per_dir();
    std::int64_t lin = 0;
    for (int d = dim() - 1; d >= 0; --d) lin = lin * n[d] + f[d];
    return lin;
}

Idx TensorSpace::multi_index(std::int64_t linear) const {
    const Idx n = funs_per_dir();
    Idx f{0, 0, 0};
    for (int d = 0; d < dim(); ++d) {
        f[d] = static_cast<int>(linear % n[d]);
        linear /= n[d];
    }
    return f;
}

IndexBox TensorSpace::support_extension(const Idx& element) const {
    IndexBox box;
    for (int d = 0; d < dim(); ++d) {
        const auto& k = kv_[d];
        if (element[d] < 0 || element[d] >= k.num_elements())
            throw std::invalid_argument("support_extension: element out of grid");
        const int first = k.first_fun_on_element(element[d]);
        const int last = first + k.degree();
        box.lo[d] = k.support_elements(first)[0];
        box.hi[d] = k.support_elements(last)[1];
    }
    return box;
}

IndexBox TensorSpace::support_box(const Idx& f) const {
    IndexBox box;
    for (int d = 0; d < dim(); ++d) {
        const auto r = kv_[d].support_elements(f[d]);
        box.lo[d] = r[0];
        box.hi[d] = r[1];
    }
    return box;
}

double TensorSpace::eval(const std::vector<double>& coeffs, const std::array<double, 3>& x) const {
    if (static_cast<std::int64_t>(coeffs.size()) != dimension())
        throw std::invalid_argument("TensorSpace::eval: coefficient size mismatch");
    std::array<SpanBasis, 3> basis;
    for (int d = 0; d < dim(); ++d) basis[d] = kv_[d].eval(x[d]);

    IndexBox window;
    for (int d = 0; d < dim(); ++d) {
        window.lo[d] = basis[d].first;
        window.hi[d] = basis[d].first + kv_[d].degree();
    }
    double sum = 0.0;
    window.for_each(dim(), [&](const Idx& f) {
        double b = 1.0;
        for (int d = 0; d < dim(); ++d) b *= basis[d].value[f[d] - basis[d].first];
        sum += coeffs[linear_index(f)] * b;
    });
    return sum;
}

std::array<double, 3> TensorSpace::mesh_size_ratios() const {
    std::array<double, 3> out{1.0, 1.0, 1.0};
    for (int d = 0; d < dim(); ++d) {
        const auto& k = kv_[d];
        double worst = 1.0;
        for (int e = 0; e + 1 < k.num_elements(); ++e) {
            const double h0 = (k.breakpoint(e + 1) - k.breakpoint(e)).to_double();
            const double h1 = (k.breakpoint(e + 2) - k.breakpoint(e + 1)).to_double();
            worst = std::max({worst, h0 / h1, h1 / h0});
        }
        out[d] = worst;
    }
    return out;
}

}  // namespace hsfem
