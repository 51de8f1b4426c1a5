#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "hsfem/knot_vector.hpp"

namespace hsfem {

/// Multi-index with runtime dimension d <= 3; entries beyond d are 0.
using Idx = std::array<int, 3>;

inline Idx make_idx(int i0, int i1 = 0, int i2 = 0) { return {i0, i1, i2}; }

/// Axis-aligned box of integer indices, inclusive on both ends.
struct IndexBox {
    Idx lo{}, hi{};

    bool contains(int dim, const Idx& q) const {
        for (int d = 0; d < dim; ++d)
            if (q[d] < lo[d] || q[d] > hi[d]) return false;
        return true;
    }
    std::int64_t count(int dim) const {
        std::int64_t c = 1;
        for (int d = 0; d < dim; ++d) c *= (hi[d] - lo[d] + 1);
        return c;
    }
    /// Visits all indices in the box, direction 0 fastest.
    template <class F>
    void for_each(int dim, F&& f) const {
        Idx q = lo;
        for (;;) {
            f(q);
            int d = 0;
            while (d < dim) {
                if (++q[d] <= hi[d]) break;
                q[d] = lo[d];
                ++d;
            }
            if (d == dim) return;
        }
    }
};

/// Scalar field on the parametric domain.
using ScalarField = std::function<double(const std::array<double, 3>&)>;

/// Tensor-product B-spline space on (0,1)^d, d in {1,2,3}.
class TensorSpace {
public:
    explicit TensorSpace(std::vector<KnotVector> kvs);

    int dim() const { return static_cast<int>(kv_.size()); }
    const KnotVector& kv(int d) const { return kv_[d]; }
    int degree(int d) const { return kv_[d].degree(); }

    std::int64_t dimension() const;
    Idx funs_per_dir() const;
    Idx elements_per_dir() const;
    std::int64_t num_elements() const;

    std::int64_t linear_index(const Idx& f) const;
    Idx multi_index(std::int64_t linear) const;

    /// Union of supports of the basis functions not vanishing on `element`,
    /// as an inclusive element-index box (clamped at the domain boundary by
    /// the open knots).
    IndexBox support_extension(const Idx& element) const;

    /// Element-index box covered by supp(B_f).
    IndexBox support_box(const Idx& f) const;

    /// Value of the spline with the given coefficient vector at `x`.
    double eval(const std::vector<double>& coeffs, const std::array<double, 3>& x) const;

    /// Largest ratio of adjacent element sizes per direction; the local
    /// quasi-uniformity constants are observed, never enforced.
    std::array<double, 3> mesh_size_ratios() const;

private:
    std::vector<KnotVector> kv_;
};

}  // namespace hsfem
