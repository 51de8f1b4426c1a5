#pragma once

#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "hsfem/tensor_space.hpp"

namespace hsfem {

/// Nested sequence of tensor spline spaces S^0 c S^1 c ... produced by
/// dyadic bisection of every element between consecutive levels. Every
/// interior knot of level >= 1 carries the uniform multiplicity m, which
/// requires the base interior multiplicities to be <= m; the resulting
/// splines are C^(p-m) across level >= 1 knot lines.
///
/// Level grids are never materialized: all per-level queries (breakpoints,
/// spans, supports, local knot windows, two-scale rows) are answered in
/// closed form, so meshes can refine to level 40+ without allocating
/// per-level arrays.
class LevelSequence {
public:
    LevelSequence(TensorSpace base, int interior_multiplicity);

    int dim() const { return base_.dim(); }
    int degree(int d) const { return base_.degree(d); }
    int mult() const { return mult_; }
    const TensorSpace& base() const { return base_; }

    // -- univariate level-grid queries ------------------------------------
    std::int64_t num_elements(int level, int d) const;
    std::int64_t num_funs(int level, int d) const;
    Dyadic breakpoint(int level, int d, std::int64_t j) const;
    int multiplicity(int level, int d, std::int64_t j) const;
    /// First basis function that is nonzero on element e.
    std::int64_t first_fun_on_element(int level, int d, std::int64_t e) const;
    /// Inclusive element range covered by supp(B^level_f).
    std::array<std::int64_t, 2> support_elements(int level, int d, std::int64_t f) const;
    double support_midpoint(int level, int d, std::int64_t f) const;
    /// One-sided evaluation of the p+1 local functions on element e; x must
    /// lie in the closure of e. `first` of the result is the global index.
    SpanBasis eval_on_element(int level, int d, std::int64_t e, double x, int order) const;
    /// Element containing x at the given level (left element at x == 1).
    std::int64_t element_of(int level, int d, double x) const;

    // -- multivariate conveniences ----------------------------------------
    Idx elements_per_dir(int level) const;
    Idx funs_per_dir(int level) const;
    /// Element box covered by supp(B^level_f).
    IndexBox support_box(int level, const Idx& f) const;
    /// Support extension of an element at its own level.
    IndexBox support_extension(int level, const Idx& element) const;
    /// Parametric bounding box of an element.
    std::array<Dyadic, 3> element_lo(int level, const Idx& e) const;
    std::array<Dyadic, 3> element_hi(int level, const Idx& e) const;

    /// Two-scale coefficients of B^level_f in the level+1 basis: targets
    /// first..first+size-1 with the given values. Cached per (level, d, f).
    struct TwoScaleRow {
        std::int64_t first = 0;
        std::vector<double> coeff;
    };
    const TwoScaleRow& two_scale_row(int level, int d, std::int64_t f) const;

    friend bool operator==(const LevelSequence& a, const LevelSequence& b) {
        return a.mult_ == b.mult_ && a.base_kvs_equal(b);
    }

private:
    bool base_kvs_equal(const LevelSequence& other) const;
    /// Local knots t_f .. t_{f+p+1} of function f (p+2 values).
    void source_knot_window(int level, int d, std::int64_t f, double* out) const;
    /// Breakpoint index of knot index k at the given level.
    std::int64_t knot_to_breakpoint(int level, int d, std::int64_t k) const;
    /// Knot index of the first copy of breakpoint j.
    std::int64_t first_knot_of_breakpoint(int level, int d, std::int64_t j) const;

    TensorSpace base_;
    int mult_;

    struct RowKey {
        int level;
        int dir;
        std::int64_t fun;
        bool operator==(const RowKey&) const = default;
    };
    struct RowKeyHash {
        std::size_t operator()(const RowKey& k) const {
            std::size_t h = std::hash<std::int64_t>()(k.fun);
            h ^= (static_cast<std::size_t>(k.level) * 0x9e3779b97f4a7c15ull) >> 3;
            h ^= static_cast<std::size_t>(k.dir) * 0xc2b2ae3d27d4eb4full;
            return h;
        }
    };
    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<RowKey, std::unique_ptr<TwoScaleRow>, RowKeyHash> row_cache_;
};

}  // namespace hsfem
