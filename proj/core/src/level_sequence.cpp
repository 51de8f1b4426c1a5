#include "hsfem/level_sequence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hsfem {

LevelSequence::LevelSequence(TensorSpace base, int interior_multiplicity)
    : base_(std::move(base)), mult_(interior_multiplicity) {
    int min_p = kMaxDegree;
    for (int d = 0; d < base_.dim(); ++d) min_p = std::min(min_p, base_.degree(d));
    if (mult_ < 1 || mult_ > min_p)
        throw std::invalid_argument("LevelSequence: multiplicity must be in [1, min degree]");
    for (int d = 0; d < base_.dim(); ++d) {
        const auto& kv = base_.kv(d);
        for (int j = 1; j + 1 < kv.num_breakpoints(); ++j) {
            if (kv.multiplicity(j) > mult_)
                throw std::invalid_argument(
                    "LevelSequence: base interior multiplicity exceeds the level multiplicity, "
                    "levels would not be nested");
        }
    }
}

bool LevelSequence::base_kvs_equal(const LevelSequence& other) const {
    if (base_.dim() != other.base_.dim()) return false;
    for (int d = 0; d < base_.dim(); ++d) {
        if (!(base_.kv(d) == other.base_.kv(d))) return false;
    }
    return true;
}

std::int64_t LevelSequence::num_elements(int level, int d) const {
    return static_cast<std::int64_t>(base_.kv(d).num_elements()) << level;
}

std::int64_t LevelSequence::num_funs(int level, int d) const {
    if (level == 0) return base_.kv(d).n();
    const int p = base_.degree(d);
    return (p + 1) + (num_elements(level, d) - 1) * mult_;
}

Dyadic LevelSequence::breakpoint(int level, int d, std::int64_t j) const {
    const auto& kv = base_.kv(d);
    if (level == 0) return kv.breakpoint(static_cast<int>(j));
    const std::int64_t k = j >> level;
    const std::int64_t r = j - (k << level);
    if (r == 0) return kv.breakpoint(static_cast<int>(k));
    return subdivide(kv.breakpoint(static_cast<int>(k)), kv.breakpoint(static_cast<int>(k) + 1),
                     r, static_cast<std::uint32_t>(level));
}

int LevelSequence::multiplicity(int level, int d, std::int64_t j) const {
    const int p = base_.degree(d);
    if (j == 0 || j == num_elements(level, d)) return p + 1;
    if (level == 0) return base_.kv(d).multiplicity(static_cast<int>(j));
    return mult_;
}

std::int64_t LevelSequence::first_knot_of_breakpoint(int level, int d, std::int64_t j) const {
    if (j == 0) return 0;
    const int p = base_.degree(d);
    if (level == 0) return base_.kv(d).span_of_element(static_cast<int>(j) - 1) + 1;
    return (p + 1) + (j - 1) * mult_;
}

std::int64_t LevelSequence::knot_to_breakpoint(int level, int d, std::int64_t k) const {
    const int p = base_.degree(d);
    const std::int64_t nel = num_elements(level, d);
    if (level >= 1) {
        if (k <= p) return 0;
        const std::int64_t j = (k - (p + 1)) / mult_ + 1;
        return std::min(j, nel);
    }
    // Level 0: scan the (small) base breakpoint list.
    const auto& kv = base_.kv(d);
    std::int64_t idx = 0;
    for (int j = 0; j < kv.num_breakpoints(); ++j) {
        idx += kv.multiplicity(j);
        if (k < idx) return j;
    }
    return kv.num_breakpoints() - 1;
}

std::int64_t LevelSequence::first_fun_on_element(int level, int d, std::int64_t e) const {
    if (level == 0) return base_.kv(d).first_fun_on_element(static_cast<int>(e));
    const int p = base_.degree(d);
    // span(e) = first_knot(e+1) - 1; first function = span - p.
    return first_knot_of_breakpoint(level, d, e + 1) - 1 - p;
}

std::array<std::int64_t, 2> LevelSequence::support_elements(int level, int d, std::int64_t f) const {
    const int p = base_.degree(d);
    const std::int64_t lo = knot_to_breakpoint(level, d, f);
    const std::int64_t hi = knot_to_breakpoint(level, d, f + p + 1);
    return {lo, hi - 1};
}

void LevelSequence::source_knot_window(int level, int d, std::int64_t f, double* out) const {
    const int p = base_.degree(d);
    for (int k = 0; k <= p + 1; ++k) {
        out[k] = breakpoint(level, d, knot_to_breakpoint(level, d, f + k)).to_double();
    }
}

double LevelSequence::support_midpoint(int level, int d, std::int64_t f) const {
    const int p = base_.degree(d);
    const double a = breakpoint(level, d, knot_to_breakpoint(level, d, f)).to_double();
    const double b = breakpoint(level, d, knot_to_breakpoint(level, d, f + p + 1)).to_double();
    return 0.5 * (a + b);
}

SpanBasis LevelSequence::eval_on_element(int level, int d, std::int64_t e, double x,
                                         int order) const {
    if (order > 2) throw std::invalid_argument("LevelSequence: derivative order > 2 unsupported");
    const int p = base_.degree(d);
    const std::int64_t first = first_fun_on_element(level, d, e);
    // Window knots t_first .. t_{first+2p+1}; the span inside the window is
    // at local index p (element e starts at knot first+p).
    double knots[2 * (kMaxDegree + 1)];
    for (int k = 0; k <= 2 * p + 1; ++k) {
        knots[k] = breakpoint(level, d, knot_to_breakpoint(level, d, first + k)).to_double();
    }
    SpanBasis out;
    eval_span_basis(knots, p, p, x, order, out);
    out.first = static_cast<int>(first);
    return out;
}

std::int64_t LevelSequence::element_of(int level, int d, double x) const {
    const auto& kv = base_.kv(d);
    const int e0 = kv.element_of(x);
    if (level == 0) return e0;
    const double a = kv.breakpoint(e0).to_double();
    const double b = kv.breakpoint(e0 + 1).to_double();
    const double scale = static_cast<double>(std::int64_t(1) << level);
    auto r = static_cast<std::int64_t>(std::floor((x - a) / (b - a) * scale));
    r = std::clamp<std::int64_t>(r, 0, (std::int64_t(1) << level) - 1);
    return (static_cast<std::int64_t>(e0) << level) + r;
}

Idx LevelSequence::elements_per_dir(int level) const {
    Idx n{1, 1, 1};
    for (int d = 0; d < dim(); ++d) n[d] = static_cast<int>(num_elements(level, d));
    return n;
}

Idx LevelSequence::funs_per_dir(int level) const {
    Idx n{1, 1, 1};
    for (int d = 0; d < dim(); ++d) n[d] = static_cast<int>(num_funs(level, d));
    return n;
}

IndexBox LevelSequence::support_box(int level, const Idx& f) const {
    IndexBox box;
    for (int d = 0; d < dim(); ++d) {
        const auto r = support_elements(level, d, f[d]);
        box.lo[d] = static_cast<int>(r[0]);
        box.hi[d] = static_cast<int>(r[1]);
    }
    return box;
}

IndexBox LevelSequence::support_extension(int level, const Idx& element) const {
    IndexBox box;
    for (int d = 0; d < dim(); ++d) {
        const int p = base_.degree(d);
        const std::int64_t first = first_fun_on_element(level, d, element[d]);
        box.lo[d] = static_cast<int>(support_elements(level, d, first)[0]);
        box.hi[d] = static_cast<int>(support_elements(level, d, first + p)[1]);
    }
    return box;
}

std::array<Dyadic, 3> LevelSequence::element_lo(int level, const Idx& e) const {
    std::array<Dyadic, 3> lo{Dyadic::zero(), Dyadic::zero(), Dyadic::zero()};
    for (int d = 0; d < dim(); ++d) lo[d] = breakpoint(level, d, e[d]);
    return lo;
}

std::array<Dyadic, 3> LevelSequence::element_hi(int level, const Idx& e) const {
    std::array<Dyadic, 3> hi{Dyadic::one(), Dyadic::one(), Dyadic::one()};
    for (int d = 0; d < dim(); ++d) hi[d] = breakpoint(level, d, e[d] + 1);
    return hi;
}

const LevelSequence::TwoScaleRow& LevelSequence::two_scale_row(int level, int d,
                                                               std::int64_t f) const {
    const RowKey key{level, d, f};
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = row_cache_.find(key);
        if (it != row_cache_.end()) return *it->second;
    }

    const int p = base_.degree(d);
    // Source knots t_f .. t_{f+p+1}.
    double src[kMaxDegree + 3];
    source_knot_window(level, d, f, src);

    // Candidate fine functions: those whose support lies inside
    // [t_f, t_{f+p+1}] = breakpoints [2*lo, 2*hi] at level+1.
    const std::int64_t lo = knot_to_breakpoint(level, d, f) * 2;
    const std::int64_t hi = knot_to_breakpoint(level, d, f + p + 1) * 2;
    const std::int64_t j_min = first_knot_of_breakpoint(level + 1, d, lo);
    const std::int64_t j_max =
        first_knot_of_breakpoint(level + 1, d, hi) + multiplicity(level + 1, d, hi) - (p + 2);

    auto row = std::make_unique<TwoScaleRow>();
    row->first = j_min;
    row->coeff.assign(static_cast<std::size_t>(j_max - j_min + 1), 0.0);

    // Discrete B-spline (Oslo) recursion on local windows: alpha_{i,k}
    // plays the role of the Cox-de Boor value of source function i at the
    // fine knot run tau_j .. tau_{j+k}.
    for (std::int64_t j = j_min; j <= j_max; ++j) {
        double tau[kMaxDegree + 2];
        for (int k = 0; k <= p; ++k) {
            tau[k] = breakpoint(level + 1, d, knot_to_breakpoint(level + 1, d, j + k)).to_double();
        }
        // alpha over source offsets r (function f+r enters only via r = 0
        // here; the recursion ascends from degree 0 on offsets 0..p).
        double alpha[kMaxDegree + 2];
        for (int r = 0; r <= p; ++r) {
            alpha[r] = (src[r] <= tau[0] && tau[0] < src[r + 1]) ? 1.0 : 0.0;
        }
        for (int k = 1; k <= p; ++k) {
            for (int r = 0; r + k <= p; ++r) {
                const double den1 = src[r + k] - src[r];
                const double den2 = src[r + k + 1] - src[r + 1];
                double v = 0.0;
                if (den1 > 0.0) v += (tau[k] - src[r]) / den1 * alpha[r];
                if (den2 > 0.0) v += (src[r + k + 1] - tau[k]) / den2 * alpha[r + 1];
                alpha[r] = v;
            }
        }
        row->coeff[static_cast<std::size_t>(j - j_min)] = alpha[0];
    }

    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto [it, inserted] = row_cache_.emplace(key, std::move(row));
    return *it->second;
}

}  // namespace hsfem
