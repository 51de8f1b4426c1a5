#pragma once

#include <array>
#include <span>
#include <vector>

#include "hsfem/dyadic.hpp"

namespace hsfem {

inline constexpr int kMaxDegree = 8;

/// Basis values and derivatives of the degree+1 functions that may be
/// nonzero on one knot span.
struct SpanBasis {
    int first = 0;  ///< index of the first of the p+1 local functions
    std::array<double, kMaxDegree + 1> value{};
    std::array<double, kMaxDegree + 1> d1{};
    std::array<double, kMaxDegree + 1> d2{};
};

/// Cox-de Boor evaluation of all p+1 functions that may be nonzero on the
/// span [t[span], t[span+1]], with derivatives up to nders <= 2. The point x
/// may equal either span endpoint; values are then the one-sided limits of
/// the polynomial piece living on the span.
void eval_span_basis(const double* knots, int degree, int span, double x, int nders,
                     SpanBasis& out);

/// p-open knot vector on [0,1] with exact dyadic breakpoints.
///
/// Invariants: first/last breakpoint are 0 and 1 with multiplicity p+1,
/// interior multiplicities are <= p (splines at least continuous), and the
/// dimension n = (sum of multiplicities) - p - 1 is >= 1.
class KnotVector {
public:
    KnotVector(int degree, std::vector<Dyadic> breakpoints, std::vector<int> multiplicities);

    /// Uniform open knot vector with num_elements elements and all interior
    /// breakpoints at the given multiplicity.
    static KnotVector uniform(int degree, int num_elements, int interior_multiplicity = 1);

    int degree() const { return degree_; }
    int n() const { return static_cast<int>(knots_.size()) - degree_ - 1; }
    int num_breakpoints() const { return static_cast<int>(breakpoints_.size()); }
    int num_elements() const { return num_breakpoints() - 1; }

    const std::vector<Dyadic>& breakpoints() const { return breakpoints_; }
    Dyadic breakpoint(int j) const { return breakpoints_[j]; }
    int multiplicity(int j) const { return mults_[j]; }
    std::span<const double> knots() const { return knots_; }

    /// Knot span of element e, i.e. the index i with t_i = z_e (last copy)
    /// and t_{i+1} = z_{e+1}.
    int span_of_element(int e) const { return span_of_element_[e]; }
    /// Index of the first basis function that is nonzero on element e.
    int first_fun_on_element(int e) const { return span_of_element_[e] - degree_; }
    /// Element containing x, taking the left element at x == 1 and at any
    /// interior breakpoint the right one.
    int element_of(double x) const;

    /// Breakpoint index range [lo, hi] spanned by supp(B_i) = [t_i, t_{i+p+1}].
    std::array<int, 2> support_breakpoints(int i) const;
    /// Element index range [lo, hi] (inclusive) covered by supp(B_i).
    std::array<int, 2> support_elements(int i) const;

    /// Support midpoint (t_i + t_{i+p+1}) / 2 used by the projection
    /// element chooser.
    double support_midpoint(int i) const;

    /// All p+1 possibly-nonzero basis values at x in [0,1]; out-of-domain x
    /// raises std::domain_error. Values are >= 0 and sum to 1.
    SpanBasis eval(double x) const { return eval_derivs(x, 0); }
    /// Values plus derivatives up to order r <= 2 (std::invalid_argument
    /// beyond that).
    SpanBasis eval_derivs(double x, int order) const;
    /// One-sided evaluation on a fixed element; x must lie in its closure.
    SpanBasis eval_on_element(int e, double x, int order) const;

    friend bool operator==(const KnotVector&, const KnotVector&) = default;

private:
    int degree_;
    std::vector<Dyadic> breakpoints_;
    std::vector<int> mults_;
    std::vector<double> knots_;            // expanded, as doubles
    std::vector<int> span_of_element_;
};

/// True when every breakpoint of `coarse` appears in `fine` with at least
/// the same multiplicity (same degree).
bool refines(const KnotVector& coarse, const KnotVector& fine);

}  // namespace hsfem
