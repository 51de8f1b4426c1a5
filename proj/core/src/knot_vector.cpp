#include "hsfem/knot_vector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hsfem {

void eval_span_basis(const double* t, int p, int span, double x, int nders, SpanBasis& out) {
    out.first = span - p;
    // Triangular table of the classic knot-difference recursion; ndu keeps
    // the lower-degree values needed for derivatives.
    double ndu[kMaxDegree + 1][kMaxDegree + 1];
    double left[kMaxDegree + 1], right[kMaxDegree + 1];
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - t[span + 1 - j];
        right[j] = t[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[j][r] != 0.0 ? ndu[r][j - 1] / ndu[j][r] : 0.0;
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for (int j = 0; j <= p; ++j) out.value[j] = ndu[j][p];

    if (nders >= 1) {
        // First derivative from the degree p-1 column.
        for (int r = 0; r <= p; ++r) {
            double d = 0.0;
            if (p > 0) {
                if (r > 0 && ndu[p][r - 1] != 0.0) d += ndu[r - 1][p - 1] / ndu[p][r - 1];
                if (r < p && ndu[p][r] != 0.0) d -= ndu[r][p - 1] / ndu[p][r];
            }
            out.d1[r] = p * d;
        }
    }
    if (nders >= 2) {
        // Second derivative: apply the first-derivative formula to the
        // derivative values of the degree p-1 functions.
        auto d_pm1 = [&](int r) {  // derivative of the degree p-1 function r
            double d = 0.0;
            if (p - 1 > 0) {
                if (r > 0 && ndu[p - 1][r - 1] != 0.0) d += ndu[r - 1][p - 2] / ndu[p - 1][r - 1];
                if (r < p - 1 && ndu[p - 1][r] != 0.0) d -= ndu[r][p - 2] / ndu[p - 1][r];
            }
            return (p - 1) * d;
        };
        for (int r = 0; r <= p; ++r) {
            double d = 0.0;
            if (p > 1) {
                if (r > 0 && ndu[p][r - 1] != 0.0) d += d_pm1(r - 1) / ndu[p][r - 1];
                if (r < p && ndu[p][r] != 0.0) d -= d_pm1(r) / ndu[p][r];
            }
            out.d2[r] = p * d;
        }
    }
}

KnotVector::KnotVector(int degree, std::vector<Dyadic> breakpoints, std::vector<int> mults)
    : degree_(degree), breakpoints_(std::move(breakpoints)), mults_(std::move(mults)) {
    if (degree_ < 0 || degree_ > kMaxDegree)
        throw std::invalid_argument("KnotVector: degree out of [0," + std::to_string(kMaxDegree) + "]");
    const auto nb = breakpoints_.size();
    if (nb < 2 || mults_.size() != nb)
        throw std::invalid_argument("KnotVector: need aligned breakpoints/multiplicities");
    if (breakpoints_.front() != Dyadic::zero() || breakpoints_.back() != Dyadic::one())
        throw std::invalid_argument("KnotVector: breakpoints must start at 0 and end at 1");
    if (mults_.front() != degree_ + 1 || mults_.back() != degree_ + 1)
        throw std::invalid_argument("KnotVector: end multiplicities must be degree+1 (open)");
    for (std::size_t j = 0; j + 1 < nb; ++j) {
        if (!(breakpoints_[j] < breakpoints_[j + 1]))
            throw std::invalid_argument("KnotVector: breakpoints must be strictly increasing");
    }
    for (std::size_t j = 1; j + 1 < nb; ++j) {
        if (mults_[j] < 1 || mults_[j] > std::max(degree_, 1))
            throw std::invalid_argument("KnotVector: interior multiplicity must be in [1, p]");
    }

    span_of_element_.reserve(nb - 1);
    for (std::size_t j = 0; j < nb; ++j) {
        if (j + 1 < nb) span_of_element_.push_back(static_cast<int>(knots_.size()) + mults_[j] - 1);
        const double z = breakpoints_[j].to_double();
        knots_.insert(knots_.end(), mults_[j], z);
    }
    if (n() < 1) throw std::invalid_argument("KnotVector: dimension must be >= 1");
}

KnotVector KnotVector::uniform(int degree, int num_elements, int interior_multiplicity) {
    std::vector<Dyadic> z;
    std::vector<int> m;
    // num_elements need not be a power of two; breakpoints j/num_elements are
    // dyadic only for power-of-two counts, so build them from exact division
    // when possible and reject otherwise.
    int r = 0;
    while ((1 << r) < num_elements) ++r;
    if ((1 << r) != num_elements)
        throw std::invalid_argument("KnotVector::uniform: element count must be a power of two");
    for (int j = 0; j <= num_elements; ++j) {
        z.push_back(Dyadic(j, static_cast<std::uint32_t>(r)));
        m.push_back(j == 0 || j == num_elements ? degree + 1 : interior_multiplicity);
    }
    return KnotVector(degree, std::move(z), std::move(m));
}

int KnotVector::element_of(double x) const {
    if (x < 0.0 || x > 1.0) throw std::domain_error("KnotVector: point outside [0,1]");
    int lo = 0, hi = num_elements() - 1;
    while (lo < hi) {
        const int mid = (lo + hi + 1) / 2;
        if (breakpoints_[mid].to_double() <= x) lo = mid;
        else hi = mid - 1;
    }
    return lo;
}

std::array<int, 2> KnotVector::support_breakpoints(int i) const {
    // Walk knot indices i and i+p+1 back to their breakpoints.
    int idx = 0, lo = -1, hi = -1;
    for (int j = 0; j < num_breakpoints(); ++j) {
        const int next = idx + mults_[j];
        if (i >= idx && i < next) lo = j;
        if (i + degree_ + 1 >= idx && i + degree_ + 1 < next) hi = j;
        idx = next;
    }
    return {lo, hi};
}

std::array<int, 2> KnotVector::support_elements(int i) const {
    const auto bp = support_breakpoints(i);
    return {bp[0], bp[1] - 1};
}

double KnotVector::support_midpoint(int i) const {
    return 0.5 * (knots_[i] + knots_[i + degree_ + 1]);
}

SpanBasis KnotVector::eval_derivs(double x, int order) const {
    if (order > 2) throw std::invalid_argument("KnotVector: derivative order > 2 unsupported");
    const int e = element_of(x);
    SpanBasis out;
    eval_span_basis(knots_.data(), degree_, span_of_element_[e], x, order, out);
    return out;
}

SpanBasis KnotVector::eval_on_element(int e, double x, int order) const {
    if (order > 2) throw std::invalid_argument("KnotVector: derivative order > 2 unsupported");
    SpanBasis out;
    eval_span_basis(knots_.data(), degree_, span_of_element_[e], x, order, out);
    return out;
}

bool refines(const KnotVector& coarse, const KnotVector& fine) {
    if (coarse.degree() != fine.degree()) return false;
    int jf = 0;
    for (int jc = 0; jc < coarse.num_breakpoints(); ++jc) {
        while (jf < fine.num_breakpoints() && fine.breakpoint(jf) < coarse.breakpoint(jc)) ++jf;
        if (jf == fine.num_breakpoints() || fine.breakpoint(jf) != coarse.breakpoint(jc)) return false;
        if (fine.multiplicity(jf) < coarse.multiplicity(jc)) return false;
    }
    return true;
}

}  // namespace hsfem
