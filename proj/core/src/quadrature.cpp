#include "hsfem/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace hsfem {

namespace {

// Newton iteration on P_n, nodes seeded by the Chebyshev-like estimate.
GaussRule compute_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence for P_n(x) and P_n'(x).
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Map from [-1,1] to [0,1].
        rule.nodes[n - 1 - i] = 0.5 * (x + 1.0);
        rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    if (n == 1) {
        rule.nodes[0] = 0.5;
        rule.weights[0] = 1.0;
    }
    return rule;
}

}  // namespace

const GaussRule& gauss_rule(int n) {
    constexpr int kMax = 32;
    if (n < 1 || n > kMax) throw std::invalid_argument("gauss_rule: order out of range");
    static std::array<GaussRule, kMax + 1> cache;
    static std::array<std::once_flag, kMax + 1> flags;
    std::call_once(flags[n], [n] { cache[n] = compute_rule(n); });
    return cache[n];
}

GaussRule segmented_rule(int n, double a, double b, const std::vector<double>& splits) {
    const GaussRule& base = gauss_rule(n);
    std::vector<double> cuts{a};
    for (double s : splits) {
        if (s > a && s < b) cuts.push_back(s);
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());

    GaussRule out;
    out.nodes.reserve(base.nodes.size() * (cuts.size() - 1));
    out.weights.reserve(out.nodes.capacity());
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double lo = cuts[s], hi = cuts[s + 1];
        for (int k = 0; k < n; ++k) {
            out.nodes.push_back(lo + (hi - lo) * base.nodes[k]);
            out.weights.push_back((hi - lo) / (b - a) * base.weights[k]);
        }
    }
    return out;
}

}  // namespace hsfem
