#include "hsfem/marking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hsfem {

std::vector<std::int64_t> dorfler_mark(const std::vector<double>& indicators2,
                                       const MarkParams& params) {
    if (indicators2.empty()) throw std::invalid_argument("dorfler_mark: no indicators");
    if (!(params.theta > 0.0) || params.theta > 1.0)
        throw std::invalid_argument("dorfler_mark: theta must be in (0,1]");
    for (double v : indicators2) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("dorfler_mark: indicators must be finite and >= 0");
    }
    const auto n = static_cast<std::int64_t>(indicators2.size());
    std::vector<std::int64_t> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);

    if (std::isinf(params.c_min)) return ids;  // mark everything

    std::sort(ids.begin(), ids.end(), [&](std::int64_t a, std::int64_t b) {
        const double ea = indicators2[static_cast<std::size_t>(a)];
        const double eb = indicators2[static_cast<std::size_t>(b)];
        if (ea != eb) return ea > eb;
        return a < b;
    });
    // Total in the same (sorted, descending) summation order as the prefix,
    // so that theta = 1 is met exactly by the full nonzero prefix.
    double total2 = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
        total2 += indicators2[static_cast<std::size_t>(ids[static_cast<std::size_t>(i)])];
    const double target = params.theta * total2;

    std::vector<std::int64_t> marked;
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (acc >= target) break;
        const std::int64_t id = ids[static_cast<std::size_t>(i)];
        if (indicators2[static_cast<std::size_t>(id)] == 0.0) break;  // prefix already attained
        marked.push_back(id);
        acc += indicators2[static_cast<std::size_t>(id)];
    }
    std::sort(marked.begin(), marked.end());
    return marked;
}

}  // namespace hsfem
