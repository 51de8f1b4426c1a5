#pragma once

#include <cstdint>
#include <vector>

namespace hsfem {

struct MarkParams {
    double theta = 0.25;  ///< in (0, 1]
    /// Minimality constant: 1 gives the truly minimal sorted-prefix set,
    /// infinity returns every element (uniform refinement).
    double c_min = 1.0;
};

/// Element ids (ascending) forming a minimal set M with
/// theta * eta^2 <= eta(M)^2, ties in the sort broken by ascending id.
/// Throws std::invalid_argument on empty input or theta outside (0,1].
std::vector<std::int64_t> dorfler_mark(const std::vector<double>& indicators2,
                                       const MarkParams& params);

}  // namespace hsfem
