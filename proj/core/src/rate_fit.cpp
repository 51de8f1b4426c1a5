#include "hsfem/rate_fit.hpp"

#include <cmath>
#include <stdexcept>

namespace hsfem {

double rate_fit(std::span<const double> x, std::span<const double> y, int tail_points) {
    if (x.size() != y.size()) throw std::invalid_argument("rate_fit: size mismatch");
    if (tail_points < 2 || static_cast<std::size_t>(tail_points) > x.size())
        throw std::invalid_argument("rate_fit: not enough points");
    const std::size_t begin = x.size() - static_cast<std::size_t>(tail_points);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = begin; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::invalid_argument("rate_fit: values must be positive");
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double nn = static_cast<double>(tail_points);
    const double denom = nn * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("rate_fit: degenerate abscissae");
    return (nn * sxy - sx * sy) / denom;
}

}  // namespace hsfem
