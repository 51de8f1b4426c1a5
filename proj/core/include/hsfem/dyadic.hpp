#pragma once

#include <cassert>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace hsfem {

/// Exact dyadic rational num / 2^exp, kept in canonical form (odd numerator
/// or exp == 0). Breakpoints of dyadically refined meshes live here so that
/// all mesh topology is exact integer arithmetic, never float comparison.
class Dyadic {
public:
    constexpr Dyadic() = default;
    constexpr Dyadic(std::int64_t numerator, std::uint32_t exponent = 0)
        : num_(numerator), exp_(exponent) {
        canonicalize();
    }

    static constexpr Dyadic zero() { return Dyadic(0); }
    static constexpr Dyadic one() { return Dyadic(1); }

    constexpr std::int64_t num() const { return num_; }
    constexpr std::uint32_t exp() const { return exp_; }

    constexpr double to_double() const {
        // Exact for exp < 64 and |num| < 2^53, which covers every mesh this
        // library can address before running out of memory.
        return static_cast<double>(num_) / static_cast<double>(std::int64_t(1) << exp_);
    }

    constexpr friend Dyadic operator+(Dyadic a, Dyadic b) {
        const std::uint32_t e = a.exp_ > b.exp_ ? a.exp_ : b.exp_;
        return Dyadic((a.num_ << (e - a.exp_)) + (b.num_ << (e - b.exp_)), e);
    }
    constexpr friend Dyadic operator-(Dyadic a, Dyadic b) {
        const std::uint32_t e = a.exp_ > b.exp_ ? a.exp_ : b.exp_;
        return Dyadic((a.num_ << (e - a.exp_)) - (b.num_ << (e - b.exp_)), e);
    }
    constexpr friend Dyadic operator*(Dyadic a, Dyadic b) {
        return Dyadic(a.num_ * b.num_, a.exp_ + b.exp_);
    }

    /// Exact midpoint (a+b)/2.
    constexpr friend Dyadic midpoint(Dyadic a, Dyadic b) {
        const Dyadic s = a + b;
        return Dyadic(s.num_, s.exp_ + 1);
    }

    /// a + (b-a) * k / 2^r with 0 <= k <= 2^r: the k-th dyadic subdivision
    /// point of [a, b]. Exact.
    constexpr friend Dyadic subdivide(Dyadic a, Dyadic b, std::int64_t k, std::uint32_t r) {
        return a + Dyadic((b - a).num_ * k, (b - a).exp_ + r);
    }

    constexpr friend bool operator==(Dyadic a, Dyadic b) {
        return a.num_ == b.num_ && a.exp_ == b.exp_;
    }
    constexpr friend std::strong_ordering operator<=>(Dyadic a, Dyadic b) {
        // Compare a.num * 2^b.exp with b.num * 2^a.exp in 128 bits.
        const __int128 lhs = static_cast<__int128>(a.num_) << b.exp_;
        const __int128 rhs = static_cast<__int128>(b.num_) << a.exp_;
        return lhs < rhs ? std::strong_ordering::less
             : lhs > rhs ? std::strong_ordering::greater
                         : std::strong_ordering::equal;
    }

    std::string str() const;

private:
    constexpr void canonicalize() {
        if (num_ == 0) { exp_ = 0; return; }
        while (exp_ > 0 && (num_ & 1) == 0) { num_ >>= 1; --exp_; }
    }

    std::int64_t num_ = 0;
    std::uint32_t exp_ = 0;
};

std::ostream& operator<<(std::ostream& os, Dyadic d);

/// Parses the serialization format produced by Dyadic::str(): either an
/// integer "k" or "k/2^e". Throws std::invalid_argument on malformed input.
Dyadic parse_dyadic(const std::string& token);

}  // namespace hsfem
