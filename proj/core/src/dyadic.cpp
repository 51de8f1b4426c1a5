#include "hsfem/dyadic.hpp"

#include <ostream>
#include <sstream>
#include <stdexcept>

namespace hsfem {

std::string Dyadic::str() const {
    std::ostringstream os;
    if (exp_ == 0) {
        os << num_;
    } else {
        os << num_ << "/2^" << exp_;
    }
    return os.str();
}

std::ostream& operator<<(std::ostream& os, Dyadic d) { return os << d.str(); }

Dyadic parse_dyadic(const std::string& token) {
    const auto slash = token.find('/');
    try {
        if (slash == std::string::npos) {
            return Dyadic(std::stoll(token));
        }
        if (token.compare(slash, 3, "/2^") != 0) {
            throw std::invalid_argument("bad dyadic token");
        }
        const std::int64_t num = std::stoll(token.substr(0, slash));
        const unsigned long exp = std::stoul(token.substr(slash + 3));
        if (exp > 62) throw std::invalid_argument("dyadic exponent too large");
        return Dyadic(num, static_cast<std::uint32_t>(exp));
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception&) {
        throw std::invalid_argument("bad dyadic token: " + token);
    }
}

}  // namespace hsfem
