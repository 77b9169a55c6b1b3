#pragma once

#include <stdexcept>
#include <string>

namespace sspde {

// Raised when a computation produces NaN or leaves its admissible range.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sspde
