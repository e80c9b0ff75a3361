#ifndef GLAVA_ERRORS_HPP
#define GLAVA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace glava {

// Numerical degeneracy (zero residual variance, null gradient, failed
// Cholesky). Distinct from invalid input so callers can map it to a
// dedicated exit code.
class degenerate_error : public std::runtime_error {
public:
    explicit degenerate_error(const std::string& what) : std::runtime_error(what) {}
};

// File-level failures: unreadable, unwritable, malformed beyond repair.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace glava

#endif  // GLAVA_ERRORS_HPP
