#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace speclab {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input or configuration outside its documented range. The offending
/// field is kept separately so front ends can point at it.
struct ValidationError : Error {
    std::string field;
    ValidationError(std::string field_, const std::string& what_)
        : Error(field_.empty() ? what_ : field_ + ": " + what_), field(std::move(field_)) {}
};

/// An iterative solver ran out of iterations or restarts.
struct ConvergenceError : Error {
    std::size_t index;  // failing eigenvalue index or converged count, context-dependent
    ConvergenceError(const std::string& what_, std::size_t index_) : Error(what_), index(index_) {}
};

/// Cholesky factorization hit a nonpositive pivot.
struct NotPositiveDefinite : Error {
    std::size_t pivot;
    NotPositiveDefinite(const std::string& what_, std::size_t pivot_) : Error(what_), pivot(pivot_) {}
};

}  // namespace speclab
