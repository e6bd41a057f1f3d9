#pragma once

#include <stdexcept>
#include <string>

namespace gapscope
{

enum class ErrorKind
{
    Input,          // malformed or inconsistent arguments
    Dimension,      // vector/matrix sizes disagree
    UnsupportedDim, // enumeration beyond the supported ambient dimension
    Grid,           // an interval or time is not resolved by the grid
    Divergence,     // non-finite value during integration
    Singular,       // rank-deficient linear map
    NonConvergence, // iterative solver ran out of iterations
    Precondition,   // documented precondition violated (e.g. infeasible process)
    NotInvertible,  // space-time process has a pure-impulse cell
    Horizon,        // reparameterization constant outside D = [-0.5, 0.5]
    Schema          // JSON document does not match the expected schema
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }
    /// Message without the kind prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

/// Integration produced a non-finite state; carries the offending step.
class DivergenceError : public Error
{
public:
    DivergenceError(std::size_t step, const std::string& message);

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Fixed-point iteration stopped without meeting its residual target.
class NonConvergenceError : public Error
{
public:
    NonConvergenceError(double best_residual, int iterations);

    double best_residual() const noexcept { return best_residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double best_residual_;
    int iterations_;
};

/// Schema violation with the JSON pointer of the offending member.
class SchemaError : public Error
{
public:
    SchemaError(std::string pointer, const std::string& message);

    const std::string& pointer() const noexcept { return pointer_; }

private:
    std::string pointer_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message)
{
    if (!condition)
        throw Error(kind, message);
}

} // namespace gapscope
