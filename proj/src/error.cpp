#include "gapscope/error.hpp"

namespace gapscope
{

const char* to_string(ErrorKind kind)
{
    switch (kind)
    {
    case ErrorKind::Input: return "input";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::UnsupportedDim: return "unsupported-dimension";
    case ErrorKind::Grid: return "grid";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::NotInvertible: return "not-invertible";
    case ErrorKind::Horizon: return "horizon-mismatch";
    case ErrorKind::Schema: return "schema";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind), detail_(message)
{
}

DivergenceError::DivergenceError(std::size_t step, const std::string& message)
    : Error(ErrorKind::Divergence, message + " (step " + std::to_string(step) + ")"), step_(step)
{
}

NonConvergenceError::NonConvergenceError(double best_residual, int iterations)
    : Error(ErrorKind::NonConvergence,
            "residual target not reached after " + std::to_string(iterations) +
                " iterations, best residual " + std::to_string(best_residual)),
      best_residual_(best_residual), iterations_(iterations)
{
}

SchemaError::SchemaError(std::string pointer, const std::string& message)
    : Error(ErrorKind::Schema, message + " at " + (pointer.empty() ? std::string("/") : pointer)),
      pointer_(std::move(pointer))
{
}

} // namespace gapscope
