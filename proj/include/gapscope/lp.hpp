#pragma once

#include "gapscope/linalg.hpp"

#include <limits>
#include <vector>

namespace gapscope::lp
{

/// Structural-variable cap for the dense solver.
inline constexpr int kMaxVariables = 256;
inline constexpr double kPivotTol = 1e-9;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense
{
    LessEq,
    GreaterEq,
    Equal
};

enum class Status
{
    Optimal,
    Infeasible,
    Unbounded
};

struct Constraint
{
    Vec coeffs;
    Sense sense{Sense::Equal};
    double rhs{0.0};
};

/// minimize c·x subject to the rows, with x_j >= 0 unless marked free and
/// x_j <= upper_j when an upper bound is finite.
class Problem
{
public:
    explicit Problem(int num_vars);

    int num_vars() const { return num_vars_; }

    void set_objective(const Vec& c);
    void set_free(int j, bool free = true);
    void set_upper(int j, double upper);
    void add_row(const Vec& coeffs, Sense sense, double rhs);

    const Vec& objective() const { return objective_; }
    const std::vector<Constraint>& rows() const { return rows_; }
    bool is_free(int j) const { return free_[static_cast<std::size_t>(j)]; }
    double upper(int j) const { return upper_[static_cast<std::size_t>(j)]; }

private:
    int num_vars_;
    Vec objective_;
    std::vector<bool> free_;
    std::vector<double> upper_;
    std::vector<Constraint> rows_;
};

struct Result
{
    Status status{Status::Infeasible};
    Vec x;
    double objective{0.0};
};

/// Dense two-phase primal simplex with Bland's anti-cycling rule.
Result solve(const Problem& problem, double pivot_tol = kPivotTol);

} // namespace gapscope::lp
