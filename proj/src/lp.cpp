#include "gapscope/lp.hpp"

#include "gapscope/error.hpp"

#include <cmath>
#include <string>

namespace gapscope::lp
{

Problem::Problem(int num_vars)
    : num_vars_(num_vars), objective_(Vec::Zero(num_vars)),
      free_(static_cast<std::size_t>(num_vars), false),
      upper_(static_cast<std::size_t>(num_vars), kInf)
{
    require(num_vars > 0, ErrorKind::Input, "LP needs at least one variable");
    require(num_vars <= kMaxVariables, ErrorKind::UnsupportedDim,
            "LP has " + std::to_string(num_vars) + " variables, cap is " +
                std::to_string(kMaxVariables));
}

void Problem::set_objective(const Vec& c)
{
    require(c.size() == num_vars_, ErrorKind::Dimension, "LP objective size mismatch");
    objective_ = c;
}

void Problem::set_free(int j, bool free) { free_.at(static_cast<std::size_t>(j)) = free; }

void Problem::set_upper(int j, double upper) { upper_.at(static_cast<std::size_t>(j)) = upper; }

void Problem::add_row(const Vec& coeffs, Sense sense, double rhs)
{
    require(coeffs.size() == num_vars_, ErrorKind::Dimension, "LP row size mismatch");
    rows_.push_back({coeffs, sense, rhs});
}

namespace
{

// Tableau over the standard form A x = b, x >= 0, b >= 0, with one extra
// row holding reduced costs and the negated objective value.
class Tableau
{
public:
    Tableau(Mat a, Vec b, std::vector<int> basis, double tol)
        : t_(a.rows() + 1, a.cols() + 1), basis_(std::move(basis)), tol_(tol)
    {
        t_.setZero();
        t_.topLeftCorner(a.rows(), a.cols()) = a;
        t_.topRightCorner(a.rows(), 1) = b;
    }

    Eigen::Index rows() const { return t_.rows() - 1; }
    Eigen::Index cols() const { return t_.cols() - 1; }

    void set_costs(const Vec& cost)
    {
        const Eigen::Index m = rows();
        t_.row(m).setZero();
        t_.row(m).head(cols()) = cost.transpose();
        for (Eigen::Index i = 0; i < m; ++i)
        {
            const double cb = cost(basis_[static_cast<std::size_t>(i)]);
            if (cb != 0.0)
                t_.row(m) -= cb * t_.row(i);
        }
    }

    // Returns false when unbounded. `allowed` masks columns that may enter.
    bool optimize(const std::vector<bool>& allowed)
    {
        const Eigen::Index m = rows();
        const Eigen::Index n = cols();
        for (int iter = 0; iter < 100000; ++iter)
        {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < n; ++j)
            {
                if (allowed[static_cast<std::size_t>(j)] && t_(m, j) < -tol_)
                {
                    enter = j;
                    break;
                }
            }
            if (enter < 0)
                return true;

            Eigen::Index leave = -1;
            double best = 0.0;
            for (Eigen::Index i = 0; i < m; ++i)
            {
                const double a = t_(i, enter);
                if (a <= tol_)
                    continue;
                const double ratio = t_(i, n) / a;
                if (leave < 0 || ratio < best - 1e-12 ||
                    (std::abs(ratio - best) <= 1e-12 &&
                     basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]))
                {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave < 0)
                return false;
            pivot(leave, enter);
        }
        throw Error(ErrorKind::NonConvergence, "simplex iteration limit reached");
    }

    void pivot(Eigen::Index r, Eigen::Index c)
    {
        t_.row(r) /= t_(r, c);
        for (Eigen::Index i = 0; i < t_.rows(); ++i)
        {
            if (i == r)
                continue;
            const double f = t_(i, c);
            if (f != 0.0)
                t_.row(i) -= f * t_.row(r);
        }
        basis_[static_cast<std::size_t>(r)] = static_cast<int>(c);
    }

    void drop_row(Eigen::Index r)
    {
        Mat next(t_.rows() - 1, t_.cols());
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < t_.rows(); ++i)
            if (i != r)
                next.row(k++) = t_.row(i);
        t_ = std::move(next);
        basis_.erase(basis_.begin() + r);
    }

    double value() const { return -t_(rows(), cols()); }
    double entry(Eigen::Index i, Eigen::Index j) const { return t_(i, j); }
    double rhs(Eigen::Index i) const { return t_(i, cols()); }
    int basic(Eigen::Index i) const { return basis_[static_cast<std::size_t>(i)]; }

private:
    Mat t_;
    std::vector<int> basis_;
    double tol_;
};

} // namespace

Result solve(const Problem& problem, double pivot_tol)
{
    const int nv = problem.num_vars();

    // Column layout: structural (free vars split in two), then slacks, then artificials.
    std::vector<int> pos_col(static_cast<std::size_t>(nv));
    std::vector<int> neg_col(static_cast<std::size_t>(nv), -1);
    int ncol = 0;
    for (int j = 0; j < nv; ++j)
    {
        pos_col[static_cast<std::size_t>(j)] = ncol++;
        if (problem.is_free(j))
            neg_col[static_cast<std::size_t>(j)] = ncol++;
    }
    const int n_struct = ncol;

    std::vector<Constraint> rows = problem.rows();
    for (int j = 0; j < nv; ++j)
    {
        if (std::isfinite(problem.upper(j)))
        {
            Vec e = Vec::Zero(nv);
            e(j) = 1.0;
            rows.push_back({e, Sense::LessEq, problem.upper(j)});
        }
    }
    const auto m = static_cast<Eigen::Index>(rows.size());

    int n_slack = 0;
    for (const auto& r : rows)
        if (r.sense != Sense::Equal)
            ++n_slack;
    const int n_total = n_struct + n_slack + static_cast<int>(m);

    Result result;
    result.x = Vec::Zero(nv);
    if (m == 0)
    {
        // Unconstrained apart from sign restrictions.
        for (int j = 0; j < nv; ++j)
        {
            const double c = problem.objective()(j);
            if (c < 0.0 || (problem.is_free(j) && c != 0.0))
            {
                result.status = Status::Unbounded;
                return result;
            }
        }
        result.status = Status::Optimal;
        return result;
    }

    Mat a = Mat::Zero(m, n_total);
    Vec b(m);
    std::vector<int> basis(static_cast<std::size_t>(m));
    int slack = n_struct;
    for (Eigen::Index i = 0; i < m; ++i)
    {
        const auto& r = rows[static_cast<std::size_t>(i)];
        for (int j = 0; j < nv; ++j)
        {
            a(i, pos_col[static_cast<std::size_t>(j)]) = r.coeffs(j);
            if (neg_col[static_cast<std::size_t>(j)] >= 0)
                a(i, neg_col[static_cast<std::size_t>(j)]) = -r.coeffs(j);
        }
        if (r.sense == Sense::LessEq)
            a(i, slack++) = 1.0;
        else if (r.sense == Sense::GreaterEq)
            a(i, slack++) = -1.0;
        b(i) = r.rhs;
        if (b(i) < 0.0)
        {
            a.row(i) *= -1.0;
            b(i) = -b(i);
        }
        const int art = n_struct + n_slack + static_cast<int>(i);
        a(i, art) = 1.0;
        basis[static_cast<std::size_t>(i)] = art;
    }

    Tableau tab(a, b, basis, pivot_tol);
    const int first_art = n_struct + n_slack;

    Vec phase1 = Vec::Zero(n_total);
    phase1.tail(m).setOnes();
    tab.set_costs(phase1);
    std::vector<bool> allowed(static_cast<std::size_t>(n_total), true);
    tab.optimize(allowed);

    const double scale = 1.0 + b.cwiseAbs().maxCoeff();
    if (tab.value() > 1e-9 * scale)
    {
        result.status = Status::Infeasible;
        return result;
    }

    // Drive artificials out of the basis; rows where that is impossible are redundant.
    for (Eigen::Index i = tab.rows() - 1; i >= 0; --i)
    {
        if (tab.basic(i) < first_art)
            continue;
        Eigen::Index col = -1;
        for (Eigen::Index j = 0; j < first_art; ++j)
        {
            if (std::abs(tab.entry(i, j)) > pivot_tol)
            {
                col = j;
                break;
            }
        }
        if (col >= 0)
            tab.pivot(i, col);
        else
            tab.drop_row(i);
    }

    Vec phase2 = Vec::Zero(n_total);
    for (int j = 0; j < nv; ++j)
    {
        phase2(pos_col[static_cast<std::size_t>(j)]) = problem.objective()(j);
        if (neg_col[static_cast<std::size_t>(j)] >= 0)
            phase2(neg_col[static_cast<std::size_t>(j)]) = -problem.objective()(j);
    }
    for (int j = first_art; j < n_total; ++j)
        allowed[static_cast<std::size_t>(j)] = false;
    tab.set_costs(phase2);
    if (!tab.optimize(allowed))
    {
        result.status = Status::Unbounded;
        return result;
    }

    Vec col_values = Vec::Zero(n_total);
    for (Eigen::Index i = 0; i < tab.rows(); ++i)
        col_values(tab.basic(i)) = tab.rhs(i);
    for (int j = 0; j < nv; ++j)
    {
        double v = col_values(pos_col[static_cast<std::size_t>(j)]);
        if (neg_col[static_cast<std::size_t>(j)] >= 0)
            v -= col_values(neg_col[static_cast<std::size_t>(j)]);
        result.x(j) = v;
    }
    result.objective = problem.objective().dot(result.x);
    result.status = Status::Optimal;
    return result;
}

} // namespace gapscope::lp
