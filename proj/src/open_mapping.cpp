#include "gapscope/open_mapping.hpp"

#include "gapscope/error.hpp"
#include "gapscope/lp.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numbers>

namespace gapscope::open_mapping
{

namespace
{

double residual_of(const QdqInstance& inst, const Vec& g)
{
    return (inst.L(g) * g + inst.h(g)).norm();
}

} // namespace

Mat right_inverse(const Mat& L)
{
    require(L.rows() >= 1 && L.cols() >= L.rows(), ErrorKind::Singular, "right inverse needs rows ≤ columns");
    const Mat gram = L * L.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    const double smin = std::sqrt(std::max(0.0, es.eigenvalues().minCoeff()));
    require(smin >= kRankTol, ErrorKind::Singular, "matrix is not of full row rank");
    return L.transpose() * gram.ldlt().solve(Mat::Identity(L.rows(), L.rows()));
}

Mat flat_inverse(const Mat& L, const Vec& h, const Vec& v)
{
    require(h.size() == L.rows() && v.size() == L.cols(), ErrorKind::Dimension, "flat inverse sizes disagree");
    const double hh = h.squaredNorm();
    require(hh > 1e-24, ErrorKind::Singular, "h is zero; use the right inverse directly");
    require((L * v + h).norm() <= 1e-9 * std::max(1.0, h.norm()), ErrorKind::Input, "L·v differs from −h");
    const Mat sharp = right_inverse(L);
    // Correction term v + M♯h lies in ker L, so L·M♭ = I and −M♭h = v.
    const Vec corr = v + sharp * h;
    return sharp - corr * h.transpose() / hh;
}

std::optional<Vec> cone_preimage(const Mat& L, const Vec& h, const cones::PolyhedralCone& cone)
{
    const int nr = static_cast<int>(cone.rays().size());
    const int nl = static_cast<int>(cone.lineality().size());
    const int nv = nr + nl;
    if (nv == 0)
    {
        if (h.norm() <= 1e-12)
            return Vec::Zero(L.cols());
        return std::nullopt;
    }
    Mat G(L.cols(), nv);
    for (int j = 0; j < nr; ++j)
        G.col(j) = cone.rays()[static_cast<std::size_t>(j)];
    for (int j = 0; j < nl; ++j)
        G.col(nr + j) = cone.lineality()[static_cast<std::size_t>(j)];
    const Mat LG = L * G;

    lp::Problem prob(nv);
    Vec c = Vec::Zero(nv);
    c.head(nr).setOnes();
    prob.set_objective(c);
    for (int j = nr; j < nv; ++j)
        prob.set_free(j);
    for (Eigen::Index i = 0; i < LG.rows(); ++i)
        prob.add_row(LG.row(i).transpose(), lp::Sense::Equal, -h(i));
    const auto res = lp::solve(prob);
    if (res.status != lp::Status::Optimal)
        return std::nullopt;
    return Vec(G * res.x);
}

Vec project_cone_ball(const cones::PolyhedralCone& cone, double delta, const Vec& v, int rounds, double tol)
{
    Vec x = v;
    for (int r = 0; r < rounds; ++r)
    {
        Vec p = cones::project(cone, x);
        const double nrm = p.norm();
        if (nrm > delta)
            p *= delta / nrm;
        const double moved = (p - x).norm();
        x = p;
        if (moved <= tol && r > 0)
            break;
    }
    return x;
}

void check_instance(const QdqInstance& inst, std::size_t samples)
{
    require(inst.N >= 1 && inst.n >= 1 && inst.gamma_cone.dim() == inst.N, ErrorKind::Dimension,
            "instance dimensions are inconsistent");
    require(inst.delta > 0.0 && inst.rho > 0.0, ErrorKind::Input, "delta and rho must be positive");
    for (std::size_t i = 0; i <= samples; ++i)
    {
        Vec g = Vec::Zero(inst.N);
        if (i > 0)
        {
            // Deterministic spread of points, projected into Γ ∩ B_δ.
            for (int j = 0; j < inst.N; ++j)
                g(j) = std::sin(1.7 * static_cast<double>(i) * (j + 1) + 0.3 * j);
            g = project_cone_ball(inst.gamma_cone, inst.delta, inst.delta * g);
        }
        const Mat L = inst.L(g);
        require(L.rows() == inst.n && L.cols() == inst.N, ErrorKind::Dimension, "L(γ) has wrong shape");
        (void)right_inverse(L);
        require(inst.h(g).norm() <= inst.delta * inst.rho * (1.0 + 1e-12), ErrorKind::Input,
                "‖h(γ)‖ exceeds δ·ρ at a sampled γ");
    }
}

FixedPointResult solve_fixed_point(const QdqInstance& inst, int max_iter, double damping)
{
    require(damping > 0.0 && damping <= 1.0, ErrorKind::Input, "damping must lie in (0, 1]");
    require(max_iter >= 1, ErrorKind::Input, "max_iter must be positive");
    FixedPointResult out;
    Vec g = Vec::Zero(inst.N);
    double best = std::numeric_limits<double>::infinity();
    Vec best_g = g;
    for (int it = 1; it <= max_iter; ++it)
    {
        const Mat L = inst.L(g);
        const Vec h = inst.h(g);
        Vec step = -(right_inverse(L) * h);
        if (h.norm() > 1e-14 && !cones::cone_contains(inst.gamma_cone, step, 1e-10))
        {
            if (auto v = cone_preimage(L, h, inst.gamma_cone))
            {
                step = -(flat_inverse(L, h, *v) * h);
                ++out.flat_steps;
            }
        }
        g = project_cone_ball(inst.gamma_cone, inst.delta, (1.0 - damping) * g + damping * step);
        const double res = residual_of(inst, g);
        if (res < best)
        {
            best = res;
            best_g = g;
        }
        if (res <= 1e-8)
        {
            out.gamma = g;
            out.residual = res;
            out.iterations = it;
            return out;
        }
    }
    throw NonConvergenceError(best, max_iter);
}

std::vector<QdqInstance> bundled_instances()
{
    std::vector<QdqInstance> out;

    const Vec c = vec_of({-0.3, -0.2});
    out.push_back({"identity-exact", 2, 2, cones::PolyhedralCone::orthant(2),
                   [](const Vec&) -> Mat { return Mat::Identity(2, 2); }, [c](const Vec&) -> Vec { return c; },
                   1.0, 1.0});

    out.push_back({"underdetermined-line", 2, 1, cones::PolyhedralCone::orthant(2),
                   [](const Vec&) -> Mat { return Mat::Ones(1, 2); },
                   [](const Vec&) -> Vec { return vec_of({-1.0}); }, 1.0, 1.0});

    out.push_back({"nonlinear-diagonal", 2, 2, cones::PolyhedralCone::orthant(2),
                   [](const Vec& g) -> Mat {
                       Mat L = Mat::Identity(2, 2);
                       L(0, 0) += 0.1 * g(0);
                       L(1, 1) += 0.1 * g(1);
                       return L;
                   },
                   [](const Vec& g) -> Vec {
                       return vec_of({-0.2 + 0.1 * g(1) * g(1), -0.1 + 0.05 * g(0) * g(1)});
                   },
                   0.5, 1.0});
    return out;
}

std::vector<SweepRow> shifted_target_sweep(std::size_t directions, double delta, double beta)
{
    require(directions >= 1 && delta > 0.0 && beta > 0.0, ErrorKind::Input, "invalid sweep parameters");
    Mat L(2, 3);
    L << 1, 0, -1, 0, 1, -1;
    const double a = delta / beta;
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < directions; ++i)
    {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(directions);
        const Vec u = vec_of({std::cos(th), std::sin(th)});
        QdqInstance inst{"sweep", 3, 2, cones::PolyhedralCone::orthant(3), [L](const Vec&) -> Mat { return L; },
                         [u, a](const Vec&) -> Vec { return Vec(-a * u); }, delta, a / delta};
        SweepRow row{u, false, 0.0, 0.0};
        try
        {
            const auto r = solve_fixed_point(inst);
            row.ok = true;
            row.residual = r.residual;
            row.gamma_norm = r.gamma.norm();
        }
        catch (const NonConvergenceError& e)
        {
            row.residual = e.best_residual();
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace gapscope::open_mapping
