#include "gapscope/cones.hpp"

#include "gapscope/error.hpp"
#include "gapscope/lp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gapscope::cones
{

namespace
{

void check_dim(const PolyhedralCone& a, const PolyhedralCone& b)
{
    require(a.dim() == b.dim(), ErrorKind::Dimension,
            "cone dimensions differ: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
}

// Orthonormal basis (columns) of the span of the given vectors.
Mat span_basis(const std::vector<Vec>& vs, int dim)
{
    if (vs.empty())
        return Mat(dim, 0);
    Mat a(dim, static_cast<Eigen::Index>(vs.size()));
    for (std::size_t j = 0; j < vs.size(); ++j)
        a.col(static_cast<Eigen::Index>(j)) = vs[j];
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    const double cutoff = 1e-10 * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > cutoff)
        ++rank;
    return svd.matrixU().leftCols(rank);
}

// Orthonormal basis of {x : v·x = 0 for all v}.
Mat null_basis(const std::vector<Vec>& vs, int dim)
{
    if (vs.empty())
        return Mat::Identity(dim, dim);
    Mat a(static_cast<Eigen::Index>(vs.size()), dim);
    for (std::size_t i = 0; i < vs.size(); ++i)
        a.row(static_cast<Eigen::Index>(i)) = vs[i].transpose();
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cutoff = 1e-10 * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > cutoff)
        ++rank;
    return svd.matrixV().rightCols(dim - rank);
}

void push_unique_direction(std::vector<Vec>& out, const Vec& d)
{
    const Vec u = d.normalized();
    for (const auto& o : out)
        if ((o - u).norm() < 1e-8)
            return;
    out.push_back(u);
}

// Iterate all k-subsets of {0..m-1} in lexicographic order.
template <typename Fn>
void for_each_subset(int m, int k, Fn&& fn)
{
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        idx[static_cast<std::size_t>(i)] = i;
    if (k > m)
        return;
    while (true)
    {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - k + i)
            --i;
        if (i < 0)
            return;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

} // namespace

PolyhedralCone::PolyhedralCone(int dim, std::vector<Vec> rays, std::vector<Vec> lineality)
    : dim_(dim)
{
    require(dim > 0, ErrorKind::Input, "cone dimension must be positive");
    auto keep = [dim](std::vector<Vec>& in, std::vector<Vec>& out) {
        for (auto& v : in)
        {
            require(v.size() == dim, ErrorKind::Dimension,
                    "generator of length " + std::to_string(v.size()) + " in a cone of dimension " +
                        std::to_string(dim));
            require(v.allFinite(), ErrorKind::Input, "non-finite cone generator");
            if (v.norm() >= kZeroRay)
                out.push_back(std::move(v));
        }
    };
    keep(rays, rays_);
    keep(lineality, lineality_);
}

PolyhedralCone PolyhedralCone::whole_space(int dim)
{
    std::vector<Vec> lin;
    for (int i = 0; i < dim; ++i)
        lin.push_back(Vec::Unit(dim, i));
    return PolyhedralCone(dim, {}, lin);
}

PolyhedralCone PolyhedralCone::orthant(int dim)
{
    std::vector<Vec> rays;
    for (int i = 0; i < dim; ++i)
        rays.push_back(Vec::Unit(dim, i));
    return PolyhedralCone(dim, rays);
}

PolyhedralCone PolyhedralCone::negated() const
{
    std::vector<Vec> rays;
    for (const auto& r : rays_)
        rays.push_back(-r);
    return PolyhedralCone(dim_, rays, lineality_);
}

Vec nnls(const Mat& a, const Vec& b)
{
    const Eigen::Index n = a.cols();
    Vec x = Vec::Zero(n);
    if (n == 0)
        return x;
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    const double tol = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff() * std::max(1.0, b.norm()));

    auto solve_passive = [&](Vec& z) {
        std::vector<Eigen::Index> cols;
        for (Eigen::Index j = 0; j < n; ++j)
            if (passive[static_cast<std::size_t>(j)])
                cols.push_back(j);
        Mat ap(a.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t k = 0; k < cols.size(); ++k)
            ap.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
        const Vec zp = ap.colPivHouseholderQr().solve(b);
        z.setZero(n);
        for (std::size_t k = 0; k < cols.size(); ++k)
            z(cols[k]) = zp(static_cast<Eigen::Index>(k));
    };

    for (int outer = 0; outer < 3 * static_cast<int>(n) + 10; ++outer)
    {
        const Vec w = a.transpose() * (b - a * x);
        Eigen::Index t = -1;
        double best = tol;
        for (Eigen::Index j = 0; j < n; ++j)
        {
            if (!passive[static_cast<std::size_t>(j)] && w(j) > best)
            {
                best = w(j);
                t = j;
            }
        }
        if (t < 0)
            break;
        passive[static_cast<std::size_t>(t)] = true;

        Vec z;
        for (int inner = 0; inner < 3 * static_cast<int>(n) + 10; ++inner)
        {
            solve_passive(z);
            bool ok = true;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0)
                    ok = false;
            if (ok)
                break;
            double alpha = 1.0;
            for (Eigen::Index j = 0; j < n; ++j)
            {
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0)
                {
                    const double denom = x(j) - z(j);
                    if (denom > 0.0)
                        alpha = std::min(alpha, x(j) / denom);
                }
            }
            x += alpha * (z - x);
            for (Eigen::Index j = 0; j < n; ++j)
            {
                if (passive[static_cast<std::size_t>(j)] && x(j) <= tol)
                {
                    passive[static_cast<std::size_t>(j)] = false;
                    x(j) = 0.0;
                }
            }
        }
        for (Eigen::Index j = 0; j < n; ++j)
            x(j) = passive[static_cast<std::size_t>(j)] ? std::max(0.0, z(j)) : 0.0;
    }
    return x;
}

Vec project(const PolyhedralCone& cone, const Vec& v)
{
    require(v.size() == cone.dim(), ErrorKind::Dimension, "vector length differs from cone dimension");
    const int n = cone.dim();
    const Mat q = span_basis(cone.lineality(), n);
    const Mat perp = Mat::Identity(n, n) - q * q.transpose();
    const Vec lin_part = q * (q.transpose() * v);
    if (cone.rays().empty())
        return lin_part;
    Mat r(n, static_cast<Eigen::Index>(cone.rays().size()));
    for (std::size_t j = 0; j < cone.rays().size(); ++j)
        r.col(static_cast<Eigen::Index>(j)) = perp * cone.rays()[j];
    const Vec pv = perp * v;
    const Vec coef = nnls(r, pv);
    return lin_part + r * coef;
}

double distance(const PolyhedralCone& cone, const Vec& v) { return (v - project(cone, v)).norm(); }

bool cone_contains(const PolyhedralCone& cone, const Vec& v, double tol)
{
    require(v.size() == cone.dim(), ErrorKind::Dimension, "vector length differs from cone dimension");
    require(tol > 0.0, ErrorKind::Input, "membership tolerance must be positive");
    return distance(cone, v) <= tol;
}

PolyhedralCone polar(const PolyhedralCone& cone)
{
    const int n = cone.dim();
    require(n <= kMaxPolarDim, ErrorKind::UnsupportedDim,
            "polar enumeration supports dim <= 6, got " + std::to_string(n));

    std::vector<Vec> all = cone.rays();
    all.insert(all.end(), cone.lineality().begin(), cone.lineality().end());

    // Lineality of the polar: everything orthogonal to every generator.
    const Mat lin = null_basis(all, n);
    std::vector<Vec> lin_out;
    for (Eigen::Index j = 0; j < lin.cols(); ++j)
        lin_out.push_back(lin.col(j));

    // The pointed part lives in W = span of the rays projected off the input lineality.
    const Mat q = span_basis(cone.lineality(), n);
    const Mat perp = Mat::Identity(n, n) - q * q.transpose();
    std::vector<Vec> projected;
    for (const auto& r : cone.rays())
        projected.push_back(perp * r);
    const Mat w = span_basis(projected, n);
    const auto k = static_cast<int>(w.cols());

    std::vector<Vec> rays_out;
    if (k > 0)
    {
        // Constraint rows in W coordinates, normalized.
        std::vector<Vec> rows;
        for (const auto& r : cone.rays())
        {
            Vec a = w.transpose() * r;
            if (a.norm() > kZeroRay)
                rows.push_back(a.normalized());
        }
        const auto m = static_cast<int>(rows.size());
        auto try_direction = [&](const Vec& d) {
            for (const auto& a : rows)
                if (a.dot(d) > 1e-9)
                    return;
            push_unique_direction(rays_out, w * d);
        };
        if (k == 1)
        {
            try_direction(Vec::Ones(1));
            try_direction(-Vec::Ones(1));
        }
        else
        {
            for_each_subset(m, k - 1, [&](const std::vector<int>& idx) {
                Mat sub(k - 1, k);
                for (int i = 0; i < k - 1; ++i)
                    sub.row(i) = rows[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])].transpose();
                Eigen::JacobiSVD<Mat> svd(sub, Eigen::ComputeFullV);
                const auto& s = svd.singularValues();
                if (s.size() < k - 1 || s(k - 2) < 1e-10)
                    return;
                const Vec d = svd.matrixV().col(k - 1);
                try_direction(d);
                try_direction(-d);
            });
        }
    }
    return PolyhedralCone(n, rays_out, lin_out);
}

std::optional<SeparationWitness> linear_separation(const PolyhedralCone& k1, const PolyhedralCone& k2)
{
    check_dim(k1, k2);
    const int n = k1.dim();
    const int t = n; // index of the slack variable

    std::optional<SeparationWitness> best;
    for (int i = 0; i < n; ++i)
    {
        for (double sign : {1.0, -1.0})
        {
            lp::Problem prob(n + 1);
            Vec obj = Vec::Zero(n + 1);
            obj(t) = -1.0;
            prob.set_objective(obj);
            for (int j = 0; j < n; ++j)
            {
                prob.set_free(j);
                prob.set_upper(j, 1.0);
                Vec e = Vec::Zero(n + 1);
                e(j) = 1.0;
                prob.add_row(e, lp::Sense::GreaterEq, -1.0);
            }
            prob.set_upper(t, 1.0);
            Vec fix = Vec::Zero(n + 1);
            fix(i) = 1.0;
            prob.add_row(fix, lp::Sense::Equal, sign);

            auto add_rays = [&](const PolyhedralCone& c, double orient) {
                for (const auto& r : c.rays())
                {
                    Vec row = Vec::Zero(n + 1);
                    row.head(n) = orient * r.normalized();
                    row(t) = -1.0;
                    prob.add_row(row, lp::Sense::GreaterEq, 0.0);
                }
                for (const auto& l : c.lineality())
                {
                    Vec row = Vec::Zero(n + 1);
                    row.head(n) = l.normalized();
                    prob.add_row(row, lp::Sense::Equal, 0.0);
                }
            };
            add_rays(k1, 1.0);
            add_rays(k2, -1.0);

            const auto res = lp::solve(prob);
            if (res.status != lp::Status::Optimal)
                continue;
            const double slack = res.x(t);
            if (!best || slack > best->margin + 1e-12)
                best = SeparationWitness{res.x.head(n), slack};
        }
    }
    if (!best)
        return std::nullopt;

    // Report the realized margin and clean round-off on the sign constraints.
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& r : k1.rays())
        margin = std::min(margin, best->xi.dot(r.normalized()));
    for (const auto& r : k2.rays())
        margin = std::min(margin, -best->xi.dot(r.normalized()));
    best->margin = std::isfinite(margin) ? std::max(0.0, margin) : 0.0;
    return best;
}

std::optional<Vec> common_ray(const PolyhedralCone& k1, const PolyhedralCone& k2)
{
    check_dim(k1, k2);
    const int n = k1.dim();
    const auto r1 = static_cast<int>(k1.rays().size());
    const auto l1 = static_cast<int>(k1.lineality().size());
    const auto r2 = static_cast<int>(k2.rays().size());
    const auto l2 = static_cast<int>(k2.lineality().size());
    const int nv = r1 + l1 + r2 + l2;
    if (r1 + l1 == 0 || r2 + l2 == 0)
        return std::nullopt;

    auto gen1 = [&](int j) -> const Vec& {
        return j < r1 ? k1.rays()[static_cast<std::size_t>(j)] : k1.lineality()[static_cast<std::size_t>(j - r1)];
    };
    auto gen2 = [&](int j) -> const Vec& {
        return j < r2 ? k2.rays()[static_cast<std::size_t>(j)] : k2.lineality()[static_cast<std::size_t>(j - r2)];
    };

    for (int i = 0; i < n; ++i)
    {
        for (double sign : {1.0, -1.0})
        {
            lp::Problem prob(nv);
            for (int j = r1; j < r1 + l1; ++j)
                prob.set_free(j);
            for (int j = r1 + l1 + r2; j < nv; ++j)
                prob.set_free(j);
            for (int c = 0; c < n; ++c)
            {
                Vec row(nv);
                for (int j = 0; j < r1 + l1; ++j)
                    row(j) = gen1(j)(c);
                for (int j = 0; j < r2 + l2; ++j)
                    row(r1 + l1 + j) = -gen2(j)(c);
                prob.add_row(row, lp::Sense::Equal, 0.0);
            }
            Vec fix = Vec::Zero(nv);
            for (int j = 0; j < r1 + l1; ++j)
                fix(j) = gen1(j)(i);
            prob.add_row(fix, lp::Sense::Equal, sign);
            const auto res = lp::solve(prob);
            if (res.status == lp::Status::Optimal)
            {
                Vec u = Vec::Zero(n);
                for (int j = 0; j < r1 + l1; ++j)
                    u += res.x(j) * gen1(j);
                return Vec(u / u.lpNorm<Eigen::Infinity>());
            }
        }
    }
    return std::nullopt;
}

const char* to_string(Transversality t)
{
    switch (t)
    {
    case Transversality::NotTransverse: return "not_transverse";
    case Transversality::StronglyTransverse: return "strongly_transverse";
    case Transversality::ComplementarySubspaces: return "complementary_subspaces";
    }
    return "unknown";
}

Transversality classify_transversality(const PolyhedralCone& k1, const PolyhedralCone& k2)
{
    check_dim(k1, k2);
    if (linear_separation(k1, k2))
        return Transversality::NotTransverse;
    if (common_ray(k1, k2))
        return Transversality::StronglyTransverse;
    return Transversality::ComplementarySubspaces;
}

} // namespace gapscope::cones

namespace gapscope::cones
{

PolyhedralCone with_detected_lineality(const PolyhedralCone& cone, double tol)
{
    std::vector<Vec> rays;
    std::vector<Vec> lin = cone.lineality();
    for (const auto& r : cone.rays())
    {
        if (cone_contains(cone, -r.normalized(), tol))
            lin.push_back(r);
        else
            rays.push_back(r);
    }
    return PolyhedralCone(cone.dim(), rays, lin);
}

} // namespace gapscope::cones
