#include "gapscope/impulsive.hpp"

#include "gapscope/error.hpp"
#include "gapscope/lp.hpp"

#include <algorithm>
#include <cmath>

namespace gapscope::impulsive
{

namespace
{

constexpr double kNormTol = 1e-12;

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x)
{
    if (x <= xs.front())
        return ys.front();
    if (x >= xs.back())
        return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - xs.begin()) - 1;
    const double th = (x - xs[k]) / (xs[k + 1] - xs[k]);
    return ys[k] + th * (ys[k + 1] - ys[k]);
}

/// Term of a (t, x) polynomial rewritten over y = (z⁰, z, ν).
PolyTerm lift(const PolyTerm& t, int n, double scale)
{
    PolyTerm out;
    out.coef = t.coef * scale;
    out.s_pow = 0;
    out.y_pows.assign(static_cast<std::size_t>(n + 2), 0);
    out.y_pows[0] = t.s_pow;
    for (int i = 0; i < n; ++i)
        out.y_pows[static_cast<std::size_t>(i + 1)] = t.y_pows[static_cast<std::size_t>(i)];
    return out;
}

PolyTerm constant_term(int vars, double c)
{
    PolyTerm t;
    t.coef = c;
    t.y_pows.assign(static_cast<std::size_t>(vars), 0);
    return t;
}

bool in_hull(const std::vector<Vec>& pts, const Vec& q)
{
    const int k = static_cast<int>(pts.size());
    lp::Problem prob(k);
    prob.set_objective(Vec::Zero(k));
    prob.add_row(Vec::Ones(k), lp::Sense::Equal, 1.0);
    for (Eigen::Index i = 0; i < q.size(); ++i)
    {
        Vec row(k);
        for (int j = 0; j < k; ++j)
            row(j) = pts[static_cast<std::size_t>(j)](i);
        prob.add_row(row, lp::Sense::Equal, q(i));
    }
    return lp::solve(prob).status == lp::Status::Optimal;
}

} // namespace

const char* to_string(UTag t) { return t == UTag::CoCone ? "co-cone" : "conic-dense"; }

UTag utag_from_string(const std::string& s)
{
    if (s == "co-cone")
        return UTag::CoCone;
    if (s == "conic-dense")
        return UTag::ConicDense;
    throw Error(ErrorKind::Input, "unknown U tag '" + s + "'");
}

void ImpulsiveProblem::validate() const
{
    require(n >= 1 && m >= 1, ErrorKind::Input, "impulsive problem needs n, m ≥ 1");
    require(x0.size() == n, ErrorKind::Dimension, "initial state has wrong dimension");
    require(drift.out_dim() == n && drift.num_vars() == n, ErrorKind::Dimension, "drift must map R^n to R^n");
    require(static_cast<int>(channels.size()) == m, ErrorKind::Dimension, "expected one channel per control");
    auto no_pieces = [](const PolyField& f) {
        for (const auto& p : f.comps())
            for (const auto& t : p.terms())
                require(std::isinf(t.s_from) && std::isinf(t.s_to), ErrorKind::Input,
                        "impulsive problems do not support piecewise terms");
    };
    no_pieces(drift);
    for (const auto& g : channels)
    {
        require(g.out_dim() == n && g.num_vars() == n, ErrorKind::Dimension, "channel must map R^n to R^n");
        no_pieces(g);
    }
    require(!u_samples.empty(), ErrorKind::Input, "U sample list is empty");
    for (const auto& u : u_samples)
        require(u.size() == m, ErrorKind::Dimension, "U sample has wrong dimension");
    require(s_hat > 0.0, ErrorKind::Input, "S_hat must be positive");
    require(k_bound >= 0.0, ErrorKind::Input, "K bound must be non-negative");
}

Vec ImpulsiveProblem::f(double t, const Vec& x) const { return drift.eval(t, x, t); }

OriginalProcess integrate_original(const ImpulsiveProblem& prob, const ControlPath& u)
{
    prob.validate();
    require(u.dim() == prob.m, ErrorKind::Dimension, "control has wrong dimension");
    require(std::abs(u.grid.start() - prob.t1) <= 1e-12 * std::max(1.0, std::abs(prob.t1)), ErrorKind::Grid,
            "control grid must start at t1");
    const Grid& g = u.grid;
    OriginalProcess out{u, {prob.x0}, {0.0}};
    Vec x = prob.x0;
    double eta = 0.0;
    for (std::size_t k = 0; k < g.cells(); ++k)
    {
        const Vec& uk = u.values[k];
        auto rhs = [&](double t, const Vec& y) -> Vec {
            Vec r = prob.drift.eval(t, y, t);
            for (int j = 0; j < prob.m; ++j)
                r += uk(j) * prob.channels[static_cast<std::size_t>(j)].eval(t, y, t);
            return r;
        };
        const double t = g.node(k);
        const double h = g.width(k);
        const Vec k1 = rhs(t, x);
        const Vec k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
        const Vec k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
        const Vec k4 = rhs(t + h, x + h * k3);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        eta += h * uk.norm();
        if (!x.allFinite())
            throw DivergenceError(k, "non-finite state in the original impulsive system");
        out.x.push_back(x);
        out.eta.push_back(eta);
    }
    return out;
}

double Reparam::sigma(double t) const { return interp(t_nodes, s_nodes, t); }

double Reparam::sigma_inv(double s) const { return interp(s_nodes, t_nodes, s); }

Reparam reparameterize(const ControlPath& u, double s_hat)
{
    const Grid& g = u.grid;
    require(g.end() > g.start(), ErrorKind::Input, "t2 must exceed t1");
    require(s_hat > 0.0, ErrorKind::Input, "S_hat must be positive");
    Reparam r;
    std::vector<double> acc{0.0};
    for (std::size_t k = 0; k < g.cells(); ++k)
        acc.push_back(acc.back() + g.width(k) * (1.0 + u.values[k].norm()));
    r.denom = acc.back();
    r.t_nodes = g.nodes();
    for (double a : acc)
        r.s_nodes.push_back(s_hat * a / r.denom);
    r.s_nodes.back() = s_hat;
    return r;
}

double SpaceTimeProcess::normalization_defect() const
{
    double worst = 0.0;
    for (const auto& cell : copies)
        for (const auto& w : cell)
            worst = std::max(worst, std::abs(w(0) + w.tail(w.size() - 1).norm() - 1.0));
    return worst;
}

SpaceTimeProcess embed(const ImpulsiveProblem& prob, const OriginalProcess& orig, Case kind)
{
    prob.validate();
    const Reparam rep = reparameterize(orig.u, prob.s_hat);
    const double d = rep.denom / prob.s_hat - 1.0;
    require(std::abs(d) <= 0.5 + 1e-12, ErrorKind::Horizon,
            "reparameterization constant d = " + std::to_string(d) + " lies outside [-0.5, 0.5]; adjust S_hat");

    SpaceTimeProcess stp;
    stp.kind = kind;
    stp.grid = Grid(rep.s_nodes);
    const std::size_t copies = kind == Case::Convex ? static_cast<std::size_t>(prob.n + 3) : 1;
    Vec a = Vec::Zero(static_cast<Eigen::Index>(copies));
    a(0) = 1.0;
    for (std::size_t k = 0; k < orig.grid().cells(); ++k)
    {
        const Vec& u = orig.u.values[k];
        Vec w(prob.m + 1);
        w(0) = 1.0;
        w.tail(prob.m) = u;
        w /= 1.0 + u.norm();
        stp.a.push_back(a);
        stp.copies.emplace_back(copies, w);
        stp.d.push_back(d);
    }
    for (std::size_t k = 0; k < orig.grid().size(); ++k)
    {
        Vec y(prob.n + 2);
        y(0) = orig.grid().node(k);
        y.segment(1, prob.n) = orig.x[k];
        y(prob.n + 1) = orig.eta[k];
        stp.states.push_back(y);
    }
    return stp;
}

OriginalProcess invert_embedding(const SpaceTimeProcess& stp)
{
    require(!stp.states.empty() && stp.states.size() == stp.grid.size(), ErrorKind::Grid,
            "space-time process has no states on its grid");
    const int n = static_cast<int>(stp.states.front().size()) - 2;
    std::vector<Vec> u;
    for (std::size_t k = 0; k < stp.grid.cells(); ++k)
    {
        if (stp.kind == Case::Convex)
        {
            const Vec& a = stp.a[k];
            require(std::abs(a(0) - 1.0) <= kNormTol && a.tail(a.size() - 1).cwiseAbs().maxCoeff() <= kNormTol,
                    ErrorKind::Precondition, "convex process is outside the original slice (a ≠ e1)");
        }
        const Vec& w = stp.copies[k].front();
        if (w(0) <= 1e-14)
            throw Error(ErrorKind::NotInvertible,
                        "w0 vanishes on cell " + std::to_string(k) + ": genuinely impulsive process");
        u.push_back(w.tail(w.size() - 1) / w(0));
    }
    std::vector<double> t;
    OriginalProcess out{ControlPath(Grid(std::vector<double>{0.0, 1.0}), {Vec::Zero(1)}), {}, {}};
    for (const auto& y : stp.states)
    {
        t.push_back(y(0));
        out.x.push_back(y.segment(1, n));
        out.eta.push_back(y(n + 1));
    }
    out.u = ControlPath(Grid(std::move(t)), std::move(u));
    return out;
}

Vec flatten_control(const Vec& a, const std::vector<Vec>& copies, double d)
{
    const bool convex = a.size() > 1;
    Eigen::Index len = 1;
    if (convex)
        len += a.size();
    for (const auto& c : copies)
        len += c.size();
    Vec out(len);
    Eigen::Index at = 0;
    if (convex)
    {
        out.head(a.size()) = a;
        at = a.size();
    }
    for (const auto& c : copies)
    {
        out.segment(at, c.size()) = c;
        at += c.size();
    }
    out(at) = d;
    return out;
}

PolyField spacetime_field(const ImpulsiveProblem& prob, const Vec& a, const std::vector<Vec>& copies, double d)
{
    require(static_cast<std::size_t>(a.size()) == copies.size(), ErrorKind::Dimension,
            "weights and copies disagree in number");
    const int n = prob.n;
    const int vars = n + 2;
    std::vector<std::vector<PolyTerm>> comps(static_cast<std::size_t>(vars));
    double rate0 = 0.0;
    double rate_nu = 0.0;
    for (std::size_t i = 0; i < copies.size(); ++i)
    {
        const Vec& w = copies[i];
        require(w.size() == prob.m + 1, ErrorKind::Dimension, "space-time control copy has wrong dimension");
        const double ai = a(static_cast<Eigen::Index>(i)) * (1.0 + d);
        if (ai == 0.0)
            continue;
        rate0 += ai * w(0);
        rate_nu += ai * w.tail(prob.m).norm();
        for (int c = 0; c < n; ++c)
        {
            auto& out = comps[static_cast<std::size_t>(c + 1)];
            if (w(0) != 0.0)
                for (const auto& t : prob.drift.comps()[static_cast<std::size_t>(c)].terms())
                    out.push_back(lift(t, n, ai * w(0)));
            for (int j = 0; j < prob.m; ++j)
            {
                if (w(j + 1) == 0.0)
                    continue;
                for (const auto& t : prob.channels[static_cast<std::size_t>(j)].comps()[static_cast<std::size_t>(c)].terms())
                    out.push_back(lift(t, n, ai * w(j + 1)));
            }
        }
    }
    comps.front().push_back(constant_term(vars, rate0));
    comps.back().push_back(constant_term(vars, rate_nu));
    std::vector<Polynomial> polys;
    for (auto& terms : comps)
        polys.emplace_back(vars, std::move(terms));
    return PolyField(std::move(polys));
}

dynamics::SystemSpec nonconvex_system(const ImpulsiveProblem& prob, const std::vector<Vec>& values)
{
    prob.validate();
    require(!values.empty(), ErrorKind::Input, "space-time control sample is empty");
    const int n = prob.n;
    const int mm = prob.m + 2;
    std::vector<dynamics::TableEntry> table;
    std::vector<Vec> distinct;
    for (const auto& v : values)
    {
        require(v.size() == mm, ErrorKind::Dimension, "space-time control must be (w0, w, d)");
        const bool seen = std::any_of(distinct.begin(), distinct.end(),
                                      [&](const Vec& x) { return (x - v).cwiseAbs().maxCoeff() <= 1e-9; });
        if (seen)
            continue;
        distinct.push_back(v);
        const Vec w = v.head(prob.m + 1);
        table.push_back({v, spacetime_field(prob, Vec::Ones(1), {w}, v(mm - 1))});
    }
    return dynamics::SystemSpec(n + 2, mm, prob.s_hat, PolyField::zero(n + 2, n + 2), {},
                                dynamics::ControlSet::finite(distinct), std::move(table));
}

SpaceTimeProcess spacetime_integrate(const ImpulsiveProblem& prob, const SpaceTimeProcess& controls)
{
    prob.validate();
    const Grid& g = controls.grid;
    require(controls.copies.size() == g.cells() && controls.a.size() == g.cells() && controls.d.size() == g.cells(),
            ErrorKind::Grid, "space-time controls do not match the grid");
    std::vector<Vec> flat;
    std::vector<Vec> distinct;
    std::vector<dynamics::TableEntry> table;
    for (std::size_t k = 0; k < g.cells(); ++k)
    {
        const Vec& a = controls.a[k];
        require((a.array() >= -kNormTol).all() && std::abs(a.sum() - 1.0) <= 1e-9, ErrorKind::Input,
                "weights a are outside the simplex");
        require(std::abs(controls.d[k]) <= 0.5 + 1e-12, ErrorKind::Input, "d outside [-0.5, 0.5]");
        for (const auto& w : controls.copies[k])
            require(w(0) >= -kNormTol && std::abs(w(0) + w.tail(w.size() - 1).norm() - 1.0) <= 1e-9,
                    ErrorKind::Input, "space-time control violates w0 + |w| = 1");
        Vec v = flatten_control(a, controls.copies[k], controls.d[k]);
        flat.push_back(v);
        const bool seen = std::any_of(distinct.begin(), distinct.end(),
                                      [&](const Vec& x) { return (x - v).cwiseAbs().maxCoeff() <= 1e-9; });
        if (!seen)
        {
            distinct.push_back(v);
            table.push_back({v, spacetime_field(prob, a, controls.copies[k], controls.d[k])});
        }
    }
    const int n = prob.n;
    const int mm = static_cast<int>(flat.front().size());
    const dynamics::SystemSpec sys(n + 2, mm, g.end(), PolyField::zero(n + 2, n + 2), {},
                                   dynamics::ControlSet::finite(distinct), std::move(table));
    Vec y0(n + 2);
    y0(0) = prob.t1;
    y0.segment(1, n) = prob.x0;
    y0(n + 1) = 0.0;
    const auto proc = dynamics::integrate(sys, ControlPath(g, std::move(flat)), y0);
    SpaceTimeProcess out = controls;
    out.states = proc.states;
    return out;
}

std::vector<Vec> normalized_samples(const std::vector<Vec>& u_samples)
{
    std::vector<Vec> out;
    for (const auto& u : u_samples)
    {
        Vec w(u.size() + 1);
        w(0) = 1.0;
        w.tail(u.size()) = u;
        out.push_back(w / (1.0 + u.norm()));
    }
    return out;
}

StructureReport structure_check(const std::vector<Vec>& u_samples, UTag tag)
{
    require(u_samples.size() >= 2, ErrorKind::Input, "structure check needs at least two samples");
    const Eigen::Index m = u_samples.front().size();
    for (const auto& u : u_samples)
        require(u.size() == m, ErrorKind::Dimension, "U samples disagree in size");

    StructureReport rep;
    rep.tag = tag;
    if (tag == UTag::CoCone)
    {
        ++rep.probes;
        if (!in_hull(u_samples, Vec::Zero(m)))
        {
            ++rep.failures;
            rep.detail = "0 is not in co(U); ";
        }
        Vec lo = u_samples.front();
        Vec hi = u_samples.front();
        Vec centroid = Vec::Zero(m);
        for (const auto& u : u_samples)
        {
            lo = lo.cwiseMin(u);
            hi = hi.cwiseMax(u);
            centroid += u;
        }
        centroid /= static_cast<double>(u_samples.size());
        std::vector<Vec> hull_pts = u_samples;
        hull_pts.push_back(centroid);
        const double slack = 1e-9 * std::max(1.0, (hi - lo).cwiseAbs().maxCoeff());
        for (const auto& p : hull_pts)
        {
            for (double factor : {2.0, 10.0})
            {
                const Vec q = factor * p;
                if ((q.array() < lo.array() - slack).any() || (q.array() > hi.array() + slack).any())
                    continue;
                ++rep.probes;
                if (!in_hull(u_samples, q))
                    ++rep.failures;
            }
        }
        rep.passed = rep.failures == 0;
        rep.detail += std::to_string(rep.probes) + " hull probes, " + std::to_string(rep.failures) + " outside co(U)";
        return rep;
    }

    for (const auto& u : u_samples)
    {
        const double nu = u.norm();
        if (nu < 1e-12)
            continue;
        const Vec dir = u / nu;
        double reach = 0.0;
        std::vector<double> rhos;
        for (const auto& v : u_samples)
        {
            const double along = v.dot(dir);
            if (along <= 0.0 || (v - along * dir).norm() > 1e-9 * std::max(1.0, v.norm()))
                continue;
            reach = std::max(reach, along);
            rhos.push_back(along / nu);
        }
        for (double r : {1.0, 2.0, 5.0})
        {
            if (r * nu >= reach)
                continue;
            ++rep.probes;
            if (std::none_of(rhos.begin(), rhos.end(), [r](double rho) { return rho > r; }))
                ++rep.failures;
        }
    }
    rep.passed = rep.probes > 0 && rep.failures == 0;
    rep.detail = std::to_string(rep.probes) + " testable (u, r) pairs, " + std::to_string(rep.failures) +
                 " without a scaled witness";
    return rep;
}

GapNcResiduals gap_nc_residuals(const ImpulsiveProblem& prob, const SpaceTimeProcess& stp,
                                const std::vector<Vec>& multipliers, double beta,
                                const cones::PolyhedralCone& cone, const std::vector<Vec>& w_samples)
{
    prob.validate();
    const Grid& g = stp.grid;
    const int n = prob.n;
    const int dim = n + 2;
    for (double d : stp.d)
        require(std::abs(d) <= 1e-12, ErrorKind::Precondition, "hypothesis violated: reference d is not zero");
    require(beta <= 0.0, ErrorKind::Input, "beta must be non-positive");
    require(multipliers.size() == g.size(), ErrorKind::Grid, "multipliers are not on the process grid");
    require(stp.states.size() == g.size(), ErrorKind::Grid, "process states are not on its grid");
    require(cone.dim() == dim, ErrorKind::Dimension, "cone must live in R^(1+n+1)");
    for (const auto& l : multipliers)
        require(l.size() == dim, ErrorKind::Dimension, "multiplier has wrong dimension");
    for (const auto& w : w_samples)
        require(w.size() == prob.m + 1, ErrorKind::Dimension, "W sample must be (w0, w)");

    GapNcResiduals res;
    for (const auto& l : multipliers)
        res.nontriviality = std::max(res.nontriviality, l.norm());

    auto hamiltonian = [&](const Vec& lam, const Vec& y, const Vec& w) {
        const double t = y(0);
        const Vec z = y.segment(1, n);
        const Vec lz = lam.segment(1, n);
        Vec v = w(0) * prob.drift.eval(t, z, t);
        for (int j = 0; j < prob.m; ++j)
            v += w(j + 1) * prob.channels[static_cast<std::size_t>(j)].eval(t, z, t);
        return lam(0) * w(0) + lz.dot(v) + beta * w.tail(prob.m).norm();
    };

    for (std::size_t k = 0; k < g.cells(); ++k)
    {
        const PolyField field = spacetime_field(prob, stp.a[k], stp.copies[k], 0.0);
        const double h = g.width(k);
        auto rhs = [&](std::size_t node) -> Vec {
            const Mat J = field.jacobian(g.node(node), stp.states[node], g.node(node));
            return -(J.transpose() * multipliers[node]);
        };
        const Vec defect = multipliers[k + 1] - multipliers[k] - 0.5 * h * (rhs(k) + rhs(k + 1));
        res.adjoint_defect = std::max(res.adjoint_defect, defect.norm() / h);

        for (std::size_t node : {k, k + 1})
        {
            const Vec& lam = multipliers[node];
            const Vec& y = stp.states[node];
            double hhat = 0.0;
            for (std::size_t i = 0; i < stp.copies[k].size(); ++i)
                hhat += stp.a[k](static_cast<Eigen::Index>(i)) * hamiltonian(lam, y, stp.copies[k][i]);
            for (const auto& w : w_samples)
            {
                const double hw = hamiltonian(lam, y, w);
                for (double d : {-0.5, 0.0, 0.5})
                    res.maximality = std::max(res.maximality, (1.0 + d) * hw - hhat);
            }
        }
    }

    Vec p = multipliers.back();
    p(dim - 1) = beta;
    res.cone_distance = cones::project(cone, Vec(-p)).norm();
    return res;
}

} // namespace gapscope::impulsive
