#include "gapscope/variations.hpp"

#include "gapscope/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gapscope::variations
{

using dynamics::Grid;

bool in_simplex(const Vec& gamma, double tol)
{
    return (gamma.array() >= -tol).all() && gamma.sum() <= 1.0 + tol;
}

void RelaxedControl::validate() const
{
    require(static_cast<std::size_t>(gamma.size()) == companions.size(), ErrorKind::Dimension,
            "gamma length differs from the number of companion controls");
    require(in_simplex(gamma), ErrorKind::Input, "gamma is outside the simplex");
    for (const auto& c : companions)
        require(c.grid == base.grid, ErrorKind::Grid, "companion controls must share the base grid");
}

void validate_needles(const SystemSpec& sys, const Grid& grid, const std::vector<NeedleSpec>& needles)
{
    double prev = 0.0;
    for (std::size_t i = 0; i < needles.size(); ++i)
    {
        const auto& nd = needles[i];
        const std::string tag = "needle " + std::to_string(i);
        require(nd.value.size() == sys.m(), ErrorKind::Dimension, tag + " value has wrong dimension");
        require(nd.s > 0.0 && nd.s <= sys.horizon() * (1.0 + 1e-12), ErrorKind::Input, tag + " time outside (0, S]");
        require(nd.width >= 0.0, ErrorKind::Input, tag + " has negative width");
        require(nd.s > prev, ErrorKind::Input, tag + " is not after the previous needle");
        require(nd.s - nd.width >= prev - 1e-12, ErrorKind::Input, tag + " overlaps the previous needle");
        require(grid.find_node(nd.s).has_value(), ErrorKind::Grid, tag + " time is not a grid node");
        for (double t : sys.jump_times())
            require(std::abs(t - nd.s) > 1e-9 * sys.horizon(), ErrorKind::Input, tag + " sits on a jump time");
        require(sys.control_set().contains(nd.value), ErrorKind::Input, tag + " value outside the control set");
        prev = nd.s;
    }
}

ControlPath needle_control(const ControlPath& base, const NeedleSpec& needle)
{
    if (needle.width == 0.0)
        return base;
    const auto hi = base.grid.find_node(needle.s);
    const auto lo = base.grid.find_node(needle.s - needle.width);
    require(hi && lo, ErrorKind::Grid, "needle interval is not resolved by the grid");
    require(needle.value.size() == base.dim(), ErrorKind::Dimension, "needle value has wrong dimension");
    ControlPath out = base;
    for (std::size_t k = *lo; k < *hi; ++k)
        out.values[k] = needle.value;
    return out;
}

Process relaxed_integrate(const SystemSpec& sys, const RelaxedControl& rc, const Vec& y0)
{
    rc.validate();
    require(y0.size() == sys.n(), ErrorKind::Dimension, "initial state has wrong dimension");
    const Grid& g = rc.base.grid;
    require(std::abs(g.end() - sys.horizon()) <= 1e-9 * sys.horizon(), ErrorKind::Grid,
            "control grid does not span the system horizon");
    for (double t : sys.jump_times())
        require(g.find_node(t).has_value(), ErrorKind::Grid, "jump time is not a grid node");
    for (std::size_t k = 0; k < g.cells(); ++k)
    {
        require(sys.control_set().contains(rc.base.values[k]), ErrorKind::Input, "base control outside the set");
        for (const auto& c : rc.companions)
            require(sys.control_set().contains(c.values[k]), ErrorKind::Input, "companion control outside the set");
    }

    std::vector<Vec> states;
    states.reserve(g.size());
    states.push_back(y0);
    Vec y = y0;
    for (std::size_t k = 0; k < g.cells(); ++k)
    {
        const Vec& w = rc.base.values[k];
        const double s = g.node(k);
        const double h = g.width(k);
        const double p = s + 0.5 * h;
        auto f_gamma = [&](double t, const Vec& x) -> Vec {
            Vec out = sys.f(t, x, w, p);
            const Vec base_val = out;
            for (std::size_t i = 0; i < rc.companions.size(); ++i)
            {
                const double gi = rc.gamma(static_cast<Eigen::Index>(i));
                if (gi != 0.0)
                    out += gi * (sys.f(t, x, rc.companions[i].values[k], p) - base_val);
            }
            return out;
        };
        const Vec k1 = f_gamma(s, y);
        const Vec k2 = f_gamma(s + 0.5 * h, y + 0.5 * h * k1);
        const Vec k3 = f_gamma(s + 0.5 * h, y + 0.5 * h * k2);
        const Vec k4 = f_gamma(s + h, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite())
            throw DivergenceError(k, "non-finite state during relaxed integration");
        states.push_back(y);
    }
    return Process{rc.base, std::move(states)};
}

VariationalCone variational_cone(const SystemSpec& sys, const Process& proc, const std::vector<NeedleSpec>& needles)
{
    const Grid& g = proc.grid();
    validate_needles(sys, g, needles);
    VariationalCone out{cones::PolyhedralCone(sys.n()), {}, needles};
    for (const auto& nd : needles)
    {
        const std::size_t k = *g.find_node(nd.s);
        // The reference value just before sᵢ, matching the needle interval [sᵢ − δ, sᵢ].
        const std::size_t cell = k - 1;
        const double piece = g.node(cell) + 0.5 * g.width(cell);
        const Vec& y = proc.states[k];
        const Vec jump = sys.f(nd.s, y, nd.value, piece) - sys.f(nd.s, y, proc.control.values[cell], piece);
        const auto flow = dynamics::variational_flow(sys, proc, k);
        out.generators.push_back(flow.matrices.back() * jump);
    }
    out.cone = cones::with_detected_lineality(cones::PolyhedralCone(sys.n(), out.generators));
    return out;
}

ControlPath refine(const ControlPath& ctrl, std::size_t factor)
{
    require(factor >= 1, ErrorKind::Grid, "refinement factor must be positive");
    if (factor == 1)
        return ctrl;
    std::vector<double> nodes;
    std::vector<Vec> values;
    const Grid& g = ctrl.grid;
    nodes.reserve(g.cells() * factor + 1);
    for (std::size_t k = 0; k < g.cells(); ++k)
    {
        for (std::size_t j = 0; j < factor; ++j)
        {
            nodes.push_back(g.node(k) + g.width(k) * static_cast<double>(j) / static_cast<double>(factor));
            values.push_back(ctrl.values[k]);
        }
    }
    nodes.push_back(g.end());
    return ControlPath(Grid(std::move(nodes)), std::move(values));
}

std::vector<ExpansionRow> expansion_check(const SystemSpec& sys, const Process& proc,
                                          const std::vector<NeedleSpec>& needles, const Vec& gamma,
                                          const std::vector<double>& eps_list)
{
    require(static_cast<std::size_t>(gamma.size()) == needles.size(), ErrorKind::Dimension,
            "gamma length differs from the number of needles");
    require(in_simplex(gamma), ErrorKind::Input, "gamma is outside the simplex");
    const auto cone = variational_cone(sys, proc, needles);
    const Vec y0 = proc.states.front();

    // Smallest cell of the reference grid.
    const Grid& g = proc.grid();
    double h = g.width(0);
    for (std::size_t k = 1; k < g.cells(); ++k)
        h = std::min(h, g.width(k));

    std::vector<ExpansionRow> rows;
    for (double eps : eps_list)
    {
        require(eps > 0.0, ErrorKind::Input, "eps values must be positive");
        double prev = 0.0;
        for (const auto& nd : needles)
        {
            require(nd.s - eps >= prev - 1e-12, ErrorKind::Grid,
                    "eps " + std::to_string(eps) + " makes needles overlap");
            prev = nd.s;
        }

        std::size_t factor = 0;
        for (std::size_t r = 1; r <= 256; ++r)
        {
            const double cells = eps * static_cast<double>(r) / h;
            if (std::abs(cells - std::round(cells)) <= 1e-6 * std::max(1.0, cells) && std::round(cells) >= 1.0)
            {
                factor = r;
                break;
            }
        }
        require(factor > 0, ErrorKind::Grid, "grid too coarse to resolve eps " + std::to_string(eps));

        const ControlPath base = refine(proc.control, factor);
        const Process ref = dynamics::integrate(sys, base, y0);
        RelaxedControl rc{base, {}, gamma};
        for (const auto& nd : needles)
            rc.companions.push_back(needle_control(base, NeedleSpec{nd.s, eps, nd.value}));
        const Process pert = relaxed_integrate(sys, rc, y0);

        Vec predicted = ref.terminal();
        for (std::size_t i = 0; i < needles.size(); ++i)
            predicted += gamma(static_cast<Eigen::Index>(i)) * eps * cone.generators[i];
        const double res = (pert.terminal() - predicted).norm();
        rows.push_back({eps, res, res / eps});
    }
    return rows;
}

ControlPath chattering(const ControlPath& base, const std::vector<ControlPath>& companions, const Vec& gamma,
                       std::size_t blocks)
{
    require(static_cast<std::size_t>(gamma.size()) == companions.size(), ErrorKind::Dimension,
            "gamma length differs from the number of companions");
    require(in_simplex(gamma), ErrorKind::Input, "gamma is outside the simplex");
    for (const auto& c : companions)
        require(c.grid == base.grid, ErrorKind::Grid, "companions must share the base grid");
    const Grid& g = base.grid;
    require(blocks >= 1 && g.cells() % blocks == 0, ErrorKind::Grid,
            "K = " + std::to_string(blocks) + " does not divide the " + std::to_string(g.cells()) + " grid cells");
    if ((gamma.array() == 0.0).all())
        return base;

    const std::size_t per_block = g.cells() / blocks;
    const double snap = 1e-12 * std::max(1.0, g.horizon());
    std::vector<double> nodes;
    std::vector<Vec> values;
    nodes.push_back(g.start());

    for (std::size_t b = 0; b < blocks; ++b)
    {
        const std::size_t first = b * per_block;
        const double a = g.node(first);
        const double e = g.node(first + per_block);
        const double len = e - a;

        // Owner boundaries inside the block: cumulative γ fractions.
        std::vector<double> bounds{a};
        double cum = 0.0;
        for (Eigen::Index i = 0; i < gamma.size(); ++i)
        {
            cum += gamma(i);
            bounds.push_back(a + len * std::min(cum, 1.0));
        }
        bounds.push_back(e);

        std::vector<double> cut;
        for (std::size_t k = first; k <= first + per_block; ++k)
            cut.push_back(g.node(k));
        for (double x : bounds)
        {
            const bool near = std::any_of(cut.begin(), cut.end(), [&](double c) { return std::abs(c - x) <= snap; });
            if (!near)
                cut.push_back(x);
        }
        std::sort(cut.begin(), cut.end());

        for (std::size_t j = 0; j + 1 < cut.size(); ++j)
        {
            const double mid = 0.5 * (cut[j] + cut[j + 1]);
            // Owner index: first bound interval containing mid; last interval is the base.
            std::size_t owner = 0;
            while (owner + 1 < bounds.size() && mid >= bounds[owner + 1])
                ++owner;
            const ControlPath& src = owner < companions.size() ? companions[owner] : base;
            values.push_back(src.value_at(mid));
            nodes.push_back(cut[j + 1]);
        }
    }
    return ControlPath(Grid(std::move(nodes)), std::move(values));
}

ControlPath concatenate(const ControlPath& v1, const ControlPath& v2, double s_bar)
{
    require(v1.grid == v2.grid, ErrorKind::Grid, "concatenated controls must share a grid");
    const auto k = v1.grid.find_node(s_bar);
    require(k.has_value(), ErrorKind::Grid, "concatenation time is not a grid node");
    require(*k > 0 && *k < v1.grid.cells(), ErrorKind::Grid, "concatenation time must be interior");
    ControlPath out = v1;
    for (std::size_t j = *k; j < v1.grid.cells(); ++j)
        out.values[j] = v2.values[j];
    return out;
}

} // namespace gapscope::variations
