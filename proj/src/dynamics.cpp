#include "gapscope/dynamics.hpp"

#include "gapscope/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gapscope::dynamics
{

// ---------------------------------------------------------------- ControlSet

ControlSet ControlSet::box(Vec lo, Vec hi, int samples_per_axis)
{
    require(lo.size() == hi.size() && lo.size() > 0, ErrorKind::Dimension, "box bounds disagree in size");
    require((lo.array() <= hi.array()).all(), ErrorKind::Input, "box lower bound exceeds upper bound");
    require(samples_per_axis >= 2, ErrorKind::Input, "box needs at least two samples per axis");
    ControlSet c;
    c.type_ = Type::Box;
    c.dim_ = static_cast<int>(lo.size());
    c.lo_ = std::move(lo);
    c.hi_ = std::move(hi);
    c.samples_per_axis_ = samples_per_axis;
    return c;
}

ControlSet ControlSet::unbounded(int m)
{
    const double inf = std::numeric_limits<double>::infinity();
    return box(Vec::Constant(m, -inf), Vec::Constant(m, inf));
}

ControlSet ControlSet::finite(std::vector<Vec> values)
{
    require(!values.empty(), ErrorKind::Input, "finite control set is empty");
    ControlSet c;
    c.type_ = Type::Finite;
    c.dim_ = static_cast<int>(values.front().size());
    for (const auto& v : values)
        require(v.size() == c.dim_, ErrorKind::Dimension, "finite control values disagree in size");
    c.values_ = std::move(values);
    return c;
}

bool ControlSet::contains(const Vec& w, double tol) const
{
    if (w.size() != dim_)
        return false;
    if (type_ == Type::Box)
        return ((w.array() >= lo_.array() - tol) && (w.array() <= hi_.array() + tol)).all();
    return std::any_of(values_.begin(), values_.end(),
                       [&](const Vec& v) { return (v - w).cwiseAbs().maxCoeff() <= tol; });
}

std::vector<Vec> ControlSet::samples() const
{
    if (type_ == Type::Finite)
        return values_;
    require(lo_.allFinite() && hi_.allFinite(), ErrorKind::Input,
            "cannot sample an unbounded control box; supply an explicit sample list");
    // Tensor grid with samples_per_axis points per axis.
    std::vector<Vec> out;
    const int k = samples_per_axis_;
    std::vector<int> idx(static_cast<std::size_t>(dim_), 0);
    while (true)
    {
        Vec v(dim_);
        for (int i = 0; i < dim_; ++i)
            v(i) = lo_(i) + (hi_(i) - lo_(i)) * idx[static_cast<std::size_t>(i)] / (k - 1);
        out.push_back(v);
        int i = 0;
        while (i < dim_ && ++idx[static_cast<std::size_t>(i)] == k)
            idx[static_cast<std::size_t>(i++)] = 0;
        if (i == dim_)
            break;
    }
    return out;
}

// ---------------------------------------------------------------- SystemSpec

SystemSpec::SystemSpec(int n, int m, double horizon, PolyField drift, std::vector<PolyField> channels,
                       ControlSet control_set, std::vector<TableEntry> table,
                       std::vector<double> jump_times, double c_bound)
    : n_(n), m_(m), horizon_(horizon), drift_(std::move(drift)), channels_(std::move(channels)),
      control_set_(std::move(control_set)), table_(std::move(table)),
      jump_times_(std::move(jump_times)), c_bound_(c_bound)
{
    require(n > 0 && m > 0, ErrorKind::Input, "state and control dimensions must be positive");
    require(horizon > 0.0 && std::isfinite(horizon), ErrorKind::Input, "horizon must be positive");
    auto check_field = [n](const PolyField& f, const char* what) {
        require(f.out_dim() == n && f.num_vars() == n, ErrorKind::Dimension,
                std::string(what) + " must map R^n to R^n");
    };
    check_field(drift_, "drift");
    require(static_cast<int>(channels_.size()) == m || channels_.empty(), ErrorKind::Dimension,
            "expected one channel field per control component");
    for (const auto& c : channels_)
        check_field(c, "channel");
    for (const auto& t : table_)
    {
        check_field(t.field, "table field");
        require(t.value.size() == m, ErrorKind::Dimension, "table value has wrong control dimension");
    }
    require(control_set_.dim() == m, ErrorKind::Dimension, "control set dimension differs from m");
    for (double t : jump_times_)
        require(t > 0.0 && t < horizon, ErrorKind::Input, "jump times must lie inside (0, S)");
    std::sort(jump_times_.begin(), jump_times_.end());
    require(c_bound_ >= 0.0, ErrorKind::Input, "c_bound must be non-negative");
}

const TableEntry* SystemSpec::lookup(const Vec& w) const
{
    for (const auto& t : table_)
        if ((t.value - w).cwiseAbs().maxCoeff() <= 1e-9)
            return &t;
    throw Error(ErrorKind::Input, "control value is not in the system's field table");
}

Vec SystemSpec::f(double s, const Vec& y, const Vec& w, double piece_s) const
{
    Vec out = drift_.eval(s, y, piece_s);
    for (std::size_t j = 0; j < channels_.size(); ++j)
        if (w(static_cast<Eigen::Index>(j)) != 0.0)
            out += w(static_cast<Eigen::Index>(j)) * channels_[j].eval(s, y, piece_s);
    if (!table_.empty())
        out += lookup(w)->field.eval(s, y, piece_s);
    return out;
}

Mat SystemSpec::dfdy(double s, const Vec& y, const Vec& w, double piece_s) const
{
    Mat out = drift_.jacobian(s, y, piece_s);
    for (std::size_t j = 0; j < channels_.size(); ++j)
        if (w(static_cast<Eigen::Index>(j)) != 0.0)
            out += w(static_cast<Eigen::Index>(j)) * channels_[j].jacobian(s, y, piece_s);
    if (!table_.empty())
        out += lookup(w)->field.jacobian(s, y, piece_s);
    return out;
}

// ---------------------------------------------------------------- Grid / ControlPath

Grid::Grid(std::vector<double> nodes) : nodes_(std::move(nodes))
{
    require(nodes_.size() >= 2, ErrorKind::Grid, "grid needs at least one cell");
    for (std::size_t k = 0; k + 1 < nodes_.size(); ++k)
        require(nodes_[k + 1] > nodes_[k], ErrorKind::Grid, "grid nodes must increase strictly");
}

Grid Grid::uniform(double horizon, std::size_t cells)
{
    require(cells >= 1, ErrorKind::Grid, "grid needs at least one cell");
    require(horizon > 0.0, ErrorKind::Grid, "grid horizon must be positive");
    std::vector<double> nodes(cells + 1);
    for (std::size_t k = 0; k <= cells; ++k)
        nodes[k] = horizon * static_cast<double>(k) / static_cast<double>(cells);
    return Grid(std::move(nodes));
}

std::optional<std::size_t> Grid::find_node(double s) const
{
    const double tol = 1e-9 * std::max(1.0, std::abs(horizon()));
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), s - tol);
    if (it != nodes_.end() && std::abs(*it - s) <= tol)
        return static_cast<std::size_t>(it - nodes_.begin());
    return std::nullopt;
}

std::size_t Grid::cell_of(double s) const
{
    if (s >= nodes_.back())
        return cells() - 1;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), s);
    if (it == nodes_.begin())
        return 0;
    return static_cast<std::size_t>(it - nodes_.begin()) - 1;
}

bool Grid::operator==(const Grid& other) const { return nodes_ == other.nodes_; }

ControlPath::ControlPath(Grid g, std::vector<Vec> v) : grid(std::move(g)), values(std::move(v))
{
    require(values.size() == grid.cells(), ErrorKind::Grid,
            "control has " + std::to_string(values.size()) + " values for " +
                std::to_string(grid.cells()) + " cells");
    for (const auto& x : values)
        require(x.size() == values.front().size(), ErrorKind::Dimension, "control values disagree in size");
}

ControlPath ControlPath::constant(const Grid& grid, const Vec& value)
{
    return ControlPath(grid, std::vector<Vec>(grid.cells(), value));
}

Vec ControlPath::integral() const
{
    Vec acc = Vec::Zero(dim());
    for (std::size_t k = 0; k < values.size(); ++k)
        acc += grid.width(k) * values[k];
    return acc;
}

// ---------------------------------------------------------------- integration

namespace
{

void check_resolves_jumps(const SystemSpec& sys, const Grid& grid)
{
    for (double t : sys.jump_times())
        require(grid.find_node(t).has_value(), ErrorKind::Grid,
                "jump time " + std::to_string(t) + " is not a grid node");
}

double piece_of(const Grid& grid, std::size_t k) { return grid.node(k) + 0.5 * grid.width(k); }

} // namespace

Process integrate(const SystemSpec& sys, const ControlPath& ctrl, const Vec& y0)
{
    require(y0.size() == sys.n(), ErrorKind::Dimension, "initial state has wrong dimension");
    require(ctrl.dim() == sys.m(), ErrorKind::Dimension, "control has wrong dimension");
    require(std::abs(ctrl.grid.end() - sys.horizon()) <= 1e-9 * sys.horizon(), ErrorKind::Grid,
            "control grid does not span the system horizon");
    check_resolves_jumps(sys, ctrl.grid);

    const Vec* last_checked = nullptr;
    std::vector<Vec> states;
    states.reserve(ctrl.grid.size());
    states.push_back(y0);
    Vec y = y0;
    for (std::size_t k = 0; k < ctrl.grid.cells(); ++k)
    {
        const Vec& w = ctrl.values[k];
        if (last_checked == nullptr || (*last_checked - w).cwiseAbs().maxCoeff() != 0.0)
        {
            require(sys.control_set().contains(w), ErrorKind::Input,
                    "control value on cell " + std::to_string(k) + " is outside the control set");
            last_checked = &w;
        }
        const double s = ctrl.grid.node(k);
        const double h = ctrl.grid.width(k);
        const double p = piece_of(ctrl.grid, k);
        const Vec k1 = sys.f(s, y, w, p);
        const Vec k2 = sys.f(s + 0.5 * h, y + 0.5 * h * k1, w, p);
        const Vec k3 = sys.f(s + 0.5 * h, y + 0.5 * h * k2, w, p);
        const Vec k4 = sys.f(s + h, y + h * k3, w, p);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite())
            throw DivergenceError(k, "non-finite state during integration");
        states.push_back(y);
    }
    return Process{ctrl, std::move(states)};
}

Vec hermite_state(const SystemSpec& sys, const Process& proc, std::size_t cell, double theta)
{
    const Grid& g = proc.grid();
    const double h = g.width(cell);
    const double p = piece_of(g, cell);
    const Vec& w = proc.control.values[cell];
    const Vec& y0 = proc.states[cell];
    const Vec& y1 = proc.states[cell + 1];
    const Vec f0 = sys.f(g.node(cell), y0, w, p);
    const Vec f1 = sys.f(g.node(cell + 1), y1, w, p);
    const double t = theta, t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * h * f0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * h * f1;
}

MatrixPath variational_flow(const SystemSpec& sys, const Process& proc, std::size_t from_node)
{
    const Grid& g = proc.grid();
    require(from_node < g.size(), ErrorKind::Grid, "base node outside the grid");
    const int n = sys.n();
    MatrixPath out;
    out.base = from_node;
    out.matrices.reserve(g.size() - from_node);
    Mat m = Mat::Identity(n, n);
    out.matrices.push_back(m);
    for (std::size_t k = from_node; k < g.cells(); ++k)
    {
        const Vec& w = proc.control.values[k];
        const double s = g.node(k);
        const double h = g.width(k);
        const double p = piece_of(g, k);
        const Vec& y = proc.states[k];

        const Vec fy1 = sys.f(s, y, w, p);
        const Mat fm1 = sys.dfdy(s, y, w, p) * m;
        const Vec y2 = y + 0.5 * h * fy1;
        const Mat m2 = m + 0.5 * h * fm1;
        const Vec fy2 = sys.f(s + 0.5 * h, y2, w, p);
        const Mat fm2 = sys.dfdy(s + 0.5 * h, y2, w, p) * m2;
        const Vec y3 = y + 0.5 * h * fy2;
        const Mat m3 = m + 0.5 * h * fm2;
        const Vec fy3 = sys.f(s + 0.5 * h, y3, w, p);
        const Mat fm3 = sys.dfdy(s + 0.5 * h, y3, w, p) * m3;
        const Vec y4 = y + h * fy3;
        const Mat m4 = m + h * fm3;
        const Mat fm4 = sys.dfdy(s + h, y4, w, p) * m4;
        m += (h / 6.0) * (fm1 + 2.0 * fm2 + 2.0 * fm3 + fm4);
        if (!m.allFinite())
            throw DivergenceError(k, "non-finite variational matrix");
        out.matrices.push_back(m);
    }
    return out;
}

AdjointPath adjoint(const SystemSpec& sys, const Process& proc, const Vec& xi)
{
    require(xi.size() == sys.n(), ErrorKind::Dimension, "terminal covector has wrong dimension");
    require(xi.allFinite(), ErrorKind::Input, "terminal covector is not finite");
    const Grid& g = proc.grid();
    std::vector<Vec> lam(g.size());
    lam.back() = xi;
    if (xi.isZero(0.0))
    {
        std::fill(lam.begin(), lam.end(), xi);
        return AdjointPath{std::move(lam)};
    }
    for (std::size_t k = g.cells(); k-- > 0;)
    {
        const Vec& w = proc.control.values[k];
        const double s0 = g.node(k);
        const double h = g.width(k);
        const double p = piece_of(g, k);
        const Vec ymid = hermite_state(sys, proc, k, 0.5);
        auto rhs = [&](double s, const Vec& y, const Vec& l) -> Vec {
            return -(sys.dfdy(s, y, w, p).transpose() * l);
        };
        const Vec& l1 = lam[k + 1];
        const Vec k1 = rhs(s0 + h, proc.states[k + 1], l1);
        const Vec k2 = rhs(s0 + 0.5 * h, ymid, l1 - 0.5 * h * k1);
        const Vec k3 = rhs(s0 + 0.5 * h, ymid, l1 - 0.5 * h * k2);
        const Vec k4 = rhs(s0, proc.states[k], l1 - h * k3);
        lam[k] = l1 - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!lam[k].allFinite())
            throw DivergenceError(k, "non-finite adjoint covector");
    }
    return AdjointPath{std::move(lam)};
}

double pseudo_distance(const SystemSpec& sys, const ControlPath& w1, const ControlPath& w2, const Vec& y0)
{
    require(std::abs(w1.grid.end() - w2.grid.end()) <= 1e-9 * sys.horizon(), ErrorKind::Input,
            "controls have different horizons");
    const Process p1 = integrate(sys, w1, y0);
    const Process p2 = integrate(sys, w2, y0);
    double d = 0.0;
    if (w1.grid == w2.grid)
    {
        for (std::size_t k = 0; k < p1.states.size(); ++k)
            d = std::max(d, (p1.states[k] - p2.states[k]).norm());
        return d;
    }
    // Different partitions: compare on the union of nodes by linear interpolation.
    auto interp = [](const Process& p, double s) -> Vec {
        const Grid& g = p.grid();
        const std::size_t k = g.cell_of(s);
        const double t = (s - g.node(k)) / g.width(k);
        return (1.0 - t) * p.states[k] + t * p.states[k + 1];
    };
    std::vector<double> all = w1.grid.nodes();
    all.insert(all.end(), w2.grid.nodes().begin(), w2.grid.nodes().end());
    for (double s : all)
        d = std::max(d, (interp(p1, s) - interp(p2, s)).norm());
    return d;
}

std::vector<double> sd_jump_diagnostic(const SystemSpec& sys, const Process& proc, double r, double threshold)
{
    require(r > 0.0, ErrorKind::Input, "stencil radius must be positive");
    const Grid& g = proc.grid();
    const int n = sys.n();

    std::vector<Vec> samples;
    const auto& cs = sys.control_set();
    if (cs.type() == ControlSet::Type::Finite || (cs.lo().allFinite() && cs.hi().allFinite()))
        samples = cs.samples();
    else
        for (const auto& v : proc.control.values)
            if (std::none_of(samples.begin(), samples.end(), [&](const Vec& u) { return u == v; }))
                samples.push_back(v);

    double hmin = g.width(0);
    for (std::size_t k = 1; k < g.cells(); ++k)
        hmin = std::min(hmin, g.width(k));
    constexpr int kLevels = 10;
    constexpr int kQuad = 16;
    const double delta = hmin * std::ldexp(1.0, -kLevels);

    std::vector<double> flagged;
    for (std::size_t k = 1; k < g.cells(); ++k)
    {
        const double sbar = g.node(k);
        const Vec& y = proc.states[k];
        bool hit = false;
        for (const auto& w : samples)
        {
            const Vec ref = sys.f(sbar, y, w, sbar);
            auto lambda_r = [&](double s) {
                double sup = (sys.f(s, y, w, s) - ref).norm();
                for (int i = 0; i < n; ++i)
                {
                    for (double sign : {1.0, -1.0})
                    {
                        const Vec x = y + sign * r * Vec::Unit(n, i);
                        sup = std::max(sup, (sys.f(s, x, w, s) - ref).norm());
                    }
                }
                return sup;
            };
            for (double dir : {1.0, -1.0})
            {
                double avg = 0.0;
                for (int q = 0; q < kQuad; ++q)
                    avg += lambda_r(sbar + dir * delta * (q + 0.5) / kQuad);
                avg /= kQuad;
                if (avg > threshold)
                    hit = true;
            }
            if (hit)
                break;
        }
        if (hit)
            flagged.push_back(sbar);
    }
    return flagged;
}

} // namespace gapscope::dynamics
