#pragma once

#include "gapscope/linalg.hpp"
#include "gapscope/polynomial.hpp"

#include <optional>
#include <vector>

namespace gapscope::dynamics
{

/// Admissible control values: an axis-aligned box or a finite list.
class ControlSet
{
public:
    enum class Type
    {
        Box,
        Finite
    };

    static ControlSet box(Vec lo, Vec hi, int samples_per_axis = 2);
    static ControlSet unbounded(int m);
    static ControlSet finite(std::vector<Vec> values);

    Type type() const { return type_; }
    int dim() const { return dim_; }
    const Vec& lo() const { return lo_; }
    const Vec& hi() const { return hi_; }
    const std::vector<Vec>& values() const { return values_; }
    int samples_per_axis() const { return samples_per_axis_; }

    bool contains(const Vec& w, double tol = 1e-9) const;
    /// Finite sample used wherever a sup over control values is needed.
    std::vector<Vec> samples() const;

private:
    Type type_{Type::Box};
    int dim_{0};
    Vec lo_, hi_;
    std::vector<Vec> values_;
    int samples_per_axis_{2};
};

/// A control value with its own (not necessarily control-affine) field.
struct TableEntry
{
    Vec value;
    PolyField field;
};

/// f(s, y, w) = drift(s, y) + Σⱼ channelⱼ(s, y) wʲ + table(w)(s, y).
class SystemSpec
{
public:
    SystemSpec(int n, int m, double horizon, PolyField drift, std::vector<PolyField> channels,
               ControlSet control_set, std::vector<TableEntry> table = {},
               std::vector<double> jump_times = {}, double c_bound = 1.0);

    int n() const { return n_; }
    int m() const { return m_; }
    double horizon() const { return horizon_; }
    const PolyField& drift() const { return drift_; }
    const std::vector<PolyField>& channels() const { return channels_; }
    const std::vector<TableEntry>& table() const { return table_; }
    const std::vector<double>& jump_times() const { return jump_times_; }
    const ControlSet& control_set() const { return control_set_; }
    double c_bound() const { return c_bound_; }

    Vec f(double s, const Vec& y, const Vec& w, double piece_s) const;
    Vec f(double s, const Vec& y, const Vec& w) const { return f(s, y, w, s); }
    Mat dfdy(double s, const Vec& y, const Vec& w, double piece_s) const;
    Mat dfdy(double s, const Vec& y, const Vec& w) const { return dfdy(s, y, w, s); }

private:
    const TableEntry* lookup(const Vec& w) const;

    int n_, m_;
    double horizon_;
    PolyField drift_;
    std::vector<PolyField> channels_;
    ControlSet control_set_;
    std::vector<TableEntry> table_;
    std::vector<double> jump_times_;
    double c_bound_;
};

/// Partition of [0, S] by increasing nodes. Built uniform; refinements made by
/// chattering or the space-time embedding may be non-uniform.
class Grid
{
public:
    explicit Grid(std::vector<double> nodes);
    static Grid uniform(double horizon, std::size_t cells);

    std::size_t cells() const { return nodes_.size() - 1; }
    std::size_t size() const { return nodes_.size(); }
    double node(std::size_t k) const { return nodes_[k]; }
    double width(std::size_t k) const { return nodes_[k + 1] - nodes_[k]; }
    double start() const { return nodes_.front(); }
    double end() const { return nodes_.back(); }
    double horizon() const { return nodes_.back() - nodes_.front(); }
    const std::vector<double>& nodes() const { return nodes_; }

    /// Index of the node at s (relative tolerance 1e-9 of the horizon).
    std::optional<std::size_t> find_node(double s) const;
    /// Cell [node k, node k+1) containing s; the last cell also takes s = end.
    std::size_t cell_of(double s) const;

    bool operator==(const Grid& other) const;

private:
    std::vector<double> nodes_;
};

/// Piecewise-constant control: values[k] on [node k, node k+1).
struct ControlPath
{
    Grid grid;
    std::vector<Vec> values;

    ControlPath(Grid g, std::vector<Vec> v);
    static ControlPath constant(const Grid& grid, const Vec& value);

    const Vec& cell_value(std::size_t k) const { return values[k]; }
    const Vec& value_at(double s) const { return values[grid.cell_of(s)]; }
    int dim() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
    /// ∫ of each component over the horizon.
    Vec integral() const;
};

struct Process
{
    ControlPath control;
    std::vector<Vec> states;

    const Grid& grid() const { return control.grid; }
    const Vec& terminal() const { return states.back(); }
};

/// M(s_k, s_base) at nodes k ≥ base.
struct MatrixPath
{
    std::size_t base{0};
    std::vector<Mat> matrices;

    const Mat& at(std::size_t node) const { return matrices.at(node - base); }
};

/// Covector path λ(s_k) at every node; terminal() is ξ = λ(S).
struct AdjointPath
{
    std::vector<Vec> covectors;

    const Vec& terminal() const { return covectors.back(); }
};

/// Classical RK4 per cell; jump times must be grid nodes.
Process integrate(const SystemSpec& sys, const ControlPath& ctrl, const Vec& y0);

/// State at the interior RK4 point of a cell by cubic Hermite interpolation.
Vec hermite_state(const SystemSpec& sys, const Process& proc, std::size_t cell, double theta);

/// M(·, s_from) along the process, by RK4 on the joint (y, M) system.
MatrixPath variational_flow(const SystemSpec& sys, const Process& proc, std::size_t from_node);

/// Backward RK4 for dλ/ds = −λ·∂f/∂y along the process, λ(S) = ξ.
AdjointPath adjoint(const SystemSpec& sys, const Process& proc, const Vec& xi);

/// max over nodes of ‖y[w1] − y[w2]‖.
double pseudo_distance(const SystemSpec& sys, const ControlPath& w1, const ControlPath& w2, const Vec& y0);

/// Grid times where the averaged oscillation of f(·, ·, w) fails to vanish
/// for some sampled control value, i.e. candidate non-Scorza-Dragoni points.
std::vector<double> sd_jump_diagnostic(const SystemSpec& sys, const Process& proc, double r,
                                       double threshold = 1e-3);

} // namespace gapscope::dynamics
