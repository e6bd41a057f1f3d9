#pragma once

#include "gapscope/cones.hpp"
#include "gapscope/dynamics.hpp"
#include "gapscope/polynomial.hpp"

#include <limits>
#include <string>
#include <vector>

namespace gapscope::impulsive
{

using dynamics::ControlPath;
using dynamics::Grid;

enum class UTag
{
    CoCone,
    ConicDense
};

const char* to_string(UTag t);
UTag utag_from_string(const std::string& s);

enum class Case
{
    Convex,
    NonConvex
};

/// dx/dt = f(t, x) + Σⱼ gⱼ(t, x) uʲ, dη/dt = |u|, x(t₁) = x̄, η(t₁) = 0.
/// Polynomials are written in (s = t, y = x).
struct ImpulsiveProblem
{
    int n{1};
    int m{1};
    PolyField drift;
    std::vector<PolyField> channels;
    std::vector<Vec> u_samples;
    UTag tag{UTag::CoCone};
    double t1{0.0};
    Vec x0;
    double k_bound{std::numeric_limits<double>::infinity()};
    double s_hat{1.0};

    void validate() const;
    Vec f(double t, const Vec& x) const;
};

/// (x, η) along a piecewise-constant u on a t-grid starting at t₁.
struct OriginalProcess
{
    ControlPath u;
    std::vector<Vec> x;
    std::vector<double> eta;

    const Grid& grid() const { return u.grid; }
};

OriginalProcess integrate_original(const ImpulsiveProblem& prob, const ControlPath& u);

/// σ_u(t) = Ŝ·(t − t₁ + η(t)) / (t₂ − t₁ + ‖u‖₁), exact on the t-grid.
struct Reparam
{
    std::vector<double> t_nodes;
    std::vector<double> s_nodes;
    double denom{0.0};

    double sigma(double t) const;
    double sigma_inv(double s) const;
};

Reparam reparameterize(const ControlPath& u, double s_hat);

/// Piecewise-constant space-time controls and states (z⁰, z, ν) on an s-grid.
/// Each copy is (w⁰, w) ∈ ℝ^{1+m}; convex processes carry n+3 copies and the
/// weights a, non-convex ones a single copy and a = (1).
struct SpaceTimeProcess
{
    Case kind{Case::NonConvex};
    Grid grid{std::vector<double>{0.0, 1.0}};
    std::vector<Vec> a;
    std::vector<std::vector<Vec>> copies;
    std::vector<double> d;
    std::vector<Vec> states;

    /// max |w⁰ + |w| − 1| over every copy and cell.
    double normalization_defect() const;
};

SpaceTimeProcess embed(const ImpulsiveProblem& prob, const OriginalProcess& orig, Case kind);

/// Recovers (x, η, u) on the t-grid z⁰(s_k).
OriginalProcess invert_embedding(const SpaceTimeProcess& stp);

/// Flat control vector used by the table-driven space-time system:
/// convex [a, copies…, d], non-convex [w⁰, w, d].
Vec flatten_control(const Vec& a, const std::vector<Vec>& copies, double d);

/// Space-time field for one control tuple as polynomials in y = (z⁰, z, ν).
PolyField spacetime_field(const ImpulsiveProblem& prob, const Vec& a, const std::vector<Vec>& copies, double d);

/// Space-time system on [0, Ŝ] whose finite control set holds `values`
/// (flat vectors, non-convex layout (w⁰, w, d) with 1 + m + 1 entries).
dynamics::SystemSpec nonconvex_system(const ImpulsiveProblem& prob, const std::vector<Vec>& values);

/// Integrates the stored controls of `stp` from (t₁, x̄, 0) and returns a copy
/// with the new states.
SpaceTimeProcess spacetime_integrate(const ImpulsiveProblem& prob, const SpaceTimeProcess& controls);

/// (1, u)/(1+|u|) for every sample u.
std::vector<Vec> normalized_samples(const std::vector<Vec>& u_samples);

struct StructureReport
{
    UTag tag{UTag::CoCone};
    bool passed{false};
    std::size_t probes{0};
    std::size_t failures{0};
    std::string detail;
};

/// co-cone: 0 ∈ co(U) and hull points scaled by 2 and 10 stay in co(U) while
/// inside the bounding box of the sample. conic-dense: every testable pair
/// (u, r), r ∈ {1, 2, 5}, has a sample ρu with ρ > r.
StructureReport structure_check(const std::vector<Vec>& u_samples, UTag tag);

struct GapNcResiduals
{
    double nontriviality{0.0};   // max ‖(λ⁰, λ, λ^ν)‖ over nodes; must be > 0
    double adjoint_defect{0.0};  // max trapezoid defect per unit s
    double maximality{0.0};      // max [(1+d)H(w) − Ĥ]₊
    double cone_distance{0.0};   // distance of (λ⁰(Ŝ), λ(Ŝ), β) to −C^⊥

    bool passed(double tol) const
    {
        return nontriviality > tol && adjoint_defect <= tol && maximality <= tol && cone_distance <= tol;
    }
};

/// Residuals of the four multiplier conditions; multipliers[k] = (λ⁰, λ, λ^ν)(s_k).
GapNcResiduals gap_nc_residuals(const ImpulsiveProblem& prob, const SpaceTimeProcess& stp,
                                const std::vector<Vec>& multipliers, double beta,
                                const cones::PolyhedralCone& cone, const std::vector<Vec>& w_samples);

} // namespace gapscope::impulsive
