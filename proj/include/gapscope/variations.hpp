#pragma once

#include "gapscope/cones.hpp"
#include "gapscope/dynamics.hpp"

#include <vector>

namespace gapscope::variations
{

using dynamics::ControlPath;
using dynamics::Process;
using dynamics::SystemSpec;

/// Control value `value` on [s − width, s].
struct NeedleSpec
{
    double s{0.0};
    double width{0.0};
    Vec value;
};

struct RelaxedControl
{
    ControlPath base;
    std::vector<ControlPath> companions;
    Vec gamma;

    /// Checks the shared grid and γ ∈ Γ_N = {γ ≥ 0, Σγ ≤ 1} (tolerance 1e-12).
    void validate() const;
};

struct VariationalCone
{
    cones::PolyhedralCone cone;
    std::vector<Vec> generators;
    std::vector<NeedleSpec> needles;
};

struct ExpansionRow
{
    double eps{0.0};
    double residual{0.0};
    double ratio{0.0}; // residual / eps
};

bool in_simplex(const Vec& gamma, double tol = 1e-12);

/// Needle times must increase strictly, satisfy sᵢ − δᵢ ≥ sᵢ₋₁ (s₀ = 0),
/// be grid nodes and avoid declared jump times.
void validate_needles(const SystemSpec& sys, const dynamics::Grid& grid, const std::vector<NeedleSpec>& needles);

ControlPath needle_control(const ControlPath& base, const NeedleSpec& needle);

/// Integrates dy/ds = f(w) + Σ γⁱ (f(wᵢ) − f(w)).
Process relaxed_integrate(const SystemSpec& sys, const RelaxedControl& rc, const Vec& y0);

/// rᵢ = M(S, sᵢ)·(f(sᵢ, ŷ(sᵢ), 𝔴ᵢ) − f(sᵢ, ŷ(sᵢ), ŵ(sᵢ⁻))) and span⁺ of them.
VariationalCone variational_cone(const SystemSpec& sys, const Process& proc,
                                 const std::vector<NeedleSpec>& needles);

/// First-order needle expansion residual for every ε (needle widths all ε).
std::vector<ExpansionRow> expansion_check(const SystemSpec& sys, const Process& proc,
                                          const std::vector<NeedleSpec>& needles, const Vec& gamma,
                                          const std::vector<double>& eps_list);

/// Block chattering: K equal blocks, leading fraction γⁱ of each block to
/// companion i (in order), the remainder to the base.
ControlPath chattering(const ControlPath& base, const std::vector<ControlPath>& companions, const Vec& gamma,
                       std::size_t blocks);

/// v1 on [0, s̄), v2 on [s̄, S].
ControlPath concatenate(const ControlPath& v1, const ControlPath& v2, double s_bar);

/// Each control on a grid refined by an integer factor.
ControlPath refine(const ControlPath& ctrl, std::size_t factor);

} // namespace gapscope::variations
