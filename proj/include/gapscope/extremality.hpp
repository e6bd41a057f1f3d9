#pragma once

#include "gapscope/cones.hpp"
#include "gapscope/dynamics.hpp"
#include "gapscope/variations.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gapscope::extremality
{

using dynamics::AdjointPath;
using dynamics::Process;
using dynamics::SystemSpec;

enum class Verdict
{
    Normal,
    Abnormal,
    NotExtremal,
    Inconclusive
};

const char* to_string(Verdict v);

/// Target data at ŷ(S): an optional point constraint, the approximating cone C
/// and an optional cost gradient ∇h.
struct TargetSpec
{
    cones::PolyhedralCone cone;
    std::optional<Vec> point;
    double point_tol{1e-6};
    std::optional<Vec> gradient;

    explicit TargetSpec(cones::PolyhedralCone c) : cone(std::move(c)) {}

    bool feasible(const Vec& y) const;
};

struct ExtremalReport
{
    Verdict verdict{Verdict::Inconclusive};
    std::optional<AdjointPath> witness;
    std::optional<Vec> witness_xi;
    double violation{0.0}; // minimum violation over the λ_c = 0 candidates
    std::optional<int> lambda_c;
    std::size_t candidates{0};
};

struct SearchOptions
{
    std::size_t candidates{64};
    std::size_t seed{0};
    /// Absolute violation tolerance; ≤ 0 selects 1e-6·S.
    double tol_viol{-1.0};
};

/// Point i ∈ [0, 1)^dim of the Halton sequence (first primes as bases).
Vec halton(std::size_t index, int dim);

/// Deterministic covectors of −C^⊥ normalized to ‖ξ‖∞ = 1: negated extreme rays
/// of polar(C), ± its lineality vectors, then `count` Halton combinations.
std::vector<Vec> abnormal_candidates(const cones::PolyhedralCone& c, std::size_t count, std::size_t seed);

/// V = ∫ [max_𝔴 λ·(f(𝔴) − f(ŵ))]₊ ds by the trapezoid rule, skipping cells
/// that touch a jump time.
double maximality_violation(const SystemSpec& sys, const Process& proc, const AdjointPath& adj,
                            const std::vector<Vec>& wset);

ExtremalReport abnormality_search(const SystemSpec& sys, const Process& proc, const TargetSpec& tgt,
                                  const std::vector<Vec>& wset, const SearchOptions& opt = {});

ExtremalReport h_classify(const SystemSpec& sys, const Process& proc, const TargetSpec& tgt,
                          const std::vector<Vec>& wset, const SearchOptions& opt = {});

struct SeparationResult
{
    variations::VariationalCone cone;
    std::optional<cones::SeparationWitness> witness;
    /// max over needles of λ(sᵢ)·(f(𝔴ᵢ) − f(ŵ)) for the witness adjoint.
    double bridge_max{0.0};
};

/// Separates the variational cone from C with ξ·c₁ ≤ 0 ≤ ξ·c₂.
SeparationResult separation_diagnostic(const SystemSpec& sys, const Process& proc, const TargetSpec& tgt,
                                       const std::vector<variations::NeedleSpec>& needles);

struct ControllabilityResult
{
    double margin{0.0}; // +∞ when C^⊥ = {0}
    bool vacuous{false};
    std::optional<Vec> worst_xi;
    double worst_s{0.0};
    std::size_t candidates{0};
};

/// min over ξ ∈ −C^⊥ candidates and grid s ∈ [S − δ₂, S] of
/// max_𝔴 ξ·(f(s, ŷ(S), 𝔴) − f(s, ŷ(S), ŵ(s))).
ControllabilityResult needle_controllability(const SystemSpec& sys, const Process& proc, const TargetSpec& tgt,
                                             const std::vector<Vec>& wset, double delta2,
                                             const SearchOptions& opt = {});

enum class GapVerdict
{
    NoGapCertified,
    GapPossible,
    Inapplicable
};

const char* to_string(GapVerdict g);

struct GapReport
{
    GapVerdict verdict{GapVerdict::Inapplicable};
    std::string note;
};

GapReport gap_verdict(bool abundance_attested, Verdict extremal);

} // namespace gapscope::extremality
