#pragma once

#include "gapscope/cones.hpp"

#include <functional>
#include <string>
#include <vector>

namespace gapscope::open_mapping
{

/// 0 = L(γ)·γ + h(γ) posed on Γ ∩ B_δ.
struct QdqInstance
{
    std::string name;
    int N{0};
    int n{0};
    cones::PolyhedralCone gamma_cone{1};
    std::function<Mat(const Vec&)> L;
    std::function<Vec(const Vec&)> h;
    double delta{1.0};
    double rho{1.0};
};

/// Checks ‖h(γ)‖ ≤ δ·ρ and full row rank of L(γ) on `samples` points of Γ ∩ B_δ.
void check_instance(const QdqInstance& inst, std::size_t samples = 32);

/// Smallest singular value allowed for the right inverse.
inline constexpr double kRankTol = 1e-8;

/// M♯ = Lᵀ(LLᵀ)⁻¹.
Mat right_inverse(const Mat& L);

/// M♭w = M♯w − (⟨w,h⟩/⟨h,h⟩)(v + M♯h); needs L·v = −h.
Mat flat_inverse(const Mat& L, const Vec& h, const Vec& v);

/// Some v ∈ cone with L·v = −h minimizing the sum of ray coefficients.
std::optional<Vec> cone_preimage(const Mat& L, const Vec& h, const cones::PolyhedralCone& cone);

/// Euclidean projection onto cone ∩ B_δ by alternating projections.
Vec project_cone_ball(const cones::PolyhedralCone& cone, double delta, const Vec& v, int rounds = 50,
                      double tol = 1e-10);

struct FixedPointResult
{
    Vec gamma;
    double residual{0.0};
    int iterations{0};
    int flat_steps{0};
};

/// Damped iteration γ ← Π((1−α)γ + α·(−M(γ)h(γ))) until ‖L(γ)γ + h(γ)‖ ≤ 1e-8.
FixedPointResult solve_fixed_point(const QdqInstance& inst, int max_iter = 200, double damping = 0.5);

/// The three demo instances: exact step, underdetermined line, nonlinear.
std::vector<QdqInstance> bundled_instances();

struct SweepRow
{
    Vec direction;
    bool ok{false};
    double residual{0.0};
    double gamma_norm{0.0};
};

/// Solves L·γ = a·u on Γ ∩ B_δ for `directions` unit u, a = δ/β, with the
/// surjective map L = [[1,0,−1],[0,1,−1]] on the orthant of ℝ³.
std::vector<SweepRow> shifted_target_sweep(std::size_t directions = 20, double delta = 1.0, double beta = 2.0);

} // namespace gapscope::open_mapping
