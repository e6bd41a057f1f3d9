#pragma once

#include "gapscope/linalg.hpp"

#include <optional>
#include <vector>

namespace gapscope::cones
{

/// Vertex enumeration in polar() is limited to this ambient dimension.
inline constexpr int kMaxPolarDim = 6;
/// Sign tolerance asserted on separation witnesses.
inline constexpr double kWitnessTol = 1e-9;
/// Generators shorter than this are dropped at construction.
inline constexpr double kZeroRay = 1e-12;

/// Finitely generated convex cone {Σ aᵢ rᵢ + Σ bⱼ lⱼ : aᵢ ≥ 0, bⱼ ∈ ℝ}.
/// No generators at all means the trivial cone {0}.
class PolyhedralCone
{
public:
    explicit PolyhedralCone(int dim, std::vector<Vec> rays = {}, std::vector<Vec> lineality = {});

    static PolyhedralCone zero(int dim) { return PolyhedralCone(dim); }
    static PolyhedralCone whole_space(int dim);
    static PolyhedralCone orthant(int dim);

    int dim() const { return dim_; }
    const std::vector<Vec>& rays() const { return rays_; }
    const std::vector<Vec>& lineality() const { return lineality_; }
    bool is_trivial() const { return rays_.empty() && lineality_.empty(); }

    /// The cone with every generator negated.
    PolyhedralCone negated() const;

private:
    int dim_;
    std::vector<Vec> rays_;
    std::vector<Vec> lineality_;
};

/// Euclidean projection onto the cone (lineality handled exactly,
/// rays by Lawson-Hanson non-negative least squares).
Vec project(const PolyhedralCone& cone, const Vec& v);

double distance(const PolyhedralCone& cone, const Vec& v);

/// True iff v lies within Euclidean distance tol of the cone.
bool cone_contains(const PolyhedralCone& cone, const Vec& v, double tol);

/// Non-negative least squares: argmin ‖A x − b‖ over x ≥ 0.
Vec nnls(const Mat& a, const Vec& b);

/// {p : p·w ≤ 0 for all w in the cone}. Requires dim ≤ kMaxPolarDim.
PolyhedralCone polar(const PolyhedralCone& cone);

struct SeparationWitness
{
    Vec xi;
    double margin{0.0};
};

/// ξ ≠ 0 with ξ·k ≥ 0 on k1 and ξ·k ≤ 0 on k2, ‖ξ‖∞ = 1, maximizing the
/// smallest slack over unit-normalized rays. Empty iff k1 − k2 is the whole space.
std::optional<SeparationWitness> linear_separation(const PolyhedralCone& k1,
                                                   const PolyhedralCone& k2);

/// Nonzero vector in k1 ∩ k2 with ‖u‖∞ = 1, if any.
std::optional<Vec> common_ray(const PolyhedralCone& k1, const PolyhedralCone& k2);

enum class Transversality
{
    NotTransverse,
    StronglyTransverse,
    ComplementarySubspaces
};

const char* to_string(Transversality t);

Transversality classify_transversality(const PolyhedralCone& k1, const PolyhedralCone& k2);

} // namespace gapscope::cones

namespace gapscope::cones
{

/// Same cone with every ray g whose negation is also in the cone moved to
/// the lineality list.
PolyhedralCone with_detected_lineality(const PolyhedralCone& cone, double tol = 1e-9);

} // namespace gapscope::cones
