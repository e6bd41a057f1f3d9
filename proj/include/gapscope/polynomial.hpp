#pragma once

#include "gapscope/linalg.hpp"

#include <limits>
#include <vector>

namespace gapscope
{

inline constexpr int kMaxPolyDegree = 4;

/// coef · s^s_pow · Π y_i^{y_pows[i]}, active for piece times in [s_from, s_to).
struct PolyTerm
{
    double coef{0.0};
    int s_pow{0};
    std::vector<int> y_pows;
    double s_from{-std::numeric_limits<double>::infinity()};
    double s_to{std::numeric_limits<double>::infinity()};

    bool active(double piece_s) const { return piece_s >= s_from && piece_s < s_to; }
    int degree() const;
};

/// Scalar polynomial in (s, y) with optional piecewise activity in s.
///
/// Every evaluation takes a `piece_s` that selects which piecewise terms are
/// active; the integrators pass the midpoint of the current cell so that a
/// discontinuity sitting on a grid node never leaks into the neighbouring cell.
class Polynomial
{
public:
    Polynomial() = default;
    Polynomial(int num_vars, std::vector<PolyTerm> terms);

    int num_vars() const { return num_vars_; }
    const std::vector<PolyTerm>& terms() const { return terms_; }
    int degree() const;

    double eval(double s, const Vec& y, double piece_s) const;
    double eval(double s, const Vec& y) const { return eval(s, y, s); }
    Vec grad_y(double s, const Vec& y, double piece_s) const;
    double d_ds(double s, const Vec& y, double piece_s) const;

private:
    int num_vars_{0};
    std::vector<PolyTerm> terms_;
};

/// One polynomial per output component.
class PolyField
{
public:
    PolyField() = default;
    explicit PolyField(std::vector<Polynomial> comps);
    static PolyField zero(int out_dim, int num_vars);

    int out_dim() const { return static_cast<int>(comps_.size()); }
    int num_vars() const { return comps_.empty() ? 0 : comps_.front().num_vars(); }
    const std::vector<Polynomial>& comps() const { return comps_; }
    int degree() const;

    Vec eval(double s, const Vec& y, double piece_s) const;
    Mat jacobian(double s, const Vec& y, double piece_s) const;
    Vec d_ds(double s, const Vec& y, double piece_s) const;

private:
    std::vector<Polynomial> comps_;
};

} // namespace gapscope
