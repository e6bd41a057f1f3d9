#include "gapscope/polynomial.hpp"

#include "gapscope/error.hpp"

#include <cmath>
#include <numeric>

namespace gapscope
{

namespace
{

double ipow(double x, int p)
{
    double r = 1.0;
    for (int i = 0; i < p; ++i)
        r *= x;
    return r;
}

} // namespace

int PolyTerm::degree() const { return std::accumulate(y_pows.begin(), y_pows.end(), s_pow); }

Polynomial::Polynomial(int num_vars, std::vector<PolyTerm> terms)
    : num_vars_(num_vars), terms_(std::move(terms))
{
    for (auto& t : terms_)
    {
        if (t.y_pows.empty())
            t.y_pows.assign(static_cast<std::size_t>(num_vars), 0);
        require(static_cast<int>(t.y_pows.size()) == num_vars, ErrorKind::Dimension,
                "polynomial term has " + std::to_string(t.y_pows.size()) + " exponents, expected " +
                    std::to_string(num_vars));
        require(std::isfinite(t.coef), ErrorKind::Input, "non-finite polynomial coefficient");
        require(t.s_pow >= 0, ErrorKind::Input, "negative exponent");
        for (int p : t.y_pows)
            require(p >= 0, ErrorKind::Input, "negative exponent");
        require(t.degree() <= kMaxPolyDegree, ErrorKind::Input,
                "polynomial degree " + std::to_string(t.degree()) + " exceeds 4");
        require(t.s_from < t.s_to, ErrorKind::Input, "empty activity interval on polynomial term");
    }
}

int Polynomial::degree() const
{
    int d = 0;
    for (const auto& t : terms_)
        d = std::max(d, t.degree());
    return d;
}

double Polynomial::eval(double s, const Vec& y, double piece_s) const
{
    double acc = 0.0;
    for (const auto& t : terms_)
    {
        if (!t.active(piece_s))
            continue;
        double v = t.coef * ipow(s, t.s_pow);
        for (int i = 0; i < num_vars_; ++i)
            v *= ipow(y(i), t.y_pows[static_cast<std::size_t>(i)]);
        acc += v;
    }
    return acc;
}

Vec Polynomial::grad_y(double s, const Vec& y, double piece_s) const
{
    Vec g = Vec::Zero(num_vars_);
    for (const auto& t : terms_)
    {
        if (!t.active(piece_s))
            continue;
        const double base = t.coef * ipow(s, t.s_pow);
        for (int k = 0; k < num_vars_; ++k)
        {
            const int pk = t.y_pows[static_cast<std::size_t>(k)];
            if (pk == 0)
                continue;
            double v = base * pk * ipow(y(k), pk - 1);
            for (int i = 0; i < num_vars_; ++i)
                if (i != k)
                    v *= ipow(y(i), t.y_pows[static_cast<std::size_t>(i)]);
            g(k) += v;
        }
    }
    return g;
}

double Polynomial::d_ds(double s, const Vec& y, double piece_s) const
{
    double acc = 0.0;
    for (const auto& t : terms_)
    {
        if (!t.active(piece_s) || t.s_pow == 0)
            continue;
        double v = t.coef * t.s_pow * ipow(s, t.s_pow - 1);
        for (int i = 0; i < num_vars_; ++i)
            v *= ipow(y(i), t.y_pows[static_cast<std::size_t>(i)]);
        acc += v;
    }
    return acc;
}

PolyField::PolyField(std::vector<Polynomial> comps) : comps_(std::move(comps))
{
    for (const auto& c : comps_)
        require(c.num_vars() == comps_.front().num_vars(), ErrorKind::Dimension,
                "field components disagree on the number of variables");
}

PolyField PolyField::zero(int out_dim, int num_vars)
{
    return PolyField(std::vector<Polynomial>(static_cast<std::size_t>(out_dim), Polynomial(num_vars, {})));
}

int PolyField::degree() const
{
    int d = 0;
    for (const auto& c : comps_)
        d = std::max(d, c.degree());
    return d;
}

Vec PolyField::eval(double s, const Vec& y, double piece_s) const
{
    Vec out(out_dim());
    for (int i = 0; i < out_dim(); ++i)
        out(i) = comps_[static_cast<std::size_t>(i)].eval(s, y, piece_s);
    return out;
}

Mat PolyField::jacobian(double s, const Vec& y, double piece_s) const
{
    Mat j(out_dim(), num_vars());
    for (int i = 0; i < out_dim(); ++i)
        j.row(i) = comps_[static_cast<std::size_t>(i)].grad_y(s, y, piece_s).transpose();
    return j;
}

Vec PolyField::d_ds(double s, const Vec& y, double piece_s) const
{
    Vec out(out_dim());
    for (int i = 0; i < out_dim(); ++i)
        out(i) = comps_[static_cast<std::size_t>(i)].d_ds(s, y, piece_s);
    return out;
}

} // namespace gapscope
