#include "gapscope/extremality.hpp"

#include "gapscope/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace gapscope::extremality
{

namespace
{

constexpr std::array<int, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
constexpr double kInf = std::numeric_limits<double>::infinity();

double radical_inverse(std::size_t i, int base)
{
    double inv = 1.0 / base;
    double f = inv;
    double out = 0.0;
    while (i > 0)
    {
        out += f * static_cast<double>(i % static_cast<std::size_t>(base));
        i /= static_cast<std::size_t>(base);
        f *= inv;
    }
    return out;
}

double tol_for(const SystemSpec& sys, const SearchOptions& opt)
{
    return opt.tol_viol > 0.0 ? opt.tol_viol : 1e-6 * sys.horizon();
}

bool touches_jump(const SystemSpec& sys, const dynamics::Grid& g, std::size_t cell)
{
    const double eps = 1e-9 * std::max(1.0, g.horizon());
    for (double t : sys.jump_times())
        if (std::abs(t - g.node(cell)) <= eps || std::abs(t - g.node(cell + 1)) <= eps)
            return true;
    return false;
}

void check_wset(const SystemSpec& sys, const std::vector<Vec>& wset)
{
    require(!wset.empty(), ErrorKind::Input, "control sample is empty");
    for (const auto& w : wset)
        require(w.size() == sys.m(), ErrorKind::Dimension, "control sample has wrong dimension");
}

void check_target(const SystemSpec& sys, const Process& proc, const TargetSpec& tgt)
{
    require(tgt.cone.dim() == sys.n(), ErrorKind::Dimension, "target cone dimension differs from the state");
    require(tgt.feasible(proc.terminal()), ErrorKind::Precondition, "reference endpoint is not in the target");
}

Vec normalized(const Vec& v)
{
    const double m = v.lpNorm<Eigen::Infinity>();
    return m > 0.0 ? Vec(v / m) : v;
}

struct Evaluated
{
    double violation;
    AdjointPath adj;
};

Evaluated evaluate(const SystemSpec& sys, const Process& proc, const Vec& xi, const std::vector<Vec>& wset)
{
    AdjointPath adj = dynamics::adjoint(sys, proc, xi);
    const double v = maximality_violation(sys, proc, adj, wset);
    return {v, std::move(adj)};
}

} // namespace

const char* to_string(Verdict v)
{
    switch (v)
    {
    case Verdict::Normal: return "normal";
    case Verdict::Abnormal: return "abnormal";
    case Verdict::NotExtremal: return "not_extremal";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

const char* to_string(GapVerdict g)
{
    switch (g)
    {
    case GapVerdict::NoGapCertified: return "no_gap_certified";
    case GapVerdict::GapPossible: return "gap_possible";
    case GapVerdict::Inapplicable: return "inapplicable";
    }
    return "?";
}

bool TargetSpec::feasible(const Vec& y) const
{
    if (!point)
        return true;
    require(point->size() == y.size(), ErrorKind::Dimension, "target point has wrong dimension");
    return (y - *point).norm() <= point_tol;
}

Vec halton(std::size_t index, int dim)
{
    require(dim >= 1 && dim <= static_cast<int>(kPrimes.size()), ErrorKind::UnsupportedDim,
            "Halton sequence supports dimensions 1.." + std::to_string(kPrimes.size()));
    Vec out(dim);
    for (int j = 0; j < dim; ++j)
        out(j) = radical_inverse(index, kPrimes[static_cast<std::size_t>(j)]);
    return out;
}

std::vector<Vec> abnormal_candidates(const cones::PolyhedralCone& c, std::size_t count, std::size_t seed)
{
    const cones::PolyhedralCone neg = cones::polar(c).negated();
    std::vector<Vec> out;
    for (const auto& r : neg.rays())
        out.push_back(normalized(r));
    for (const auto& l : neg.lineality())
    {
        out.push_back(normalized(l));
        out.push_back(normalized(Vec(-l)));
    }
    if (neg.is_trivial())
        return out;

    const int k = static_cast<int>(neg.rays().size() + neg.lineality().size());
    std::size_t produced = 0;
    for (std::size_t i = 1; produced < count && i < count * 8 + 16; ++i)
    {
        const Vec h = halton(seed + i, std::min(k, 16));
        Vec v = Vec::Zero(c.dim());
        int j = 0;
        for (const auto& r : neg.rays())
            v += h(j++ % h.size()) * r;
        for (const auto& l : neg.lineality())
            v += (2.0 * h(j++ % h.size()) - 1.0) * l;
        if (v.lpNorm<Eigen::Infinity>() < 1e-9)
            continue;
        v = normalized(v);
        if (!cones::cone_contains(neg, v, 1e-9))
            continue;
        out.push_back(v);
        ++produced;
    }
    return out;
}

double maximality_violation(const SystemSpec& sys, const Process& proc, const AdjointPath& adj,
                            const std::vector<Vec>& wset)
{
    check_wset(sys, wset);
    const auto& g = proc.grid();
    require(adj.covectors.size() == g.size(), ErrorKind::Grid, "adjoint is not on the process grid");
    double total = 0.0;
    for (std::size_t k = 0; k < g.cells(); ++k)
    {
        if (touches_jump(sys, g, k))
            continue;
        const Vec& what = proc.control.values[k];
        const double piece = g.node(k) + 0.5 * g.width(k);
        auto gain = [&](std::size_t node) {
            const double s = g.node(node);
            const Vec& y = proc.states[node];
            const Vec& lam = adj.covectors[node];
            const double base = lam.dot(sys.f(s, y, what, piece));
            double best = 0.0;
            for (const auto& w : wset)
                best = std::max(best, lam.dot(sys.f(s, y, w, piece)) - base);
            return best;
        };
        total += 0.5 * g.width(k) * (gain(k) + gain(k + 1));
    }
    return total;
}

ExtremalReport abnormality_search(const SystemSpec& sys, const Process& proc, const TargetSpec& tgt,
                                  const std::vector<Vec>& wset, const SearchOptions& opt)
{
    check_wset(sys, wset);
    check_target(sys, proc, tgt);
    const double tol = tol_for(sys, opt);
    const auto cands = abnormal_candidates(tgt.cone, opt.candidates, opt.seed);

    ExtremalReport rep;
    rep.candidates = cands.size();
    rep.violation = kInf;
    for (const auto& xi : cands)
    {
        auto ev = evaluate(sys, proc, xi, wset);
        if (ev.violation < rep.violation)
        {
            rep.violation = ev.violation;
            rep.witness = std::move(ev.adj);
            rep.witness_xi = xi;
        }
    }
    if (cands.empty())
    {
        rep.verdict = Verdict::Normal;
        return rep;
    }
    if (rep.violation <= tol)
    {
        rep.verdict = Verdict::Abnormal;
        rep.lambda_c = 0;
    }
    else
    {
        rep.verdict = Verdict::Normal;
        rep.witness.reset();
        rep.witness_xi.reset();
    }
    return rep;
}

ExtremalReport h_classify(const SystemSpec& sys, const Process& proc, const TargetSpec& tgt,
                          const std::vector<Vec>& wset, const SearchOptions& opt)
{
    require(tgt.gradient.has_value(), ErrorKind::Input, "h_classify needs a cost gradient");
    const Vec& grad = *tgt.gradient;
    require(grad.size() == sys.n() && grad.allFinite(), ErrorKind::Input, "cost gradient is invalid");

    ExtremalReport abn = abnormality_search(sys, proc, tgt, wset, opt);
    if (abn.verdict == Verdict::Abnormal)
        return abn;

    const double tol = tol_for(sys, opt);
    const cones::PolyhedralCone neg = cones::polar(tgt.cone).negated();
    std::vector<Vec> shifts{Vec::Zero(sys.n())};
    shifts.push_back(cones::project(neg, grad));
    const double scale = grad.lpNorm<Eigen::Infinity>() > 0.0 ? grad.lpNorm<Eigen::Infinity>() : 1.0;
    for (const auto& d : abnormal_candidates(tgt.cone, opt.candidates, opt.seed))
        for (double t : {0.25, 0.5, 1.0, 2.0, 4.0})
            shifts.push_back(t * scale * d);

    ExtremalReport rep;
    rep.candidates = abn.candidates + shifts.size();
    rep.violation = abn.violation;
    double best = kInf;
    for (const auto& p : shifts)
    {
        const Vec xi = -grad + p;
        auto ev = evaluate(sys, proc, xi, wset);
        if (ev.violation < best)
        {
            best = ev.violation;
            rep.witness = std::move(ev.adj);
            rep.witness_xi = xi;
        }
        if (best == 0.0)
            break;
    }
    if (best <= tol)
    {
        rep.verdict = Verdict::Normal;
        rep.lambda_c = 1;
    }
    else
    {
        rep.verdict = Verdict::NotExtremal;
        rep.witness.reset();
        rep.witness_xi.reset();
    }
    return rep;
}

SeparationResult separation_diagnostic(const SystemSpec& sys, const Process& proc, const TargetSpec& tgt,
                                       const std::vector<variations::NeedleSpec>& needles)
{
    check_target(sys, proc, tgt);
    SeparationResult out{variations::variational_cone(sys, proc, needles), std::nullopt, 0.0};
    auto w = cones::linear_separation(out.cone.cone, tgt.cone);
    if (!w)
        return out;
    w->xi = -w->xi;
    const auto adj = dynamics::adjoint(sys, proc, w->xi);
    const auto& g = proc.grid();
    double worst = -kInf;
    for (const auto& nd : needles)
    {
        const std::size_t k = *g.find_node(nd.s);
        const std::size_t cell = k - 1;
        const double piece = g.node(cell) + 0.5 * g.width(cell);
        const Vec& y = proc.states[k];
        const Vec df = sys.f(nd.s, y, nd.value, piece) - sys.f(nd.s, y, proc.control.values[cell], piece);
        worst = std::max(worst, adj.covectors[k].dot(df));
    }
    out.bridge_max = needles.empty() ? 0.0 : worst;
    out.witness = w;
    return out;
}

ControllabilityResult needle_controllability(const SystemSpec& sys, const Process& proc, const TargetSpec& tgt,
                                             const std::vector<Vec>& wset, double delta2,
                                             const SearchOptions& opt)
{
    check_wset(sys, wset);
    require(tgt.cone.dim() == sys.n(), ErrorKind::Dimension, "target cone dimension differs from the state");
    const double S = sys.horizon();
    require(delta2 > 0.0 && delta2 <= S * (1.0 + 1e-12), ErrorKind::Input, "delta2 must lie in (0, S]");

    ControllabilityResult res;
    const auto cands = abnormal_candidates(tgt.cone, opt.candidates, opt.seed);
    res.candidates = cands.size();
    if (cands.empty())
    {
        res.margin = kInf;
        res.vacuous = true;
        return res;
    }

    const auto& g = proc.grid();
    const Vec& yS = proc.terminal();
    const double from = S - delta2 - 1e-9 * std::max(1.0, S);
    res.margin = kInf;
    for (const auto& xi : cands)
    {
        for (std::size_t k = 0; k < g.size(); ++k)
        {
            const double s = g.node(k);
            if (s < from)
                continue;
            const std::size_t cell = std::min(k, g.cells() - 1);
            if (touches_jump(sys, g, cell))
                continue;
            const double piece = g.node(cell) + 0.5 * g.width(cell);
            const double base = xi.dot(sys.f(s, yS, proc.control.values[cell], piece));
            double best = -kInf;
            for (const auto& w : wset)
                best = std::max(best, xi.dot(sys.f(s, yS, w, piece)) - base);
            if (best < res.margin)
            {
                res.margin = best;
                res.worst_xi = xi;
                res.worst_s = s;
            }
        }
    }
    return res;
}

GapReport gap_verdict(bool abundance_attested, Verdict extremal)
{
    if (!abundance_attested)
        return {GapVerdict::Inapplicable,
                "criterion inapplicable (abundance fails): the original family is not attested abundant in the "
                "extended one, so normality does not exclude an infimum gap"};
    switch (extremal)
    {
    case Verdict::Normal:
        return {GapVerdict::NoGapCertified, "no infimum gap certified at the reference process (normal extremal)"};
    case Verdict::Abnormal:
        return {GapVerdict::GapPossible, "gap possible: an abnormal multiplier exists (necessary condition met)"};
    case Verdict::NotExtremal:
        return {GapVerdict::Inapplicable, "reference process admits no multiplier on the sample; not an extremal"};
    case Verdict::Inconclusive:
        break;
    }
    return {GapVerdict::Inapplicable, "extremality inconclusive"};
}

} // namespace gapscope::extremality
