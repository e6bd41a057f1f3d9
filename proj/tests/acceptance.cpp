// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "gapscope/cones.hpp"
#include "gapscope/dynamics.hpp"
#include "gapscope/extremality.hpp"
#include "gapscope/impulsive.hpp"
#include "gapscope/open_mapping.hpp"
#include "gapscope/scenario.hpp"
#include "gapscope/variations.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>

using namespace gapscope;
using cones::PolyhedralCone;
using dynamics::ControlPath;
using dynamics::Grid;

namespace
{

struct Line
{
    bool pass{true};
    std::ostringstream detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond)
        {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void report(int id, const char* title, const std::function<void(Line&)>& body)
{
    Line line;
    try
    {
        body(line);
    }
    catch (const std::exception& e)
    {
        line.pass = false;
        line.detail << " [exception: " << e.what() << "]";
    }
    if (!line.pass)
        ++failures;
    std::printf("criterion %d %s: %s:%s\n", id, line.pass ? "PASS" : "FAIL", title, line.detail.str().c_str());
    std::fflush(stdout);
}

void criterion1(Line& out)
{
    const auto start = std::chrono::steady_clock::now();
    const auto sys = testsupport::sussmann();
    const auto proc = dynamics::integrate(sys, ControlPath::constant(Grid::uniform(1.0, 1000), vec_of({1})),
                                          vec_of({0}));
    extremality::TargetSpec tgt(PolyhedralCone::zero(1));
    tgt.point = vec_of({1});
    tgt.gradient = vec_of({1});
    const std::vector<Vec> w{vec_of({0}), vec_of({5})};
    const auto abn = extremality::abnormality_search(sys, proc, tgt, w);
    const auto h = extremality::h_classify(sys, proc, tgt, w);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    double lam_max = 0.0;
    if (h.witness)
        for (const auto& l : h.witness->covectors)
            lam_max = std::max(lam_max, l.lpNorm<Eigen::Infinity>());
    out.detail << " abnormality=" << extremality::to_string(abn.verdict) << " min_violation=" << abn.violation
               << " h_classify=" << extremality::to_string(h.verdict)
               << " lambda_c=" << (h.lambda_c ? std::to_string(*h.lambda_c) : "none") << " sup|lambda|=" << lam_max
               << " runtime_ms=" << ms;
    out.require(abn.verdict == extremality::Verdict::Normal, "abnormality verdict normal");
    out.require(abn.violation >= 0.9, "min violation >= 0.9");
    out.require(h.verdict == extremality::Verdict::Normal, "h_classify normal");
    out.require(h.lambda_c && *h.lambda_c == 1, "lambda_c = 1");
    out.require(h.witness.has_value() && lam_max <= 1e-12, "lambda identically 0");
    out.require(ms < 1000.0, "runtime < 1 s");
}

void criterion2(Line& out)
{
    const auto sys = testsupport::sussmann();
    const std::size_t K = 1024;
    const auto g = Grid::uniform(1.0, K);
    const auto zero = ControlPath::constant(g, vec_of({0}));
    const auto two = ControlPath::constant(g, vec_of({2}));
    double worst_integral = 0.0, worst_gap = 0.0;
    for (double gamma : {0.0, 0.25, 0.5, 0.75, 1.0})
    {
        const auto c = variations::chattering(zero, {two}, vec_of({gamma}), K);
        worst_integral = std::max(worst_integral, std::abs(c.integral()(0) - 2.0 * gamma));
        const auto relaxed = variations::relaxed_integrate(sys, {zero, {two}, vec_of({gamma})}, vec_of({0}));
        const auto actual = dynamics::integrate(sys, c, vec_of({0}));
        worst_gap = std::max(worst_gap, (relaxed.terminal() - actual.terminal()).norm());
    }
    // fine sweep: the integral moves in steps of 2/N and passes through the excluded value 1
    const int N = 200;
    double max_step = 0.0, prev = 0.0;
    bool below = false, above = false, hits = false;
    for (int i = 0; i <= N; ++i)
    {
        const double gamma = static_cast<double>(i) / N;
        const double v = variations::chattering(zero, {two}, vec_of({gamma}), K).integral()(0);
        if (i > 0)
            max_step = std::max(max_step, std::abs(v - prev));
        prev = v;
        below = below || v < 1.0 - 1e-9;
        above = above || v > 1.0 + 1e-9;
        hits = hits || std::abs(v - 1.0) <= 1e-12;
    }
    out.detail << " max|integral-2gamma|=" << worst_integral << " max endpoint gap (K=1024)=" << worst_gap
               << " sweep max step=" << max_step << " reaches 1=" << (hits ? "yes" : "no");
    out.require(worst_integral <= 1e-12, "integral = 2 gamma");
    out.require(worst_gap <= 1e-3, "endpoint gap <= 1e-3");
    out.require(below && above && hits && max_step <= 2.0 / N + 1e-9, "continuous crossing of 1");
}

void criterion3(Line& out)
{
    const auto sys = testsupport::quadratic3();
    const auto g = Grid::uniform(1.0, 2000);
    std::vector<Vec> vals;
    for (std::size_t k = 0; k < g.cells(); ++k)
        vals.push_back(vec_of({0.8 * std::sin(6.0 * g.node(k)) + 0.1}));
    const ControlPath w(g, vals);
    const Vec y0 = vec_of({0.4, -0.3, 0.6});
    const auto p = dynamics::integrate(sys, w, y0);
    const Mat M = dynamics::variational_flow(sys, p, 0).matrices.back();
    double fd_err = 0.0;
    const double eps = 1e-5;
    for (int i = 0; i < 3; ++i)
    {
        const auto q = dynamics::integrate(sys, w, y0 + eps * Vec::Unit(3, i));
        const Vec fd = (q.terminal() - p.terminal()) / eps;
        fd_err = std::max(fd_err, (fd - M.col(i)).norm() / M.col(i).norm());
    }
    const auto f1 = dynamics::variational_flow(sys, p, 500);
    const auto f2 = dynamics::variational_flow(sys, p, 1400);
    const double cocycle = (f2.matrices.back() * f1.at(1400) - f1.matrices.back()).norm();
    out.detail << " fd_rel_error=" << fd_err << " cocycle_defect=" << cocycle;
    out.require(fd_err <= 1e-4, "finite differences within 1e-4");
    out.require(cocycle <= 1e-7, "cocycle within 1e-7");
}

void criterion4(Line& out)
{
    const std::vector<double> eps{1e-2, 5e-3, 2.5e-3};
    struct Case
    {
        const char* name;
        dynamics::SystemSpec sys;
        Vec y0;
        Vec ref;
        std::vector<variations::NeedleSpec> needles;
        Vec gamma;
    };
    std::vector<Case> cases;
    cases.push_back({"riccati", testsupport::riccati(0.5), vec_of({0.5}), vec_of({0}),
                     {{0.2, 0.0, vec_of({1})}, {0.35, 0.0, vec_of({-1})}}, vec_of({0.6, 0.3})});
    cases.push_back({"oscillator", testsupport::oscillator(1.0), vec_of({0.5, 0.0}), vec_of({0.1}),
                     {{0.4, 0.0, vec_of({1})}, {0.8, 0.0, vec_of({-1})}}, vec_of({0.5, 0.5})});
    for (const auto& c : cases)
    {
        const auto p = dynamics::integrate(c.sys, ControlPath::constant(Grid::uniform(c.sys.horizon(), 400), c.ref), c.y0);
        const auto rows = variations::expansion_check(c.sys, p, c.needles, c.gamma, eps);
        out.detail << " " << c.name << " ratios=";
        for (const auto& r : rows)
            out.detail << r.ratio << (&r == &rows.back() ? "" : ",");
        bool dec = true;
        for (std::size_t i = 1; i < rows.size(); ++i)
            dec = dec && rows[i].ratio < rows[i - 1].ratio;
        out.require(dec, std::string(c.name) + " ratio decreasing");
    }
    const auto sus = testsupport::sussmann();
    const auto ps = dynamics::integrate(sus, ControlPath::constant(Grid::uniform(1.0, 1000), vec_of({1})), vec_of({0}));
    double worst = 0.0;
    for (const auto& r : variations::expansion_check(sus, ps, {{0.5, 0.0, vec_of({0})}, {0.75, 0.0, vec_of({5})}},
                                                     vec_of({0.5, 0.5}), eps))
        worst = std::max(worst, r.residual);
    out.detail << " sussmann max residual=" << worst;
    out.require(worst <= 1e-10, "sussmann residual at integrator tolerance");
}

PolyhedralCone random_cone(std::mt19937_64& rng, int dim, int lo, int hi)
{
    std::uniform_int_distribution<int> count(lo, hi);
    std::vector<Vec> rays;
    const int k = count(rng);
    for (int i = 0; i < k; ++i)
        rays.push_back(testsupport::unit_random(rng, dim));
    return PolyhedralCone(dim, rays);
}

bool sphere_sample_separable(const PolyhedralCone& k1, const PolyhedralCone& k2)
{
    std::vector<Vec> gens;
    for (const auto& r : k1.rays())
        gens.push_back(r.normalized());
    for (const auto& r : k2.rays())
        gens.push_back(-r.normalized());
    const int samples = 20000;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < samples; ++i)
    {
        const double z = 1.0 - 2.0 * (i + 0.5) / samples;
        const double r = std::sqrt(1.0 - z * z);
        const Vec xi = vec_of({r * std::cos(golden * i), r * std::sin(golden * i), z});
        bool ok = true;
        for (const auto& g : gens)
            ok = ok && xi.dot(g) <= 1e-2;
        if (ok)
            return true;
    }
    return false;
}

void criterion5(Line& out)
{
    std::mt19937_64 rng(2024);
    int probes = 0, bipolar_bad = 0;
    for (int c = 0; c < 50; ++c)
    {
        const auto k = random_cone(rng, 3, 1, 6);
        const auto kk = cones::polar(cones::polar(k));
        for (int i = 0; i < 100; ++i)
        {
            // half the probes are drawn from inside the cone
            Vec v = testsupport::random_vec(rng, 3);
            if (i % 2 == 0)
            {
                v.setZero();
                for (const auto& r : k.rays())
                    v += std::uniform_real_distribution<double>(0, 1)(rng) * r;
            }
            ++probes;
            if (cones::cone_contains(kk, v, 1e-7) != cones::cone_contains(k, v, 1e-7))
                ++bipolar_bad;
        }
    }
    int pairs = 0, teo3_bad = 0, separable = 0, strongly = 0, complementary = 0, not_transverse = 0;
    for (int p = 0; p < 50; ++p)
    {
        const auto k1 = random_cone(rng, 3, 1, 4);
        const auto k2 = random_cone(rng, 3, 1, 4);
        const bool lp = cones::linear_separation(k1, k2).has_value();
        const auto t = cones::classify_transversality(k1, k2);
        const bool brute = sphere_sample_separable(k1, k2);
        ++pairs;
        separable += lp;
        not_transverse += t == cones::Transversality::NotTransverse;
        strongly += t == cones::Transversality::StronglyTransverse;
        complementary += t == cones::Transversality::ComplementarySubspaces;
        if (lp != brute || lp != (t == cones::Transversality::NotTransverse))
            ++teo3_bad;
    }
    out.detail << " bipolar disagreements=" << bipolar_bad << "/" << probes << " separation disagreements=" << teo3_bad
               << "/" << pairs << " (separable " << separable << ") trichotomy not/strong/complementary="
               << not_transverse << "/" << strongly << "/" << complementary;
    out.require(bipolar_bad == 0, "bipolar agreement");
    out.require(teo3_bad == 0, "separable iff not transverse");
    out.require(not_transverse + strongly + complementary == pairs, "trichotomy total");
}

void criterion6(Line& out)
{
    double worst = 0.0;
    for (const auto& inst : open_mapping::bundled_instances())
    {
        const auto r = open_mapping::solve_fixed_point(inst);
        out.detail << " " << inst.name << "=" << r.residual;
        worst = std::max(worst, r.residual);
    }
    int ok = 0;
    const auto rows = open_mapping::shifted_target_sweep(20);
    for (const auto& r : rows)
        ok += r.ok;
    out.detail << " sweep=" << ok << "/" << rows.size();
    out.require(worst <= 1e-8, "residual <= 1e-8");
    out.require(ok == 20 && rows.size() == 20, "all 20 directions");
}

void criterion7(Line& out)
{
    double worst_x = 0.0, worst_eta = 0.0, worst_u = 0.0, worst_norm = 0.0;
    for (const char* name : {"impulse-demo-convex", "impulse-demo-nonconvex"})
    {
        const auto j = io::json::parse(scenario::registry_text(name));
        auto prob = io::impulsive_from_json(j.at("problem"));
        const auto kind = j.at("case") == "convex" ? impulsive::Case::Convex : impulsive::Case::NonConvex;
        const auto g = Grid::uniform(1.0, 2000);
        std::vector<ControlPath> controls;
        controls.push_back(io::control_from_json(j.at("reference"), g, prob.m, "/reference"));
        std::vector<Vec> vals;
        for (std::size_t k = 0; k < g.cells(); ++k)
        {
            Vec u = Vec::Zero(prob.m);
            u(0) = 1.5 + std::sin(9.0 * g.node(k));
            if (prob.m > 1)
                u(1) = k % 7 == 0 ? -1.0 : 0.0;
            vals.push_back(u);
        }
        controls.emplace_back(g, vals);
        for (const auto& u : controls)
        {
            double total = 0.0;
            for (std::size_t k = 0; k < g.cells(); ++k)
                total += g.width(k) * (1.0 + u.values[k].norm());
            prob.s_hat = total; // d = 0
            const auto orig = impulsive::integrate_original(prob, u);
            const auto stp = impulsive::spacetime_integrate(prob, impulsive::embed(prob, orig, kind));
            worst_norm = std::max(worst_norm, stp.normalization_defect());
            const auto back = impulsive::invert_embedding(stp);
            worst_x = std::max(worst_x, (back.x.back() - orig.x.back()).norm());
            worst_eta = std::max(worst_eta, std::abs(back.eta.back() - orig.eta.back()));
            worst_u = std::max(worst_u, (back.u.values.back() - orig.u.values.back()).norm());
        }
    }
    std::vector<Vec> n2, cusp;
    for (int i = 0; i <= 10; ++i)
        for (int k = 0; k <= 10; ++k)
            n2.push_back(vec_of({double(i), double(k)}));
    for (int k = 0; k <= 5; ++k)
    {
        cusp.push_back(vec_of({double(k * k), 0.0}));
        if (k > 0)
            cusp.push_back(vec_of({0.0, -double(k * k * k)}));
    }
    const auto s1 = impulsive::structure_check(n2, impulsive::UTag::CoCone);
    const auto s2 = impulsive::structure_check(cusp, impulsive::UTag::ConicDense);
    out.detail << " x_err=" << worst_x << " eta_err=" << worst_eta << " u_err=" << worst_u
               << " normalization_defect=" << worst_norm << " N^2 co-cone=" << (s1.passed ? "pass" : "fail")
               << " cusp conic-dense=" << (s2.passed ? "pass" : "fail");
    out.require(worst_x <= 1e-4 && worst_eta <= 1e-4 && worst_u <= 1e-4, "round trip within 1e-4");
    out.require(worst_norm <= 1e-12, "w0 + |w| = 1 within 1e-12");
    out.require(s1.passed && s2.passed, "structure checks pass");
}

dynamics::SystemSpec random_system(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<double> coef(-0.5, 0.5);
    io::json drift = io::json::array();
    io::json chan = io::json::array();
    for (int i = 0; i < n; ++i)
    {
        io::json terms = io::json::array();
        io::json cterms = io::json::array();
        for (int a = 0; a < n; ++a)
        {
            std::vector<int> p1(static_cast<std::size_t>(n), 0);
            p1[static_cast<std::size_t>(a)] = 1;
            terms.push_back({{"coef", coef(rng)}, {"y_pows", p1}});
            for (int b = a; b < n; ++b)
            {
                std::vector<int> p2 = p1;
                p2[static_cast<std::size_t>(b)] += 1;
                terms.push_back({{"coef", 0.5 * coef(rng)}, {"y_pows", p2}});
            }
        }
        cterms.push_back({{"coef", 2.0 * coef(rng)}, {"y_pows", std::vector<int>(static_cast<std::size_t>(n), 0)}});
        std::vector<int> p1(static_cast<std::size_t>(n), 0);
        p1[static_cast<std::size_t>(i)] = 1;
        cterms.push_back({{"coef", coef(rng)}, {"y_pows", p1}});
        drift.push_back(terms);
        chan.push_back(cterms);
    }
    io::json j = {{"n", n},
                  {"m", 1},
                  {"S", 1.0},
                  {"drift", drift},
                  {"channels", io::json::array({chan})},
                  {"control_set", {{"type", "finite"}, {"values", {{-1.0}, {0.0}, {1.0}}}}}};
    return io::system_from_json(j);
}

void criterion8(Line& out)
{
    std::mt19937_64 rng(8);
    int certified = 0, counterexamples = 0, abnormal = 0;
    for (int trial = 0; trial < 20; ++trial)
    {
        const int n = 1 + trial % 3;
        const auto sys = random_system(rng, n);
        const auto p = dynamics::integrate(sys, ControlPath::constant(Grid::uniform(1.0, 400), vec_of({0})),
                                           testsupport::random_vec(rng, n, -0.5, 0.5));
        std::vector<Vec> rays;
        std::uniform_int_distribution<int> nr(0, n);
        const int k = nr(rng);
        for (int i = 0; i < k; ++i)
            rays.push_back(testsupport::unit_random(rng, n));
        extremality::TargetSpec tgt(PolyhedralCone(n, rays));
        const std::vector<Vec> w{vec_of({-1}), vec_of({0}), vec_of({1})};
        const auto m = extremality::needle_controllability(sys, p, tgt, w, 0.05);
        const auto a = extremality::abnormality_search(sys, p, tgt, w);
        abnormal += a.verdict == extremality::Verdict::Abnormal;
        if (m.margin > 1e-3 && !m.vacuous)
        {
            ++certified;
            if (a.verdict != extremality::Verdict::Normal)
                ++counterexamples;
        }
    }
    out.detail << " systems=20 certified=" << certified << " abnormal=" << abnormal
               << " counterexamples=" << counterexamples;
    out.require(counterexamples == 0, "zero counterexamples");
    out.require(certified > 0, "implication exercised");
}

} // namespace

int main()
{
    report(1, "sussmann normality", criterion1);
    report(2, "chattering limit", criterion2);
    report(3, "variational flow", criterion3);
    report(4, "needle expansion o(eps)", criterion4);
    report(5, "cone suite", criterion5);
    report(6, "open-mapping solver", criterion6);
    report(7, "impulsive round trip", criterion7);
    report(8, "normality certificate consistency", criterion8);
    return failures == 0 ? 0 : 1;
}
