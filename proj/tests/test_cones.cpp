#include "doctest.h"
#include "gapscope/cones.hpp"
#include "gapscope/error.hpp"
#include "support.hpp"

#include <numbers>

using namespace gapscope;
using cones::PolyhedralCone;

namespace
{

// Projection onto span⁺ of columns by trying every support set.
Vec projection_oracle(const std::vector<Vec>& gens, const Vec& v)
{
    const int k = static_cast<int>(gens.size());
    Vec best = Vec::Zero(v.size());
    double best_d = v.norm();
    for (int mask = 1; mask < (1 << k); ++mask)
    {
        std::vector<int> idx;
        for (int i = 0; i < k; ++i)
            if (mask & (1 << i))
                idx.push_back(i);
        Mat a(v.size(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c)
            a.col(static_cast<Eigen::Index>(c)) = gens[static_cast<std::size_t>(idx[c])];
        const Vec x = a.colPivHouseholderQr().solve(v);
        if ((x.array() < -1e-12).any())
            continue;
        const Vec p = a * x;
        if ((v - p).norm() < best_d)
        {
            best_d = (v - p).norm();
            best = p;
        }
    }
    return best;
}

PolyhedralCone random_cone(std::mt19937_64& rng, int dim, int max_gens, bool allow_lineality)
{
    std::uniform_int_distribution<int> count(1, max_gens);
    std::vector<Vec> rays, lin;
    const int k = count(rng);
    for (int i = 0; i < k; ++i)
    {
        if (allow_lineality && std::uniform_real_distribution<double>(0, 1)(rng) < 0.15)
            lin.push_back(testsupport::unit_random(rng, dim));
        else
            rays.push_back(testsupport::unit_random(rng, dim));
    }
    return PolyhedralCone(dim, rays, lin);
}

std::vector<Vec> difference_generators(const PolyhedralCone& k1, const PolyhedralCone& k2)
{
    std::vector<Vec> g;
    for (const auto& r : k1.rays())
        g.push_back(r.normalized());
    for (const auto& r : k2.rays())
        g.push_back(-r.normalized());
    for (const auto& l : k1.lineality())
    {
        g.push_back(l.normalized());
        g.push_back(-l.normalized());
    }
    for (const auto& l : k2.lineality())
    {
        g.push_back(l.normalized());
        g.push_back(-l.normalized());
    }
    return g;
}

// K1 − K2 = ℝ² iff the generator angles leave no gap of π or more.
bool covers_plane(const std::vector<Vec>& gens)
{
    if (gens.empty())
        return false;
    std::vector<double> ang;
    for (const auto& g : gens)
        ang.push_back(std::atan2(g(1), g(0)));
    std::sort(ang.begin(), ang.end());
    double gap = ang.front() + 2 * std::numbers::pi - ang.back();
    for (std::size_t i = 1; i < ang.size(); ++i)
        gap = std::max(gap, ang[i] - ang[i - 1]);
    return gap < std::numbers::pi - 1e-9;
}

// K1 − K2 misses some direction iff a sampled ξ has ξ·g <= tol for every generator.
bool sampled_separable(const std::vector<Vec>& gens, int samples, double tol)
{
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < samples; ++i)
    {
        const double z = 1.0 - 2.0 * (i + 0.5) / samples;
        const double r = std::sqrt(1.0 - z * z);
        const Vec xi = vec_of({r * std::cos(golden * i), r * std::sin(golden * i), z});
        bool ok = true;
        for (const auto& g : gens)
            ok = ok && xi.dot(g) <= tol;
        if (ok)
            return true;
    }
    return false;
}

void check_witness(const PolyhedralCone& k1, const PolyhedralCone& k2, const cones::SeparationWitness& w)
{
    CHECK(w.xi.lpNorm<Eigen::Infinity>() == doctest::Approx(1.0));
    for (const auto& r : k1.rays())
        CHECK(w.xi.dot(r) >= -cones::kWitnessTol);
    for (const auto& r : k2.rays())
        CHECK(w.xi.dot(r) <= cones::kWitnessTol);
    for (const auto& l : k1.lineality())
        CHECK(std::abs(w.xi.dot(l)) <= cones::kWitnessTol);
    for (const auto& l : k2.lineality())
        CHECK(std::abs(w.xi.dot(l)) <= cones::kWitnessTol);
}

} // namespace

TEST_SUITE("cones")
{
    TEST_CASE("membership examples")
    {
        const PolyhedralCone ray(2, {vec_of({1, 0})});
        CHECK(cones::cone_contains(ray, vec_of({2, 0}), 1e-9));
        CHECK_FALSE(cones::cone_contains(ray, vec_of({0, 1}), 1e-9));
        const PolyhedralCone wedge(2, {vec_of({1, 1}), vec_of({1, -1})});
        CHECK(cones::cone_contains(wedge, vec_of({3, 0}), 1e-9));
        CHECK(cones::cone_contains(PolyhedralCone::zero(3), Vec::Zero(3), 1e-12));
        CHECK_FALSE(cones::cone_contains(PolyhedralCone::zero(3), vec_of({0, 0, 1e-3}), 1e-9));
    }

    TEST_CASE("zero generators are dropped and dimensions are checked")
    {
        const PolyhedralCone c(2, {vec_of({0, 0}), vec_of({1, 0})});
        CHECK(c.rays().size() == 1);
        CHECK_THROWS_AS(PolyhedralCone(2, {vec_of({1, 0, 0})}), Error);
    }

    TEST_CASE("projection matches support-set enumeration")
    {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 60; ++trial)
        {
            const int dim = 2 + trial % 3;
            std::vector<Vec> gens;
            for (int i = 0; i < 1 + trial % 5; ++i)
                gens.push_back(testsupport::random_vec(rng, dim));
            const PolyhedralCone c(dim, gens);
            const Vec v = testsupport::random_vec(rng, dim, -2, 2);
            const Vec p = cones::project(c, v);
            const Vec q = projection_oracle(gens, v);
            CHECK((v - p).norm() == doctest::Approx((v - q).norm()).epsilon(1e-8));
        }
    }

    TEST_CASE("projection with lineality")
    {
        const PolyhedralCone half(2, {vec_of({1, 0})}, {vec_of({0, 1})});
        CHECK(cones::distance(half, vec_of({-2, 5})) == doctest::Approx(2.0));
        CHECK(cones::distance(half, vec_of({2, -5})) == doctest::Approx(0.0));
        const Vec p = cones::project(half, vec_of({-2, 5}));
        CHECK(p(0) == doctest::Approx(0.0));
        CHECK(p(1) == doctest::Approx(5.0));
    }

    TEST_CASE("polar examples")
    {
        const auto p1 = cones::polar(PolyhedralCone(2, {vec_of({1, 0})}));
        CHECK(cones::cone_contains(p1, vec_of({-1, 0}), 1e-9));
        CHECK(cones::cone_contains(p1, vec_of({0, 1}), 1e-9));
        CHECK(cones::cone_contains(p1, vec_of({0, -1}), 1e-9));
        CHECK_FALSE(cones::cone_contains(p1, vec_of({1, 0}), 1e-9));

        const auto p2 = cones::polar(PolyhedralCone::whole_space(2));
        CHECK(p2.is_trivial());

        const auto p3 = cones::polar(PolyhedralCone(2, {vec_of({1, 1}), vec_of({1, -1})}));
        CHECK(cones::cone_contains(p3, vec_of({-1, 1}), 1e-9));
        CHECK(cones::cone_contains(p3, vec_of({-1, -1}), 1e-9));
        CHECK_FALSE(cones::cone_contains(p3, vec_of({-1, 2}), 1e-9));

        const auto p4 = cones::polar(PolyhedralCone::zero(3));
        for (int i = 0; i < 3; ++i)
        {
            CHECK(cones::cone_contains(p4, Vec::Unit(3, i), 1e-9));
            CHECK(cones::cone_contains(p4, -Vec::Unit(3, i), 1e-9));
        }
        CHECK_THROWS_AS(cones::polar(PolyhedralCone::zero(cones::kMaxPolarDim + 1)), Error);
    }

    TEST_CASE("polar agrees with its definition on random probes")
    {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 30; ++trial)
        {
            const int dim = 2 + trial % 3;
            const auto k = random_cone(rng, dim, 5, true);
            const auto p = cones::polar(k);
            for (int probe = 0; probe < 40; ++probe)
            {
                const Vec v = testsupport::unit_random(rng, dim);
                double worst = -1e300;
                for (const auto& r : k.rays())
                    worst = std::max(worst, v.dot(r.normalized()));
                for (const auto& l : k.lineality())
                    worst = std::max(worst, std::abs(v.dot(l.normalized())));
                if (std::abs(worst) < 1e-6)
                    continue; // boundary probe
                CHECK(cones::cone_contains(p, v, 1e-7) == (worst <= 0.0));
            }
        }
    }

    TEST_CASE("bipolar membership")
    {
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 20; ++trial)
        {
            const auto k = random_cone(rng, 3, 6, true);
            const auto kk = cones::polar(cones::polar(k));
            for (int probe = 0; probe < 50; ++probe)
            {
                const Vec v = testsupport::random_vec(rng, 3);
                const double d = cones::distance(k, v);
                if (d > 1e-7 && d < 1e-5)
                    continue;
                CHECK(cones::cone_contains(kk, v, 1e-7) == cones::cone_contains(k, v, 1e-7));
            }
        }
    }

    TEST_CASE("separation examples")
    {
        const PolyhedralCone ex(2, {vec_of({1, 0})});
        const PolyhedralCone ey(2, {vec_of({0, 1})});
        const auto w = cones::linear_separation(ex, ey);
        REQUIRE(w);
        check_witness(ex, ey, *w);

        const PolyhedralCone lx(2, {}, {vec_of({1, 0})});
        const PolyhedralCone ly(2, {}, {vec_of({0, 1})});
        CHECK_FALSE(cones::linear_separation(lx, ly));

        const PolyhedralCone hx(2, {vec_of({1, 0})}, {vec_of({0, 1})});
        const PolyhedralCone hy(2, {vec_of({0, 1})}, {vec_of({1, 0})});
        CHECK_FALSE(cones::linear_separation(hx, hy));

        CHECK(cones::classify_transversality(lx, ly) == cones::Transversality::ComplementarySubspaces);
        CHECK(cones::classify_transversality(hx, hy) == cones::Transversality::StronglyTransverse);
        CHECK(cones::classify_transversality(ex, ey) == cones::Transversality::NotTransverse);
    }

    TEST_CASE("separable iff not covering, planar pairs against exact angular oracle")
    {
        std::mt19937_64 rng(13);
        for (int trial = 0; trial < 60; ++trial)
        {
            const auto k1 = random_cone(rng, 2, 3, true);
            const auto k2 = random_cone(rng, 2, 3, true);
            const bool covers = covers_plane(difference_generators(k1, k2));
            const auto w = cones::linear_separation(k1, k2);
            CHECK(w.has_value() == !covers);
            if (w)
                check_witness(k1, k2, *w);
        }
    }

    TEST_CASE("separable iff not covering, spatial pairs against directional sampling")
    {
        std::mt19937_64 rng(17);
        int separable = 0;
        for (int trial = 0; trial < 50; ++trial)
        {
            const auto k1 = random_cone(rng, 3, 4, false);
            const auto k2 = random_cone(rng, 3, 4, false);
            const auto w = cones::linear_separation(k1, k2);
            CHECK(w.has_value() == sampled_separable(difference_generators(k1, k2), 20000, 1e-2));
            if (w)
            {
                ++separable;
                check_witness(k1, k2, *w);
            }
        }
        CHECK(separable > 5);
        CHECK(separable < 45);
    }

    TEST_CASE("trichotomy is total and strongly transverse pairs share a ray")
    {
        std::mt19937_64 rng(19);
        for (int trial = 0; trial < 50; ++trial)
        {
            const int dim = 2 + trial % 2;
            const auto k1 = random_cone(rng, dim, 4, true);
            const auto k2 = random_cone(rng, dim, 4, true);
            const auto t = cones::classify_transversality(k1, k2);
            const auto w = cones::linear_separation(k1, k2);
            if (t == cones::Transversality::NotTransverse)
                CHECK(w.has_value());
            else
                CHECK_FALSE(w.has_value());
            if (t == cones::Transversality::StronglyTransverse)
            {
                const auto u = cones::common_ray(k1, k2);
                REQUIRE(u);
                CHECK(u->lpNorm<Eigen::Infinity>() == doctest::Approx(1.0));
                CHECK(cones::distance(k1, *u) <= 1e-7);
                CHECK(cones::distance(k2, *u) <= 1e-7);
            }
            if (t == cones::Transversality::ComplementarySubspaces)
                CHECK_FALSE(cones::common_ray(k1, k2).has_value());
        }
    }

    TEST_CASE("lineality detection")
    {
        const PolyhedralCone c(1, {vec_of({-1}), vec_of({4})});
        const auto d = cones::with_detected_lineality(c);
        CHECK(d.rays().empty());
        CHECK_FALSE(d.lineality().empty());
        const PolyhedralCone q(2, {vec_of({1, 0}), vec_of({0, 1})});
        CHECK(cones::with_detected_lineality(q).lineality().empty());
    }
}
