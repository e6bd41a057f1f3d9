#include "doctest.h"
#include "gapscope/error.hpp"
#include "gapscope/open_mapping.hpp"
#include "support.hpp"

using namespace gapscope;
using namespace gapscope::open_mapping;
using cones::PolyhedralCone;

TEST_SUITE("open_mapping")
{
    TEST_CASE("right inverse examples")
    {
        Mat l(1, 2);
        l << 1, 0;
        const Mat r = right_inverse(l);
        CHECK(r(0, 0) == doctest::Approx(1.0));
        CHECK(r(1, 0) == doctest::Approx(0.0));
        CHECK((right_inverse(Mat::Identity(2, 2)) - Mat::Identity(2, 2)).norm() <= 1e-15);
        Mat l3(2, 3);
        l3 << 1, 1, 0, 0, 1, 1;
        CHECK((l3 * right_inverse(l3) - Mat::Identity(2, 2)).norm() <= 1e-12);
        Mat rank1(2, 2);
        rank1 << 1, 2, 2, 4;
        CHECK_THROWS_AS(right_inverse(rank1), Error);
    }

    TEST_CASE("right-inverse law on random full-rank maps")
    {
        std::mt19937_64 rng(37);
        for (int trial = 0; trial < 100; ++trial)
        {
            const int n = 1 + trial % 4;
            const int N = n + trial % 5;
            const Mat l = Mat::NullaryExpr(n, N, [&] { return testsupport::random_vec(rng, 1)(0); });
            CHECK((l * right_inverse(l) - Mat::Identity(n, n)).norm() <= 1e-10);
        }
    }

    TEST_CASE("flat inverse by hand")
    {
        Mat l(1, 2);
        l << 1, 0;
        const Vec h = vec_of({1});
        const Vec v = vec_of({-1, 3});
        const Mat f = flat_inverse(l, h, v);
        CHECK(((-f * h) - v).norm() <= 1e-12);
        CHECK((l * f - Mat::Identity(1, 1)).norm() <= 1e-12);
        // v = -M♯h leaves M♯ unchanged
        const Vec vs = -right_inverse(l) * h;
        CHECK((flat_inverse(l, h, vs) - right_inverse(l)).norm() <= 1e-12);
    }

    TEST_CASE("flat inverse conditions on random instances with an LP preimage")
    {
        std::mt19937_64 rng(41);
        const auto orthant = PolyhedralCone::orthant(4);
        int solved = 0;
        for (int trial = 0; trial < 30; ++trial)
        {
            const Mat l = Mat::NullaryExpr(2, 4, [&] { return testsupport::random_vec(rng, 1)(0); });
            const Vec h = testsupport::random_vec(rng, 2);
            const auto v = cone_preimage(l, h, orthant);
            if (!v)
                continue;
            ++solved;
            CHECK((v->array() >= -1e-12).all());
            CHECK((l * *v + h).norm() <= 1e-9);
            const Mat f = flat_inverse(l, h, *v);
            CHECK((-f * h - *v).norm() <= 1e-9);
            CHECK((l * f - Mat::Identity(2, 2)).norm() <= 1e-9);
        }
        CHECK(solved > 10);
    }

    TEST_CASE("cone-ball projection")
    {
        const auto orthant = PolyhedralCone::orthant(2);
        const Vec p = project_cone_ball(orthant, 1.0, vec_of({3, -1}));
        CHECK(p(0) == doctest::Approx(1.0));
        CHECK(p(1) == doctest::Approx(0.0));
        const Vec q = project_cone_ball(orthant, 1.0, vec_of({0.2, 0.3}));
        CHECK((q - vec_of({0.2, 0.3})).norm() <= 1e-12);
    }

    TEST_CASE("bundled instances converge")
    {
        for (const auto& inst : bundled_instances())
        {
            CAPTURE(inst.name);
            CHECK_NOTHROW(check_instance(inst));
            const auto r = solve_fixed_point(inst);
            CHECK(r.residual <= 1e-8);
            CHECK(r.gamma.norm() <= inst.delta + 1e-9);
            CHECK(cones::distance(inst.gamma_cone, r.gamma) <= 1e-9);
            CHECK((inst.L(r.gamma) * r.gamma + inst.h(r.gamma)).norm() <= 1e-8);
        }
    }

    TEST_CASE("identity instance takes one exact step")
    {
        const auto insts = bundled_instances();
        const auto& id = insts.front();
        const auto r = solve_fixed_point(id, 200, 1.0);
        CHECK(r.iterations == 1);
        CHECK((r.gamma - vec_of({0.3, 0.2})).norm() <= 1e-15);
    }

    TEST_CASE("underdetermined line lands on the solution set")
    {
        const auto insts = bundled_instances();
        const auto r = solve_fixed_point(insts[1]);
        CHECK(r.gamma.sum() == doctest::Approx(1.0).epsilon(1e-8));
        CHECK((r.gamma.array() >= -1e-12).all());
    }

    TEST_CASE("nonlinear instance has a root in the ball by grid search")
    {
        const auto insts = bundled_instances();
        const auto& inst = insts[2];
        double best = 1e300;
        const int steps = 400;
        for (int i = 0; i <= steps; ++i)
            for (int j = 0; j <= steps; ++j)
            {
                const Vec g = vec_of({0.5 * i / steps, 0.5 * j / steps});
                if (g.norm() > inst.delta || cones::distance(inst.gamma_cone, g) > 0)
                    continue;
                best = std::min(best, (inst.L(g) * g + inst.h(g)).norm());
            }
        CHECK(best <= 2e-3);
        CHECK(solve_fixed_point(inst).residual <= 1e-8);
    }

    TEST_CASE("non-convergence carries the best residual")
    {
        QdqInstance bad{"bad", 1, 1, PolyhedralCone::orthant(1), [](const Vec&) { return Mat::Identity(1, 1); },
                        [](const Vec&) { return vec_of({1.0}); }, 0.5, 4.0};
        try
        {
            solve_fixed_point(bad, 20);
            FAIL("expected non-convergence");
        }
        catch (const NonConvergenceError& e)
        {
            CHECK(e.best_residual() > 0.5);
            CHECK(e.iterations() == 20);
        }
    }

    TEST_CASE("shifted target sweep covers every direction")
    {
        const auto rows = shifted_target_sweep();
        CHECK(rows.size() == 20);
        for (const auto& r : rows)
        {
            CHECK(r.ok);
            CHECK(r.residual <= 1e-8);
            CHECK(r.gamma_norm <= 1.0 + 1e-9);
        }
    }
}
