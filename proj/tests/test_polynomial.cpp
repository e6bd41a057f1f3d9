#include "doctest.h"
#include "gapscope/error.hpp"
#include "gapscope/polynomial.hpp"
#include "support.hpp"

using namespace gapscope;

TEST_SUITE("polynomial")
{
    TEST_CASE("evaluation by hand")
    {
        // 2 s y1^2 y2 - 3 y2 + 1
        const Polynomial p(2, {{2.0, 1, {2, 1}}, {-3.0, 0, {0, 1}}, {1.0, 0, {0, 0}}});
        const Vec y = vec_of({1.5, -2.0});
        CHECK(p.eval(0.5, y) == doctest::Approx(2 * 0.5 * 2.25 * -2.0 + 6.0 + 1.0));
        const Vec g = p.grad_y(0.5, y, 0.5);
        CHECK(g(0) == doctest::Approx(2 * 0.5 * 2 * 1.5 * -2.0));
        CHECK(g(1) == doctest::Approx(2 * 0.5 * 2.25 - 3.0));
        CHECK(p.d_ds(0.5, y, 0.5) == doctest::Approx(2 * 2.25 * -2.0));
        CHECK(p.degree() == 4);
    }

    TEST_CASE("piecewise activity follows the piece time")
    {
        PolyTerm early{1.0, 0, {0}, 0.0, 0.5};
        PolyTerm late{2.0, 0, {0}, 0.5, 1.0};
        const Polynomial p(1, {early, late});
        const Vec y = vec_of({0.0});
        CHECK(p.eval(0.5, y, 0.49) == doctest::Approx(1.0));
        CHECK(p.eval(0.5, y, 0.5) == doctest::Approx(2.0));
    }

    TEST_CASE("invalid terms are rejected")
    {
        CHECK_THROWS_AS(Polynomial(1, {{1.0, 0, {5}}}), Error);
        CHECK_THROWS_AS(Polynomial(2, {{1.0, 0, {1}}}), Error);
        CHECK_THROWS_AS(Polynomial(1, {{1.0, -1, {1}}}), Error);
        CHECK_THROWS_AS(Polynomial(1, {{std::nan(""), 0, {1}}}), Error);
    }

    TEST_CASE("jacobian agrees with central differences")
    {
        const auto sys = testsupport::quadratic3();
        std::mt19937_64 rng(23);
        for (int trial = 0; trial < 50; ++trial)
        {
            const double s = testsupport::random_vec(rng, 1, 0, 1)(0);
            const Vec y = testsupport::random_vec(rng, 3, -2, 2);
            const Vec w = testsupport::random_vec(rng, 1);
            const Mat j = sys.dfdy(s, y, w);
            const double h = 1e-6;
            for (int i = 0; i < 3; ++i)
            {
                const Vec e = h * Vec::Unit(3, i);
                const Vec fd = (sys.f(s, y + e, w) - sys.f(s, y - e, w)) / (2 * h);
                CHECK((fd - j.col(i)).norm() <= 1e-6 * std::max(1.0, j.col(i).norm()));
            }
        }
    }
}
