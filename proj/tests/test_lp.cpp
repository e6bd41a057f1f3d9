#include "doctest.h"
#include "gapscope/error.hpp"
#include "gapscope/lp.hpp"
#include "support.hpp"

using namespace gapscope;

namespace
{

// min c·x over {A x <= b, x >= 0} in the plane by enumerating vertices.
std::optional<double> brute_force_2d(const Vec& c, const std::vector<Vec>& a, const std::vector<double>& b)
{
    std::vector<Vec> rows = a;
    std::vector<double> rhs = b;
    rows.push_back(vec_of({-1, 0}));
    rhs.push_back(0);
    rows.push_back(vec_of({0, -1}));
    rhs.push_back(0);
    std::optional<double> best;
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j)
        {
            Mat m(2, 2);
            m.row(0) = rows[i].transpose();
            m.row(1) = rows[j].transpose();
            if (std::abs(m.determinant()) < 1e-12)
                continue;
            const Vec x = m.inverse() * vec_of({rhs[i], rhs[j]});
            bool ok = true;
            for (std::size_t k = 0; k < rows.size(); ++k)
                ok = ok && rows[k].dot(x) <= rhs[k] + 1e-9;
            if (ok && (!best || c.dot(x) < *best))
                best = c.dot(x);
        }
    return best;
}

} // namespace

TEST_SUITE("lp")
{
    TEST_CASE("textbook maximization")
    {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
        lp::Problem p(2);
        p.set_objective(vec_of({-3, -5}));
        p.add_row(vec_of({1, 0}), lp::Sense::LessEq, 4);
        p.add_row(vec_of({0, 2}), lp::Sense::LessEq, 12);
        p.add_row(vec_of({3, 2}), lp::Sense::LessEq, 18);
        const auto r = lp::solve(p);
        REQUIRE(r.status == lp::Status::Optimal);
        CHECK(r.objective == doctest::Approx(-36));
        CHECK(r.x(0) == doctest::Approx(2));
        CHECK(r.x(1) == doctest::Approx(6));
    }

    TEST_CASE("infeasible and unbounded")
    {
        lp::Problem p(1);
        p.set_objective(vec_of({1}));
        p.add_row(vec_of({1}), lp::Sense::LessEq, -1);
        CHECK(lp::solve(p).status == lp::Status::Infeasible);

        lp::Problem q(1);
        q.set_objective(vec_of({-1}));
        CHECK(lp::solve(q).status == lp::Status::Unbounded);
    }

    TEST_CASE("free variables and upper bounds")
    {
        lp::Problem p(2);
        p.set_objective(vec_of({1, 1}));
        p.set_free(0);
        p.set_upper(1, 2.0);
        p.add_row(vec_of({1, 0}), lp::Sense::GreaterEq, -3);
        p.add_row(vec_of({1, 1}), lp::Sense::Equal, -1);
        const auto r = lp::solve(p);
        REQUIRE(r.status == lp::Status::Optimal);
        CHECK(r.objective == doctest::Approx(-1));
        CHECK(r.x(1) <= 2.0 + 1e-12);
        CHECK(r.x(0) >= -3.0 - 1e-12);
    }

    TEST_CASE("degenerate vertex does not cycle")
    {
        // Beale-style degenerate instance
        lp::Problem p(4);
        p.set_objective(vec_of({-0.75, 150, -0.02, 6}));
        p.add_row(vec_of({0.25, -60, -0.04, 9}), lp::Sense::LessEq, 0);
        p.add_row(vec_of({0.5, -90, -0.02, 3}), lp::Sense::LessEq, 0);
        p.add_row(vec_of({0, 0, 1, 0}), lp::Sense::LessEq, 1);
        const auto r = lp::solve(p);
        REQUIRE(r.status == lp::Status::Optimal);
        CHECK(r.objective == doctest::Approx(-0.05));
    }

    TEST_CASE("agrees with vertex enumeration on random planar programs")
    {
        std::mt19937_64 rng(11);
        int optimal = 0;
        for (int trial = 0; trial < 200; ++trial)
        {
            const Vec c = testsupport::random_vec(rng, 2);
            std::vector<Vec> a;
            std::vector<double> b;
            for (int i = 0; i < 4; ++i)
            {
                a.push_back(testsupport::random_vec(rng, 2));
                b.push_back(testsupport::random_vec(rng, 1, -0.2, 1.0)(0));
            }
            // box keeps the program bounded
            a.push_back(vec_of({1, 0}));
            b.push_back(5);
            a.push_back(vec_of({0, 1}));
            b.push_back(5);
            lp::Problem p(2);
            p.set_objective(c);
            for (std::size_t i = 0; i < a.size(); ++i)
                p.add_row(a[i], lp::Sense::LessEq, b[i]);
            const auto r = lp::solve(p);
            const auto oracle = brute_force_2d(c, a, b);
            CHECK((r.status == lp::Status::Optimal) == oracle.has_value());
            if (oracle && r.status == lp::Status::Optimal)
            {
                ++optimal;
                CHECK(r.objective == doctest::Approx(*oracle).epsilon(1e-7));
            }
        }
        CHECK(optimal > 50);
    }

    TEST_CASE("variable cap")
    {
        CHECK_THROWS_AS(lp::Problem(lp::kMaxVariables + 1), Error);
    }
}
