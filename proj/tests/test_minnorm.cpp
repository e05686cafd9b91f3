#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "hann/minnorm.hpp"
#include "oracles.hpp"

using namespace hann;
using minnorm::Polyhedron;

namespace {

Polyhedron from_rows(std::vector<Vec> rows, Vec b) {
    Polyhedron p;
    for (std::size_t i = 0; i < rows.size(); ++i) p.add(rows[i], b[i]);
    return p;
}

double linf(const Vec& a, const Vec& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("min_norm_point: nearest point on a halfspace") {
    // {x : x1 >= 1} stored as -x1 <= -1
    Polyhedron p = from_rows({{-1, 0}}, {-1});
    auto sol = minnorm::min_norm_point(p, 1e-8);
    CHECK(linf(sol.point, {1, 0}) < 1e-8);
    CHECK(sol.active_set == std::vector<int>{0});
    CHECK(sol.kkt_residual <= 1e-8);
}

TEST_CASE("min_norm_point: symmetric diagonal constraint") {
    // x1 + x2 >= 2
    Polyhedron p = from_rows({{-1, -1}}, {-2});
    auto sol = minnorm::min_norm_point(p, 1e-8);
    CHECK(linf(sol.point, {1, 1}) < 1e-8);
}

TEST_CASE("min_norm_point: origin feasible gives zero with empty support") {
    Polyhedron p = from_rows({{1, 0}, {0, 1}}, {1, 2});
    auto sol = minnorm::min_norm_point(p, 1e-8);
    CHECK(norm(sol.point) == 0.0);
    CHECK(sol.active_set.empty());
}

TEST_CASE("min_norm_point: infeasible 1-D system is detected") {
    // x <= -1 and -x <= -1
    Polyhedron p = from_rows({{1}, {-1}}, {-1, -1});
    CHECK_THROWS_AS((void)minnorm::min_norm_point(p, 1e-8), InfeasibleError);
}

TEST_CASE("min_norm_point: matches projected-gradient oracle on random feasible instances") {
    CounterRng rng(2024, RngStream::kData);
    for (int rep = 0; rep < 10; ++rep) {
        int n = 2 + static_cast<int>(rng.below(9));   // <= 10
        int m = 3 + static_cast<int>(rng.below(38));  // <= 40
        Polyhedron p = test_oracle::random_feasible_polyhedron(n, m, rng);
        auto sol = minnorm::min_norm_point(p, 1e-8);
        CHECK(sol.kkt_residual <= 1e-8);
        Vec oracle = test_oracle::projected_gradient_min_norm(p, 1000000);
        CHECK(linf(sol.point, oracle) < 1e-6);
    }
}

TEST_CASE("min_norm_point: uniqueness across constraint orderings and seeds") {
    CounterRng rng(555, RngStream::kData);
    for (int rep = 0; rep < 8; ++rep) {
        int n = 2 + static_cast<int>(rng.below(5));
        int m = 4 + static_cast<int>(rng.below(20));
        Polyhedron p = test_oracle::random_feasible_polyhedron(n, m, rng);

        minnorm::SolverOptions o1, o2;
        o1.seed = 1;
        o2.seed = 99;
        auto s1 = minnorm::min_norm_point(p, 1e-8, o1);

        // reversed constraint order
        Polyhedron rev;
        for (std::size_t i = p.m(); i-- > 0;) rev.add({p.a.row(i), p.n()}, p.b[i]);
        auto s2 = minnorm::min_norm_point(rev, 1e-8, o2);
        CHECK(linf(s1.point, s2.point) < 10 * 1e-8);
    }
}

TEST_CASE("min_norm_point: adding constraints never shrinks the norm") {
    CounterRng rng(777, RngStream::kData);
    for (int rep = 0; rep < 8; ++rep) {
        int n = 2 + static_cast<int>(rng.below(4));
        Polyhedron big = test_oracle::random_feasible_polyhedron(n, 12, rng);
        Polyhedron small;
        for (std::size_t i = 0; i < 6; ++i) small.add({big.a.row(i), big.n()}, big.b[i]);
        double ns = norm(minnorm::min_norm_point(small, 1e-9).point);
        double nb = norm(minnorm::min_norm_point(big, 1e-9).point);
        CHECK(nb >= ns - 1e-7);
    }
}

TEST_CASE("caratheodory_support: singleton and empty cases") {
    {
        Polyhedron p = from_rows({{-1, 0}}, {-1});
        auto sol = minnorm::min_norm_point(p, 1e-8);
        auto sup = minnorm::caratheodory_support(sol, p, 1e-8);
        CHECK(sup.indices == std::vector<int>{0});
    }
    {
        Polyhedron p = from_rows({{1, 0}, {0, 1}}, {1, 1});
        auto sol = minnorm::min_norm_point(p, 1e-8);
        auto sup = minnorm::caratheodory_support(sol, p, 1e-8);
        CHECK(sup.indices.empty());  // -x* = 0 is the empty conic combination
    }
}

TEST_CASE("caratheodory_support: redundant active constraints reduce to <= n") {
    // three halfplanes active at the same vertex (1, 0) in R^2
    Polyhedron p = from_rows({{-1, 0}, {-1, -1}, {-1, 1}}, {-1, -1, -1});
    auto sol = minnorm::min_norm_point(p, 1e-10);
    CHECK(linf(sol.point, {1, 0}) < 1e-8);
    auto sup = minnorm::caratheodory_support(sol, p, 1e-8);
    CHECK(sup.indices.size() <= 2);

    Polyhedron reduced;
    for (int idx : sup.indices) reduced.add({p.a.row(static_cast<std::size_t>(idx)), p.n()}, p.b[static_cast<std::size_t>(idx)]);
    auto re = minnorm::min_norm_point(reduced, 1e-10);
    CHECK(linf(re.point, sol.point) < 1e-8);
}

TEST_CASE("caratheodory_support: random instances re-solve to the same point") {
    CounterRng rng(4242, RngStream::kData);
    for (int rep = 0; rep < 10; ++rep) {
        int n = 2 + static_cast<int>(rng.below(6));
        int m = 6 + static_cast<int>(rng.below(30));
        Polyhedron p = test_oracle::random_feasible_polyhedron(n, m, rng);
        auto sol = minnorm::min_norm_point(p, 1e-9);
        auto sup = minnorm::caratheodory_support(sol, p, 1e-7);
        CHECK(sup.indices.size() <= static_cast<std::size_t>(n));

        if (sup.indices.empty()) {
            CHECK(norm(sol.point) < 1e-6);
            continue;
        }
        Polyhedron reduced;
        for (int idx : sup.indices)
            reduced.add({p.a.row(static_cast<std::size_t>(idx)), p.n()},
                        p.b[static_cast<std::size_t>(idx)]);
        auto re = minnorm::min_norm_point(reduced, 1e-9);
        CHECK(linf(re.point, sol.point) < 1e-6);
    }
}

TEST_CASE("margin_qp: two symmetric points pin w=1, b=0") {
    auto sol = minnorm::margin_qp({{-1.0}, {1.0}}, {-1, +1}, 1e-9);
    CHECK(std::abs(sol.w[0] - 1.0) < 1e-7);
    CHECK(std::abs(sol.b) < 1e-7);
}

TEST_CASE("margin_qp: single positive point at origin is pure offset") {
    auto sol = minnorm::margin_qp({{0.0}}, {+1}, 1e-9);
    CHECK(std::abs(sol.w[0]) < 1e-8);
    CHECK(std::abs(sol.b - 1.0) < 1e-8);
}

TEST_CASE("margin_qp: symmetric all-positive constraints force w=0, b=1") {
    auto sol = minnorm::margin_qp({{-1.0}, {1.0}}, {+1, +1}, 1e-9);
    CHECK(std::abs(sol.w[0]) < 1e-7);
    CHECK(std::abs(sol.b - 1.0) < 1e-7);
}

TEST_CASE("margin_qp: contradictory signs on one point are infeasible") {
    CHECK_THROWS_AS((void)minnorm::margin_qp({{0.5}, {0.5}}, {+1, -1}, 1e-8), InfeasibleError);
}

TEST_CASE("margin_qp: margins certified >= 1 - tol on random separable data") {
    CounterRng rng(31337, RngStream::kData);
    for (int rep = 0; rep < 10; ++rep) {
        int d = 1 + static_cast<int>(rng.below(3));
        Vec w(static_cast<std::size_t>(d));
        for (auto& v : w) v = rng.normal();
        double b = rng.normal();
        std::vector<Vec> pts;
        std::vector<int> signs;
        for (int i = 0; i < 20; ++i) {
            Vec x(static_cast<std::size_t>(d));
            for (auto& v : x) v = 2.0 * rng.normal();
            double t = dot(w, x) + b;
            if (std::abs(t) < 0.05) continue;  // keep strictly separated
            pts.push_back(x);
            signs.push_back(sgn(t));
        }
        if (pts.empty()) continue;
        auto sol = minnorm::margin_qp(pts, signs, 1e-8);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double margin = signs[i] * (dot(sol.w, pts[i]) + sol.b);
            CHECK(margin >= 1.0 - 1e-7);
        }
    }
}

TEST_CASE("max_min_slack: basic geometry") {
    // single halfplane x1 >= 0: slack maximized at the box edge
    Matrix u(1, 2);
    u(0, 0) = 1.0;
    Vec c{0.0};
    auto r = minnorm::max_min_slack(u, c, 10.0);
    CHECK(r.value == doctest::Approx(10.0));

    // triangle x1 >= 0, x2 >= 0, x1 + x2 <= 1: max of min(x1, x2, 1-x1-x2)
    // is 1/3 at the centroid (raw slacks, not distance-normalized)
    Matrix u3(3, 2);
    u3(0, 0) = 1;
    u3(1, 1) = 1;
    u3(2, 0) = -1;
    u3(2, 1) = -1;
    Vec c3{0.0, 0.0, 1.0};
    auto r3 = minnorm::max_min_slack(u3, c3, 100.0);
    CHECK(r3.value == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

    // contradictory pair x1 >= 0.5 and -x1 >= 0.5 has negative best slack
    Matrix u2(2, 1);
    u2(0, 0) = 1;
    u2(1, 0) = -1;
    Vec c2{-0.5, -0.5};
    auto r2 = minnorm::max_min_slack(u2, c2, 100.0);
    CHECK(r2.value == doctest::Approx(-0.5).epsilon(1e-9));
}
