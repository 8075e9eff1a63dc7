#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "thermoform/pressure.hpp"

using namespace thermoform;

TEST_CASE("zero potential: tree pressure is log(degree) with full leaf counts", "[pressure]") {
    auto f2 = IntervalMap::chebyshev2();
    auto zero = Potential::constant(0.0);
    auto s2 = tree_pressure_series(f2, zero, 0.75, 12);
    for (int n = 1; n <= 12; ++n) {
        CHECK(s2.leaf_count(n) == (std::int64_t{1} << n));
        CHECK(s2.value(n) == Catch::Approx(std::log(2.0)).margin(1e-9));
        // p_n of the zero potential is exactly the leaf-count growth rate
        CHECK(s2.value(n) == std::log(static_cast<double>(s2.leaf_count(n))) / n);
    }
    CHECK(s2.tail_max == Catch::Approx(std::log(2.0)).margin(1e-9));
    CHECK_FALSE(s2.near_critical_flag);

    auto f3 = IntervalMap::chebyshev3();
    auto s3 = tree_pressure_series(f3, zero, 0.1, 8);
    for (int n = 1; n <= 8; ++n) {
        CHECK(s3.leaf_count(n) == static_cast<std::int64_t>(std::llround(std::pow(3.0, n))));
        CHECK(s3.value(n) == Catch::Approx(std::log(3.0)).margin(1e-9));
    }
}

TEST_CASE("constant potentials shift the whole series", "[pressure]") {
    auto f2 = IntervalMap::chebyshev2();
    auto s = tree_pressure_series(f2, Potential::constant(0.3), 0.75, 10);
    for (int n = 1; n <= 10; ++n)
        CHECK(s.value(n) == Catch::Approx(std::log(2.0) + 0.3).margin(1e-9));
}

TEST_CASE("shift equivariance of p_n", "[pressure][property]") {
    auto f2 = IntervalMap::chebyshev2();
    const double c = 1.7;
    for (const auto& phi : {Potential::constant(0.3), Potential::cosine(0.3, f2.domain())}) {
        auto base = tree_pressure_series(f2, phi, 0.75, 12);
        auto shifted = tree_pressure_series(f2, phi.shifted(c), 0.75, 12);
        for (int n = 1; n <= 12; ++n)
            CHECK(shifted.value(n) - base.value(n) == Catch::Approx(c).margin(1e-12));
    }
}

TEST_CASE("Lipschitz and monotonicity of p_n in the potential", "[pressure][property]") {
    auto f2 = IntervalMap::chebyshev2();
    std::mt19937 rng(424242);
    std::uniform_real_distribution<double> coef(-0.3, 0.3);
    for (int trial = 0; trial < 6; ++trial) {
        Polynomial p{coef(rng), coef(rng), coef(rng)};
        Polynomial q{coef(rng), coef(rng), coef(rng)};
        auto phi = Potential::polynomial(p, f2.domain());
        auto psi = Potential::polynomial(q, f2.domain());
        double supdiff = 0.0;
        for (int i = 0; i <= 1000; ++i) {
            double x = i / 1000.0;
            supdiff = std::max(supdiff, std::abs(phi(x) - psi(x)));
        }
        auto sp = tree_pressure_series(f2, phi, 0.61, 8);
        auto sq = tree_pressure_series(f2, psi, 0.61, 8);
        for (int n = 1; n <= 8; ++n)
            CHECK(std::abs(sp.value(n) - sq.value(n)) <= supdiff + 1e-10);

        // monotone: psi + supdiff dominates phi pointwise
        auto dom = tree_pressure_series(f2, psi.shifted(supdiff + 1e-9), 0.61, 8);
        for (int n = 1; n <= 8; ++n) CHECK(sp.value(n) <= dom.value(n) + 1e-10);
    }
}

TEST_CASE("tree pressure is byte-identical across thread counts", "[pressure]") {
    auto f2 = IntervalMap::chebyshev2();
    auto phi = Potential::cosine(0.3, f2.domain());
    auto s1 = tree_pressure_series(f2, phi, 0.75, 12, 1);
    auto s8 = tree_pressure_series(f2, phi, 0.75, 12, 8);
    for (int n = 1; n <= 12; ++n) {
        CHECK(s1.value(n) == s8.value(n)); // bitwise
        CHECK(s1.leaf_count(n) == s8.leaf_count(n));
    }
}

TEST_CASE("base-point robustness of the tail estimate", "[pressure]") {
    auto f2 = IntervalMap::chebyshev2();
    auto phi = Potential::cosine(0.3, f2.domain());
    double tails[3];
    int i = 0;
    for (double x0 : {0.3, 0.6, 0.75})
        tails[i++] = tree_pressure_series(f2, phi, x0, 14).tail_max;
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) CHECK(std::abs(tails[a] - tails[b]) < 0.05);
}

TEST_CASE("near-critical base points are flagged", "[pressure]") {
    auto f2 = IntervalMap::chebyshev2();
    auto zero = Potential::constant(0.0);
    // 1.0 is the image of the critical point
    CHECK(tree_pressure_series(f2, zero, 1.0, 4).near_critical_flag);
    CHECK_FALSE(tree_pressure_series(f2, zero, 0.75, 4).near_critical_flag);
}

TEST_CASE("tree budget", "[pressure]") {
    auto f2 = IntervalMap::chebyshev2();
    CHECK_THROWS_AS(tree_pressure_series(f2, Potential::constant(0.0), 0.75, 25), BudgetError);
}

TEST_CASE("sup birkhoff average brackets", "[pressure]") {
    auto f2 = IntervalMap::chebyshev2();

    auto c = sup_birkhoff_average(f2, Potential::constant(0.4), 7, 100);
    CHECK(c.lower == Catch::Approx(0.4).margin(1e-12));
    CHECK(c.upper == Catch::Approx(0.4).margin(1e-12));

    auto id = Potential::polynomial(Polynomial{0.0, 1.0}, f2.domain());
    long grid = 100000;
    double delta = 0.5 / grid;
    auto b = sup_birkhoff_average(f2, id, 1, grid);
    CHECK(b.lower <= 1.0);
    CHECK(b.upper >= 1.0 - 1e-12); // sup of the identity is 1
    CHECK(b.upper - b.lower <= 4 * delta);

    auto geo = Potential::geometric(Potential::constant(0.0), 1.0, f2);
    CHECK_THROWS_AS(sup_birkhoff_average(f2, geo, 3, 100), NotHolderError);
}

TEST_CASE("sup birkhoff bracket tightens under grid refinement", "[pressure][property]") {
    auto f2 = IntervalMap::chebyshev2();
    auto phi = Potential::cosine(0.3, f2.domain());
    int n = 10;
    auto coarse = sup_birkhoff_average(f2, phi, n, 20000);
    auto fine = sup_birkhoff_average(f2, phi, n, 40000);
    // both brackets contain the sup, so they overlap, and refinement shrinks
    CHECK(fine.lower <= coarse.upper + 1e-12);
    CHECK(coarse.lower <= fine.upper + 1e-12);
    CHECK(fine.upper - fine.lower < coarse.upper - coarse.lower);
    auto [alpha, C] = phi.holder_modulus();
    double L = 4.0, geom = 0.0, Lj = 1.0;
    for (int j = 0; j < n; ++j) { geom += Lj; Lj *= L; }
    CHECK(coarse.upper - coarse.lower <= (C / n) * geom * (0.5 / 20000) + 1e-12);
}

TEST_CASE("sup over periodic orbits", "[pressure]") {
    auto f2 = IntervalMap::chebyshev2();
    auto id = Potential::polynomial(Polynomial{0.0, 1.0}, f2.domain());
    CHECK(sup_invariant_average(f2, id, 1) == Catch::Approx(0.75).margin(1e-9));
    CHECK(sup_invariant_average(f2, id, 2) == Catch::Approx(0.75).margin(1e-9));
    CHECK(sup_invariant_average(f2, Potential::constant(-2.5), 3) == Catch::Approx(-2.5).margin(1e-9));
}

TEST_CASE("hyperbolicity report: zero potential", "[pressure]") {
    auto f2 = IntervalMap::chebyshev2();
    HyperbolicityParams params;
    params.n_max = 12;
    params.n_sup = 6;
    params.grid = 20000;
    params.ulam_cells = 256;
    params.base_point = 0.75;
    auto rep = hyperbolicity_report(f2, Potential::constant(0.0), params);
    CHECK(rep.verdict == Verdict::hyperbolic);
    CHECK(rep.gap == Catch::Approx(std::log(2.0)).margin(1e-9));
    CHECK(rep.pressure_ulam == Catch::Approx(std::log(2.0)).margin(1e-6));
}

TEST_CASE("hyperbolicity report: cosine potential and shift invariance", "[pressure]") {
    auto f2 = IntervalMap::chebyshev2();
    HyperbolicityParams params;
    params.n_max = 12;
    params.n_sup = 6;
    params.grid = 20000;
    params.ulam_cells = 256;
    params.base_point = 0.75;
    auto phi = Potential::cosine(0.3, f2.domain());
    auto rep = hyperbolicity_report(f2, phi, params);
    CHECK(rep.verdict == Verdict::hyperbolic);
    CHECK(rep.gap >= 0.09);

    auto rep10 = hyperbolicity_report(f2, Potential::constant(10.0), params);
    CHECK(rep10.verdict == Verdict::hyperbolic);
    CHECK(rep10.gap == Catch::Approx(std::log(2.0)).margin(1e-9));

    auto shifted = hyperbolicity_report(f2, phi.shifted(1.7), params);
    CHECK(shifted.gap == Catch::Approx(rep.gap).margin(1e-12));
    CHECK(shifted.verdict == rep.verdict);

    auto geo = Potential::geometric(Potential::constant(0.0), 1.0, f2);
    CHECK_THROWS_AS(hyperbolicity_report(f2, geo, params), NotHolderError);
}
