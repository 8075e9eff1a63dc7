#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "thermoform/periodic.hpp"

using namespace thermoform;

namespace {

PeriodicOrbit interior_fixed_point(const IntervalMap& map) {
    for (const auto& e : repelling_orbits(map, 1))
        if (!e.endpoint) return e.orbit;
    throw std::runtime_error("no interior repelling fixed point");
}

} // namespace

TEST_CASE("repelling orbits of cheb2", "[periodic]") {
    auto f2 = IntervalMap::chebyshev2();

    auto n1 = repelling_orbits(f2, 1);
    REQUIRE(n1.size() == 2);
    CHECK(n1[0].orbit.point == Catch::Approx(0.75).margin(1e-10));
    CHECK_FALSE(n1[0].endpoint);
    CHECK(std::abs(n1[0].orbit.multiplier) == Catch::Approx(2.0).margin(1e-8));
    CHECK(n1[1].orbit.point == Catch::Approx(0.0).margin(1e-10));
    CHECK(n1[1].endpoint);
    CHECK(std::abs(n1[1].orbit.multiplier) == Catch::Approx(4.0).margin(1e-8));

    auto n2 = repelling_orbits(f2, 2);
    REQUIRE(n2.size() == 3);
    bool has_cycle = false;
    for (const auto& e : n2)
        if (e.orbit.period == 2) {
            has_cycle = true;
            CHECK(std::abs(e.orbit.multiplier) == Catch::Approx(4.0).margin(1e-7));
        }
    CHECK(has_cycle);
}

TEST_CASE("repelling orbits of cheb3: interior fixed points repel", "[periodic]") {
    auto f3 = IntervalMap::chebyshev3();
    auto n1 = repelling_orbits(f3, 1);
    REQUIRE(n1.size() == 3);
    for (const auto& e : n1)
        if (!e.endpoint) CHECK(std::abs(e.orbit.multiplier) > 1.0);
}

TEST_CASE("periodic gap check at the cheb2 fixed point", "[periodic]") {
    auto f2 = IntervalMap::chebyshev2();
    auto orbit = interior_fixed_point(f2);

    auto zero = periodic_gap_check(f2, Potential::constant(0.0), orbit, 12);
    CHECK(zero.rhs == Catch::Approx(0.0).margin(1e-12));
    CHECK(zero.margin == Catch::Approx(std::log(2.0)).margin(1e-9));
    CHECK(zero.strict);

    // constants cancel exactly
    auto c1 = periodic_gap_check(f2, Potential::constant(-3.7), orbit, 12);
    CHECK(c1.margin == Catch::Approx(zero.margin).margin(1e-12));

    auto cosr = periodic_gap_check(f2, Potential::cosine(0.3, f2.domain()), orbit, 12);
    CHECK(cosr.rhs == Catch::Approx(0.0).margin(1e-12)); // 0.3·cos(3π/2) = 0
    CHECK(cosr.margin >= 0.39);
    CHECK(cosr.strict);

    PeriodicOrbit tame{0.5, 1, 0.5, {0.5}};
    CHECK_THROWS_AS(periodic_gap_check(f2, Potential::constant(0.0), tame, 8),
                    PreconditionError);
}

TEST_CASE("periodic gap margin is shift invariant", "[periodic][property]") {
    auto f2 = IntervalMap::chebyshev2();
    auto orbit = interior_fixed_point(f2);
    auto phi = Potential::cosine(0.3, f2.domain());
    auto base = periodic_gap_check(f2, phi, orbit, 12);
    auto shifted = periodic_gap_check(f2, phi.shifted(1.7), orbit, 12);
    CHECK(shifted.margin == Catch::Approx(base.margin).margin(1e-12));
}

TEST_CASE("horseshoe certificate at x0=0.75", "[periodic]") {
    auto f2 = IntervalMap::chebyshev2();
    auto orbit = interior_fixed_point(f2);

    auto cert = horseshoe_certificate(f2, orbit, 0.2, 8);
    CHECK(cert.K <= 8);
    CHECK(cert.K % 2 == 0);
    CHECK_NOTHROW(validate_certificate(f2, cert));
    // the certificate is self-checking; re-verify the invariants directly
    double sep = std::max(cert.U1.lo - cert.U0.hi, cert.U0.lo - cert.U1.hi);
    CHECK(sep > 1e-9);
    CHECK(cert.V.contains(cert.U0, 1e-9));
    CHECK(cert.V.contains(cert.U1, 1e-9));
    for (const Interval& U : {cert.U0, cert.U1}) {
        Interval img = f2.interval_image_n(U, cert.K);
        CHECK(img.lo == Catch::Approx(cert.V.lo).margin(1e-8));
        CHECK(img.hi == Catch::Approx(cert.V.hi).margin(1e-8));
        // monotone: the endpoints reach opposite ends of V
        double a = f2.iterate(U.lo, cert.K), b = f2.iterate(U.hi, cert.K);
        CHECK(std::abs(a - b) == Catch::Approx(cert.V.width()).margin(1e-7));
    }

    CHECK_THROWS_AS(horseshoe_certificate(f2, orbit, 1e-6, 2), NotFoundError);
}

TEST_CASE("certificate validation rejects tampered certificates", "[periodic]") {
    auto f2 = IntervalMap::chebyshev2();
    auto orbit = interior_fixed_point(f2);
    auto cert = horseshoe_certificate(f2, orbit, 0.2, 8);

    auto overlapping = cert;
    overlapping.U1 = cert.U0;
    CHECK_THROWS_AS(validate_certificate(f2, overlapping), InvariantError);

    auto off_target = cert;
    off_target.U0 = {cert.U0.lo + 0.01, cert.U0.hi};
    CHECK_THROWS_AS(validate_certificate(f2, off_target), InvariantError);
}

TEST_CASE("induced gap series at the zero potential", "[periodic]") {
    auto f2 = IntervalMap::chebyshev2();
    auto orbit = interior_fixed_point(f2);
    auto cert = horseshoe_certificate(f2, orbit, 0.2, 8);

    auto rep = induced_gap_series(f2, Potential::constant(0.0), cert, 8);
    CHECK(rep.phi_hat_x0 == Catch::Approx(0.0).margin(1e-12));
    for (int m = 1; m <= 8; ++m)
        CHECK(rep.itinerary_counts[m - 1] == (std::int64_t{1} << m));
    CHECK_FALSE(rep.quality_warning);
    // with φ = 0, q_m = log 2 exactly at every induced depth
    CHECK(rep.margin >= std::log(2.0) - 1e-3);
    CHECK(rep.strict);
    CHECK(rep.slack == Catch::Approx(0.0).margin(1e-12));

    // q_1 alone already sees both induced preimages
    auto shallow = induced_gap_series(f2, Potential::constant(0.0), cert, 1);
    CHECK(shallow.itinerary_counts[0] == 2);
    CHECK(shallow.margin > 0.0);
}

TEST_CASE("induced gap margin: shift cancellation and slack bound", "[periodic]") {
    auto f2 = IntervalMap::chebyshev2();
    auto orbit = interior_fixed_point(f2);
    auto cert = horseshoe_certificate(f2, orbit, 0.2, 8);

    auto zero = induced_gap_series(f2, Potential::constant(0.0), cert, 8);
    auto shifted = induced_gap_series(f2, Potential::constant(2.3), cert, 8);
    CHECK(shifted.margin == Catch::Approx(zero.margin).margin(1e-10));

    auto cosr = induced_gap_series(f2, Potential::cosine(0.3, f2.domain()), cert, 8);
    CHECK(cosr.strict);
    CHECK(cosr.margin >= std::log(2.0) / cert.K - cosr.slack);
}

TEST_CASE("induced system is a free two-branch IMFS", "[periodic]") {
    auto f2 = IntervalMap::chebyshev2();
    auto orbit = interior_fixed_point(f2);
    auto cert = horseshoe_certificate(f2, orbit, 0.2, 8);

    auto sys = induced_imfs(f2, cert);
    REQUIRE(sys.branch_count() == 2);
    CHECK(sys.branches()[0].time == cert.K);
    CHECK(freeness_check(sys, cert.x0, 5 * cert.K));
    CHECK(star_property_check(sys, cert.x0, 5 * cert.K));
}

TEST_CASE("induced margin is consistent with the periodic gap check", "[periodic]") {
    auto f2 = IntervalMap::chebyshev2();
    auto orbit = interior_fixed_point(f2);
    auto cert = horseshoe_certificate(f2, orbit, 0.2, 8);
    for (const auto& phi : {Potential::constant(0.0), Potential::cosine(0.3, f2.domain())}) {
        auto gap = periodic_gap_check(f2, phi, orbit, 12);
        auto induced = induced_gap_series(f2, phi, cert, 8);
        CHECK(gap.margin >= induced.margin / cert.K - 1e-3);
    }
}
