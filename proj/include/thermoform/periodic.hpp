#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "thermoform/errors.hpp"
#include "thermoform/imfs.hpp"
#include "thermoform/interval_map.hpp"
#include "thermoform/potential.hpp"
#include "thermoform/pressure.hpp"

namespace thermoform {

inline constexpr double kRepellingMargin = 1e-6;
inline constexpr double kCertificateGap = 1e-9;
inline constexpr double kCertificateEndpointTol = 1e-8;

struct RepellingOrbitEntry {
    PeriodicOrbit orbit;
    bool endpoint = false; // some orbit point sits on the domain boundary
};

/// Hyperbolic repelling orbits with period <= N_max, interior ones first.
inline std::vector<RepellingOrbitEntry> repelling_orbits(const IntervalMap& map, int N_max,
                                                         std::int64_t budget = kDefaultLeafBudget) {
    std::vector<RepellingOrbitEntry> out;
    for (int N = 1; N <= N_max; ++N) {
        for (const auto& orb : map.periodic_points(N, budget)) {
            bool dup = false;
            for (const auto& e : out)
                if (e.orbit.period == orb.period && std::abs(e.orbit.point - orb.point) < 1e-8)
                    dup = true;
            if (dup) continue;
            if (std::abs(orb.multiplier) <= 1.0 + kRepellingMargin) continue;
            bool at_end = false;
            for (double q : orb.orbit)
                if (map.domain().boundary_distance(q) <= tol::boundary) at_end = true;
            out.push_back({orb, at_end});
        }
    }
    std::sort(out.begin(), out.end(), [](const RepellingOrbitEntry& a, const RepellingOrbitEntry& b) {
        if (a.endpoint != b.endpoint) return !a.endpoint;
        if (a.orbit.period != b.orbit.period) return a.orbit.period < b.orbit.period;
        return a.orbit.point < b.orbit.point;
    });
    return out;
}

struct PeriodicGapReport {
    PeriodicOrbit orbit;
    TreePressureSeries series; // tree pressure at the periodic point
    double rhs = 0.0;          // (1/N)·S_N(φ)(x0)
    double margin = 0.0;       // tail_max - rhs
    bool strict = false;       // margin > 1e-3
};

/// Tree pressure at a repelling periodic point against its own orbit average.
inline PeriodicGapReport periodic_gap_check(const IntervalMap& map, const Potential& phi,
                                            const PeriodicOrbit& orbit, int n_max,
                                            int threads = 1,
                                            std::int64_t budget = kDefaultLeafBudget) {
    if (std::abs(orbit.multiplier) <= 1.0 + kRepellingMargin)
        throw PreconditionError("gap check needs a hyperbolic repelling orbit");
    PeriodicGapReport rep;
    rep.orbit = orbit;
    rep.series = tree_pressure_series(map, phi, orbit.point, n_max, threads, budget);
    rep.rhs = birkhoff_sum(map, phi, orbit.point, orbit.period) / orbit.period;
    rep.margin = rep.series.tail_max - rep.rhs;
    rep.strict = rep.margin > kVerdictMargin;
    return rep;
}

/// Two disjoint intervals mapped by the same iterate onto a common target
/// containing both: the induced full 2-shift.
struct HorseshoeCertificate {
    double x0 = 0.0;
    int K = 0;
    Interval U0, U1, V;
};

namespace detail {

/// f^K restricted to W is monotone iff no backward critical orbit point
/// lies in the interior of W.
inline bool iterate_monotone_on(const IntervalMap& map, const Interval& W, int K,
                                std::int64_t budget) {
    for (const auto& c : map.criticals())
        for (int j = 0; j < K; ++j)
            for (double y : map.preimages(c.point, j, budget).points)
                if (y > W.lo + tol::boundary && y < W.hi - tol::boundary) return false;
    return true;
}

inline bool full_branch_onto(const IntervalMap& map, const Interval& W, const Interval& V,
                             int K, std::int64_t budget) {
    Interval img = map.interval_image_n(W, K);
    return std::abs(img.lo - V.lo) <= kCertificateEndpointTol &&
           std::abs(img.hi - V.hi) <= kCertificateEndpointTol &&
           iterate_monotone_on(map, W, K, budget);
}

} // namespace detail

/// Throws InvariantError unless all certificate invariants hold.
inline void validate_certificate(const IntervalMap& map, const HorseshoeCertificate& cert,
                                 std::int64_t budget = kDefaultLeafBudget) {
    const Interval &U0 = cert.U0, &U1 = cert.U1;
    double sep = std::max(U1.lo - U0.hi, U0.lo - U1.hi);
    if (!(sep > kCertificateGap))
        throw InvariantError("certificate intervals are not disjoint");
    if (!cert.V.contains(U0, tol::boundary) || !cert.V.contains(U1, tol::boundary))
        throw InvariantError("certificate intervals are not inside the target");
    for (const Interval& U : {U0, U1})
        if (!detail::full_branch_onto(map, U, cert.V, cert.K, budget))
            throw InvariantError("certificate interval does not map monotonically onto the target");
    if (!cert.V.contains(cert.x0))
        throw InvariantError("certificate target does not contain the periodic point");
}

/// Searches K = 2N, 4N, ... <= K_max for two disjoint full pull-back
/// components of V = B(x0, rho), seeded by the backward orbit of x0.
/// Deterministic: increasing K, then leftmost second component.
inline HorseshoeCertificate horseshoe_certificate(const IntervalMap& map,
                                                  const PeriodicOrbit& orbit, double rho,
                                                  int K_max,
                                                  std::int64_t budget = kDefaultLeafBudget) {
    if (std::abs(orbit.multiplier) <= 1.0 + kRepellingMargin)
        throw PreconditionError("certificate search needs a repelling orbit");
    double x0 = orbit.point;
    const Interval dom = map.domain();
    if (!(x0 - rho > dom.lo && x0 + rho < dom.hi))
        throw PreconditionError("ball around the periodic point leaves the domain interior");
    Interval V{x0 - rho, x0 + rho};

    for (int K = 2 * orbit.period; K <= K_max; K += 2 * orbit.period) {
        auto comps = map.pull_backs(V, K, budget);
        auto component_of = [&](double y) -> std::optional<Interval> {
            for (const auto& C : comps)
                if (C.contains(y, tol::boundary)) return C;
            return std::nullopt;
        };
        auto u0 = component_of(x0);
        if (!u0 || !V.contains(*u0, tol::boundary) ||
            !detail::full_branch_onto(map, *u0, V, K, budget))
            continue;
        for (double seed : map.preimages(x0, K, budget).points) {
            if (!V.contains(seed)) continue;
            if (u0->contains(seed, tol::boundary)) continue;
            auto u1 = component_of(seed);
            if (!u1 || !V.contains(*u1, tol::boundary)) continue;
            double sep = std::max(u1->lo - u0->hi, u0->lo - u1->hi);
            if (!(sep > kCertificateGap)) continue;
            if (!detail::full_branch_onto(map, *u1, V, K, budget)) continue;
            HorseshoeCertificate cert{x0, K, *u0, *u1, V};
            validate_certificate(map, cert, budget);
            return cert;
        }
    }
    throw NotFoundError("no horseshoe certificate up to the requested iterate count");
}

struct InducedGapReport {
    double phi_hat_x0 = 0.0;                   // φ̂(x0) = (1/K)·S_K(φ)(x0)
    std::vector<double> q;                     // q_m, m = 1..m_max
    std::vector<std::int64_t> itinerary_counts; // induced preimages per level
    double tail_max = 0.0;
    double margin = 0.0; // tail_max - φ̂(x0)
    bool strict = false;
    double slack = 0.0;          // max spread of Ŝ_m(φ̂) over itinerary cylinders
    bool quality_warning = false; // itinerary count below 2^m at some level
};

namespace detail {

/// Monotone solve of f^K(y) = z on the branch interval U.
inline double induced_solve(const IntervalMap& map, const Interval& U, int K, double z) {
    double glo = map.iterate(U.lo, K), ghi = map.iterate(U.hi, K);
    bool inc = ghi > glo;
    double u = U.lo, v = U.hi;
    if (!inc) std::swap(u, v);
    // u is on the low side of the target
    for (int it = 0; it < 200; ++it) {
        double m = 0.5 * (u + v);
        if (m == u || m == v) break;
        (map.iterate(m, K) <= z ? u : v) = m;
    }
    double y = 0.5 * (u + v);
    for (int it = 0; it < 2; ++it) {
        double r = map.iterate(y, K) - z;
        if (r == 0.0) break;
        double d = map.orbit_derivative(y, K);
        if (std::abs(d) < 1e-9) break;
        double ny = y - r / d;
        if (!U.contains(ny)) break;
        if (std::abs(map.iterate(ny, K) - z) < std::abs(r))
            y = ny;
        else
            break;
    }
    return y;
}

struct InducedWalkState {
    const IntervalMap* map;
    const Potential* phi;
    const HorseshoeCertificate* cert;
    int m_max;
    std::vector<KahanAccumulator> sums;
    std::vector<std::int64_t> counts;
};

inline void induced_walk(InducedWalkState& st, double y, double shat, int depth) {
    st.sums[depth - 1].add(std::exp(shat));
    st.counts[depth - 1] += 1;
    if (depth == st.m_max) return;
    for (const Interval& U : {st.cert->U0, st.cert->U1}) {
        double z = induced_solve(*st.map, U, st.cert->K, y);
        if (std::abs(st.map->iterate(z, st.cert->K) - y) > 1e-6) continue; // failed solve
        double phat = birkhoff_sum(*st.map, *st.phi, z, st.cert->K) / st.cert->K;
        induced_walk(st, z, shat + phat, depth + 1);
    }
}

} // namespace detail

/// Pressure series of the induced two-branch system f̂ = f^K on U0 ∪ U1
/// with potential φ̂ = (1/K)·S_K(φ), compared against φ̂(x0).
inline InducedGapReport induced_gap_series(const IntervalMap& map, const Potential& phi,
                                           const HorseshoeCertificate& cert, int m_max,
                                           std::int64_t budget = kDefaultLeafBudget) {
    validate_certificate(map, cert, budget);
    if (m_max < 1) throw PreconditionError("m_max must be >= 1");
    if (pow_int(2.0, m_max) > static_cast<double>(budget))
        throw BudgetError("induced depth exceeds the budget");

    InducedGapReport rep;
    rep.phi_hat_x0 = birkhoff_sum(map, phi, cert.x0, cert.K) / cert.K;

    detail::InducedWalkState st{&map, &phi, &cert, m_max, {}, {}};
    st.sums.resize(m_max);
    st.counts.assign(m_max, 0);
    for (const Interval& U : {cert.U0, cert.U1}) {
        double z = detail::induced_solve(map, U, cert.K, cert.x0);
        if (std::abs(map.iterate(z, cert.K) - cert.x0) > 1e-6) continue;
        double phat = birkhoff_sum(map, phi, z, cert.K) / cert.K;
        detail::induced_walk(st, z, phat, 1);
    }

    rep.q.resize(m_max);
    rep.itinerary_counts = st.counts;
    for (int m = 1; m <= m_max; ++m) {
        rep.q[m - 1] = std::log(st.sums[m - 1].value()) / m;
        if (st.counts[m - 1] < (std::int64_t{1} << m)) rep.quality_warning = true;
    }
    int tail = (m_max + 2) / 3;
    rep.tail_max = *std::max_element(rep.q.end() - tail, rep.q.end());
    rep.margin = rep.tail_max - rep.phi_hat_x0;
    rep.strict = rep.margin > kVerdictMargin;

    // distortion slack: spread of Ŝ_m(φ̂) over each itinerary cylinder,
    // sampled at the cylinder edges and midpoint
    double slack = 0.0;
    struct Cyl { Interval iv; int depth; };
    std::vector<Cyl> stack{{cert.V, 0}};
    while (!stack.empty()) {
        Cyl c = stack.back();
        stack.pop_back();
        if (c.depth > 0) {
            double smin = std::numeric_limits<double>::infinity(), smax = -smin;
            for (double x : {c.iv.lo, c.iv.mid(), c.iv.hi}) {
                double s = birkhoff_sum(map, phi, x, c.depth * cert.K) / cert.K;
                smin = std::min(smin, s);
                smax = std::max(smax, s);
            }
            slack = std::max(slack, smax - smin);
        }
        if (c.depth == m_max) continue;
        for (const Interval& U : {cert.U0, cert.U1}) {
            double a = detail::induced_solve(map, U, cert.K, c.iv.lo);
            double b = detail::induced_solve(map, U, cert.K, c.iv.hi);
            stack.push_back({{std::min(a, b), std::max(a, b)}, c.depth + 1});
        }
    }
    rep.slack = slack;
    return rep;
}

/// The induced system as a two-branch IMFS with uniform time K.
inline Imfs induced_imfs(const IntervalMap& map, const HorseshoeCertificate& cert) {
    return Imfs(map, cert.V, {{cert.K, cert.U0}, {cert.K, cert.U1}});
}

} // namespace thermoform
