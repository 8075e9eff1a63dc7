#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "thermoform/errors.hpp"
#include "thermoform/interval_map.hpp"
#include "thermoform/numerics.hpp"
#include "thermoform/potential.hpp"
#include "thermoform/transfer.hpp"

namespace thermoform {

/// Margin added on top of the sup-average bracket width when deciding a
/// hyperbolicity verdict, and the strictness threshold for gap checks.
inline constexpr double kVerdictMargin = 1e-3;

struct TreePressureSeries {
    double base_point = 0.0;
    std::vector<double> values;            // p_n for n = 1..n_max
    std::vector<std::int64_t> leaf_counts; // |f^{-n}(x0)|
    double tail_max = 0.0;                 // max of p_n over the last ceil(n_max/3)
    bool near_critical_flag = false;

    std::int64_t leaf_count(int n) const { return leaf_counts.at(n - 1); }
    double value(int n) const { return values.at(n - 1); }
};

namespace detail {

struct LevelAccum {
    std::vector<KahanAccumulator> sums;
    std::vector<std::int64_t> counts;
    bool near_critical = false;

    explicit LevelAccum(int n) : sums(n), counts(n, 0) {}
};

inline void tree_walk(const IntervalMap& map, const Potential& phi, double y,
                      double birkhoff, int depth, int n_max, LevelAccum& acc) {
    acc.sums[depth - 1].add(std::exp(birkhoff));
    acc.counts[depth - 1] += 1;
    if (map.nearest_critical_distance(y) < tol::near_critical) acc.near_critical = true;
    if (depth == n_max) return;
    for (double z : map.preimages_step(y))
        tree_walk(map, phi, z, birkhoff + phi(z), depth + 1, n_max, acc);
}

} // namespace detail

/// p_n = (1/n)·log Σ_{y in f^{-n}(x0)} exp(S_n(φ)(y)) for n = 1..n_max.
/// Birkhoff sums are carried down the preimage tree; every leaf sum is
/// accumulated in canonical itinerary order with compensated summation.
/// The first-level subtrees are fixed work units merged in branch order,
/// so the result is byte-identical for any thread count.
inline TreePressureSeries tree_pressure_series(const IntervalMap& map, const Potential& phi,
                                               double x0, int n_max, int threads = 1,
                                               std::int64_t budget = kDefaultLeafBudget) {
    map.check_domain(x0);
    if (n_max < 1) throw PreconditionError("n_max must be >= 1");
    if (pow_int(static_cast<double>(map.degree()), n_max) > static_cast<double>(budget))
        throw BudgetError("tree depth " + std::to_string(n_max) + " exceeds the leaf budget");

    TreePressureSeries out;
    out.base_point = x0;

    // warn when the base point sits on the forward critical orbit
    for (const auto& c : map.criticals()) {
        double v = c.point;
        for (int j = 0; j < n_max; ++j) {
            v = map.eval(v);
            if (std::abs(x0 - v) < 1e-6) out.near_critical_flag = true;
        }
    }

    std::vector<double> first = map.preimages_step(x0);
    std::vector<detail::LevelAccum> parts(first.size(), detail::LevelAccum(n_max));
    run_jobs(first.size(), threads, [&](std::size_t i) {
        detail::tree_walk(map, phi, first[i], phi(first[i]), 1, n_max, parts[i]);
    });

    detail::LevelAccum total(n_max);
    for (const auto& part : parts) {
        for (int k = 0; k < n_max; ++k) {
            total.sums[k].merge(part.sums[k]);
            total.counts[k] += part.counts[k];
        }
        total.near_critical = total.near_critical || part.near_critical;
    }
    out.near_critical_flag = out.near_critical_flag || total.near_critical;

    out.values.resize(n_max);
    out.leaf_counts.resize(n_max);
    for (int n = 1; n <= n_max; ++n) {
        out.values[n - 1] = std::log(total.sums[n - 1].value()) / n;
        out.leaf_counts[n - 1] = total.counts[n - 1];
    }
    int tail = (n_max + 2) / 3;
    out.tail_max = *std::max_element(out.values.end() - tail, out.values.end());
    return out;
}

struct SupAverageBracket {
    double lower = 0.0; // max of (1/n)S_n over the grid
    double upper = 0.0; // lower + Hölder modulus bound; sup_I (1/n)S_n lies in between
};

/// Certified two-sided bracket of sup_I (1/n)·S_n(φ) from a uniform grid
/// of cell centers: upper = lower + (C/n)·δ^α·Σ_{j<n} L^j with L = sup|f'|
/// and δ half the grid spacing.
inline SupAverageBracket sup_birkhoff_average(const IntervalMap& map, const Potential& phi,
                                              int n, long grid) {
    if (!phi.is_holder())
        throw NotHolderError("sup-Birkhoff bracket requires a Hölder potential");
    if (n < 1 || grid < 1) throw PreconditionError("n and grid must be positive");
    const Interval dom = map.domain();
    const double h = dom.width() / static_cast<double>(grid);
    double best = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < grid; ++i) {
        double x = dom.lo + (static_cast<double>(i) + 0.5) * h;
        best = std::max(best, birkhoff_sum(map, phi, x, n) / n);
    }
    auto [alpha, C] = phi.holder_modulus();
    double L = map.polynomial().derivative().sup_abs_on(dom);
    double geom = 0.0, Lj = 1.0;
    for (int j = 0; j < n; ++j) {
        geom += Lj;
        Lj *= L;
    }
    double delta = 0.5 * h;
    SupAverageBracket b;
    b.lower = best;
    b.upper = best + (C / n) * std::pow(delta, alpha) * geom;
    return b;
}

/// Max orbit average of φ over all periodic orbits of period <= K; a
/// certified lower bound for the sup of ∫φ dν over invariant measures.
inline double sup_invariant_average(const IntervalMap& map, const Potential& phi, int K,
                                    std::int64_t budget = kDefaultLeafBudget) {
    if (K < 1) throw PreconditionError("max period must be >= 1");
    double best = -std::numeric_limits<double>::infinity();
    std::vector<PeriodicOrbit> seen;
    for (int N = 1; N <= K; ++N) {
        for (const auto& orb : map.periodic_points(N, budget)) {
            bool dup = false;
            for (const auto& s : seen)
                if (s.period == orb.period && std::abs(s.point - orb.point) < 1e-8) dup = true;
            if (dup) continue;
            seen.push_back(orb);
            double avg = 0.0;
            for (double q : orb.orbit) avg += phi(q);
            best = std::max(best, avg / orb.period);
        }
    }
    return best;
}

enum class Verdict { hyperbolic, undecided };

inline const char* to_string(Verdict v) {
    return v == Verdict::hyperbolic ? "hyperbolic" : "undecided";
}

struct HyperbolicityParams {
    int n_max = 12;       // tree depth
    int n_sup = 8;        // sup averages for n = 1..n_sup
    long grid = 100000;   // sup grid size
    int ulam_cells = 1024;
    double base_point = std::numeric_limits<double>::quiet_NaN(); // NaN: pick default
    int threads = 1;
    std::int64_t budget = kDefaultLeafBudget;
};

struct HyperbolicityReport {
    TreePressureSeries series;
    std::vector<double> sup_avg_lower; // n = 1..n_sup
    std::vector<double> sup_avg_upper;
    double pressure_lower = 0.0; // tail_max of the tree series
    double pressure_ulam = 0.0;  // log of the leading Ulam eigenvalue
    int min_n = 1;               // argmin of sup_avg_upper
    double gap = 0.0;            // pressure_lower - min_n sup_avg_upper
    double margin = 0.0;         // 1e-3 + bracket width at min_n
    Verdict verdict = Verdict::undecided;
};

/// Default base point: 3/4 of the way across the domain (a generic interior
/// point for the bundled families), nudged off critical points if needed.
inline double default_base_point(const IntervalMap& map) {
    const Interval dom = map.domain();
    double x0 = dom.lo + 0.75 * dom.width();
    while (map.nearest_critical_distance(x0) < 1e-3) x0 += 1e-3 * dom.width();
    return x0;
}

/// Assembles the hyperbolicity decision: certified sup-average upper bounds
/// against the tree-pressure lower bound, with an Ulam cross-estimate.
inline HyperbolicityReport hyperbolicity_report(const IntervalMap& map, const Potential& phi,
                                                const HyperbolicityParams& params = {}) {
    if (!phi.is_holder())
        throw NotHolderError("hyperbolicity verdicts require a Hölder potential");
    HyperbolicityReport rep;
    double x0 = std::isnan(params.base_point) ? default_base_point(map) : params.base_point;
    rep.series = tree_pressure_series(map, phi, x0, params.n_max, params.threads, params.budget);
    rep.pressure_lower = rep.series.tail_max;
    rep.pressure_ulam = ulam_log_pressure(map, phi, params.ulam_cells);
    rep.sup_avg_lower.resize(params.n_sup);
    rep.sup_avg_upper.resize(params.n_sup);
    for (int n = 1; n <= params.n_sup; ++n) {
        auto b = sup_birkhoff_average(map, phi, n, params.grid);
        rep.sup_avg_lower[n - 1] = b.lower;
        rep.sup_avg_upper[n - 1] = b.upper;
    }
    rep.min_n = 1;
    for (int n = 2; n <= params.n_sup; ++n)
        if (rep.sup_avg_upper[n - 1] < rep.sup_avg_upper[rep.min_n - 1]) rep.min_n = n;
    double best_upper = rep.sup_avg_upper[rep.min_n - 1];
    rep.gap = rep.pressure_lower - best_upper;
    rep.margin = kVerdictMargin + (best_upper - rep.sup_avg_lower[rep.min_n - 1]);
    rep.verdict = (best_upper + rep.margin < rep.pressure_lower) ? Verdict::hyperbolic
                                                                 : Verdict::undecided;
    return rep;
}

} // namespace thermoform
