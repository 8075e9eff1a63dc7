#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "thermoform/errors.hpp"
#include "thermoform/interval.hpp"
#include "thermoform/numerics.hpp"
#include "thermoform/polynomial.hpp"

namespace thermoform {

/// Tolerances shared by the preimage / pull-back machinery.
namespace tol {
inline constexpr double domain = 1e-12;
inline constexpr double dedup_radius = 1e-10;
inline constexpr double preimage_residual = 1e-11;
inline constexpr double near_critical = 1e-8;
inline constexpr double boundary = 1e-9;
inline constexpr double merge_gap = 1e-10;
} // namespace tol

inline constexpr std::int64_t kDefaultLeafBudget = std::int64_t{1} << 24;

/// Maximal subinterval on which the map is strictly monotone.
struct MonotoneBranch {
    Interval sub;
    bool increasing = true;
    Interval range; // {f(sub.lo), f(sub.hi)} ordered
};

struct CriticalPoint {
    double point = 0.0;
    int order = 2; // 1 + multiplicity of the point as a root of f'
};

struct PeriodicOrbit {
    double point = 0.0;        // smallest point of the orbit
    int period = 1;            // minimal period
    double multiplier = 0.0;   // Df^period along the orbit
    std::vector<double> orbit; // the `period` points starting at `point`
};

struct PreimageSet {
    std::vector<double> points; // ascending, distinct
    bool near_critical = false; // some solution within 1e-8 of a critical point
};

/// A piecewise-monotone polynomial self-map of a compact interval.
/// Immutable after construction; all queries are pure.
class IntervalMap {
public:
    IntervalMap(Polynomial poly, Interval domain, std::string name = "")
        : poly_(std::move(poly)), deriv_(poly_.derivative()),
          domain_(domain), name_(std::move(name)) {
        if (!(domain_.width() > 0))
            throw ConstructionError("map domain must have positive width");
        build_branches();
        validate_image();
        compute_degree();
    }

    static IntervalMap chebyshev2() {
        return IntervalMap(Polynomial{0.0, 4.0, -4.0}, {0.0, 1.0}, "cheb2");
    }
    static IntervalMap chebyshev3() {
        return IntervalMap(Polynomial{0.0, -3.0, 0.0, 4.0}, {-1.0, 1.0}, "cheb3");
    }
    static IntervalMap quadratic(double a) {
        return IntervalMap(Polynomial{0.0, a, -a}, {0.0, 1.0},
                           "quad:" + format_double(a));
    }

    const Interval& domain() const { return domain_; }
    const std::vector<MonotoneBranch>& branches() const { return branches_; }
    const std::vector<CriticalPoint>& criticals() const { return criticals_; }
    int degree() const { return degree_; }
    const Polynomial& polynomial() const { return poly_; }
    const std::string& name() const { return name_; }

    void check_domain(double x) const {
        if (!domain_.contains(x, tol::domain))
            throw OutOfDomainError("point " + format_double(x) + " outside domain [" +
                                   format_double(domain_.lo) + "," +
                                   format_double(domain_.hi) + "]");
    }

    /// f(x), clamped into the domain (the image is contained in it up to
    /// 1e-12 slack by the construction-time check).
    double eval(double x) const {
        check_domain(x);
        return domain_.clamp(poly_(domain_.clamp(x)));
    }

    double derivative(double x) const {
        check_domain(x);
        return deriv_(x);
    }

    double iterate(double x, int n) const {
        double v = domain_.clamp(x);
        for (int i = 0; i < n; ++i) v = domain_.clamp(poly_(v));
        return v;
    }

    /// Df^n(x) (product of derivative values along the orbit).
    double orbit_derivative(double x, int n) const {
        double v = domain_.clamp(x), d = 1.0;
        for (int i = 0; i < n; ++i) {
            d *= deriv_(v);
            v = domain_.clamp(poly_(v));
        }
        return d;
    }

    double nearest_critical_distance(double x) const {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& c : criticals_) d = std::min(d, std::abs(x - c.point));
        return d;
    }

    /// Solutions of f(y) = t on one monotone branch, if any.
    std::optional<double> solve_on_branch(const MonotoneBranch& b, double t) const {
        const double accept = 1e-11 * scale_;
        if (t < b.range.lo - accept || t > b.range.hi + accept) return std::nullopt;
        double tc = b.range.clamp(t);
        double u = b.sub.lo, v = b.sub.hi;
        double fu = poly_(u);
        // Orientation fixes which endpoint is below the target.
        bool below_left = b.increasing ? (fu <= tc) : (fu >= tc);
        if (!below_left) std::swap(u, v);
        // Bisection on the monotone piece down to machine resolution.
        for (int it = 0; it < 200; ++it) {
            double m = 0.5 * (u + v);
            if (m == u || m == v) break;
            double fm = poly_(m);
            bool low = b.increasing ? (fm <= tc) : (fm >= tc);
            (low ? u : v) = m;
        }
        double y = 0.5 * (u + v);
        for (int it = 0; it < 2; ++it) {
            double r = poly_(y) - tc;
            if (r == 0.0) break;
            double d = deriv_(y);
            if (std::abs(d) < 1e-12) break;
            double ny = y - r / d;
            if (!b.sub.contains(ny)) break;
            if (std::abs(poly_(ny) - tc) < std::abs(r))
                y = ny;
            else
                break;
        }
        // Near-critical targets leave a flat plateau of equally good doubles;
        // snap onto the critical point so multiple roots collapse cleanly.
        for (const auto& c : criticals_)
            if (std::abs(y - c.point) < tol::near_critical &&
                std::abs(poly_(c.point) - tc) <= accept)
                return c.point;
        return y;
    }

    /// Distinct solutions of f(y) = t, ascending.
    std::vector<double> preimages_step(double t) const {
        std::vector<double> out;
        for (const auto& b : branches_)
            if (auto y = solve_on_branch(b, t)) out.push_back(*y);
        std::sort(out.begin(), out.end());
        dedup(out, tol::dedup_radius);
        return out;
    }

    /// All distinct solutions of f^n(y) = x0. Level-by-level branch solves,
    /// each level re-polished against the full composition so the residual
    /// |f^n(y) - x0| stays at the 1e-11 contract.
    PreimageSet preimages(double x0, int n,
                          std::int64_t budget = kDefaultLeafBudget) const {
        check_domain(x0);
        check_budget(n, budget);
        PreimageSet res;
        std::vector<double> level{domain_.clamp(x0)};
        for (int k = 1; k <= n; ++k) {
            std::vector<double> next;
            for (double y : level)
                for (const auto& b : branches_)
                    if (auto z = solve_on_branch(b, y))
                        next.push_back(polish_orbit_root(*z, k, x0));
            std::sort(next.begin(), next.end());
            dedup(next, tol::dedup_radius);
            level = std::move(next);
        }
        for (double y : level)
            if (nearest_critical_distance(y) < tol::near_critical) res.near_critical = true;
        res.points = std::move(level);
        return res;
    }

    /// Connected components of f^{-n}(J), ascending.
    std::vector<Interval> pull_backs(const Interval& J, int n,
                                     std::int64_t budget = kDefaultLeafBudget) const {
        if (!domain_.contains(J, tol::domain))
            throw OutOfDomainError("pull-back target not contained in the domain");
        check_budget(n, budget);
        std::vector<Interval> comps{intersect(J, domain_)};
        for (int k = 1; k <= n; ++k) {
            std::vector<Interval> pieces;
            for (const auto& C : comps) {
                for (const auto& b : branches_) {
                    Interval seg = intersect(C, b.range);
                    if (!(seg.width() > 0)) continue;
                    auto y1 = solve_on_branch(b, seg.lo);
                    auto y2 = solve_on_branch(b, seg.hi);
                    if (!y1 || !y2) continue;
                    pieces.push_back({std::min(*y1, *y2), std::max(*y1, *y2)});
                }
            }
            std::sort(pieces.begin(), pieces.end(),
                      [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
            comps.clear();
            for (const auto& p : pieces) {
                if (!comps.empty() && p.lo - comps.back().hi <= tol::merge_gap)
                    comps.back().hi = std::max(comps.back().hi, p.hi);
                else
                    comps.push_back(p);
            }
        }
        for (auto& C : comps) {
            C.lo = polish_pullback_endpoint(C.lo, n, J);
            C.hi = polish_pullback_endpoint(C.hi, n, J);
        }
        return comps;
    }

    /// True iff both endpoints of the pull-back component W land on the
    /// boundary of J0 under f^n (tolerance 1e-9).
    bool boundary_check(const Interval& J0, const Interval& W, int n,
                        std::int64_t budget = kDefaultLeafBudget) const {
        auto comps = pull_backs(J0, n, budget);
        bool inside = false;
        for (const auto& C : comps)
            if (C.contains(W, tol::boundary)) { inside = true; break; }
        if (!inside)
            throw PreconditionError("interval is not inside any pull-back component");
        double vlo = iterate(W.lo, n), vhi = iterate(W.hi, n);
        auto on_boundary = [&](double v) {
            return std::abs(v - J0.lo) <= tol::boundary || std::abs(v - J0.hi) <= tol::boundary;
        };
        return on_boundary(vlo) && on_boundary(vhi);
    }

    /// Exact image f(V): branch endpoint values plus critical values inside V
    /// (critical points are branch edges, so branch-segment endpoints cover them).
    Interval interval_image(const Interval& V) const {
        Interval W = intersect(V, domain_);
        if (W.empty()) throw OutOfDomainError("interval does not meet the domain");
        double mn = std::numeric_limits<double>::infinity();
        double mx = -mn;
        for (const auto& b : branches_) {
            Interval seg = intersect(W, b.sub);
            if (seg.empty()) continue;
            double v1 = poly_(seg.lo), v2 = poly_(seg.hi);
            mn = std::min({mn, v1, v2});
            mx = std::max({mx, v1, v2});
        }
        return {domain_.clamp(mn), domain_.clamp(mx)};
    }

    Interval interval_image_n(const Interval& V, int n) const {
        Interval W = intersect(V, domain_);
        for (int i = 0; i < n; ++i) W = interval_image(W);
        return W;
    }

    /// Smallest n <= n_max with f^n(U) = domain, if any.
    std::optional<int> exactness_time(const Interval& U, int n_max) const {
        if (U.empty() || !domain_.contains(U, tol::domain))
            throw OutOfDomainError("exactness query interval invalid");
        const double eq = 1e-12 * scale_;
        Interval W = intersect(U, domain_);
        for (int n = 0; n <= n_max; ++n) {
            if (std::abs(W.lo - domain_.lo) <= eq && std::abs(W.hi - domain_.hi) <= eq)
                return n;
            W = interval_image(W);
        }
        return std::nullopt;
    }

    /// Two distinct points of f^{-n}(x0), one in each half of U, whose small
    /// neighborhoods map over both sides of x0 (checked at eps 1e-4 and 1e-6).
    std::pair<double, double> side_covering_points(double x0, const Interval& U, int n,
                                                   std::int64_t budget = kDefaultLeafBudget) const {
        check_domain(x0);
        if (!(domain_.boundary_distance(x0) > 0))
            throw PreconditionError("base point must be interior");
        if (U.empty() || !domain_.contains(U, tol::domain))
            throw OutOfDomainError("search interval invalid");
        double mid = U.mid();
        Interval left{U.lo, mid}, right{mid, U.hi};
        if (!exactness_time(left, n) || !exactness_time(right, n))
            throw NotFoundError("depth too small: halves of U do not cover the interval yet");
        auto two_sided = [&](double y) {
            for (double eps : {1e-4, 1e-6}) {
                Interval img = interval_image_n({y - eps, y + eps}, n);
                if (!(img.lo < x0 && img.hi > x0)) return false;
            }
            return true;
        };
        auto pick = [&](const Interval& half) -> std::optional<double> {
            for (double y : preimages(x0, n, budget).points)
                if (half.contains(y) && two_sided(y)) return y;
            return std::nullopt;
        };
        auto y1 = pick(left);
        auto y2 = pick(right);
        if (!y1 || !y2 || std::abs(*y1 - *y2) <= tol::dedup_radius)
            throw NotFoundError("no two-sided covering pair at this depth");
        return {*y1, *y2};
    }

    /// All periodic orbits of period dividing N (each reported once, with
    /// minimal period). Fixed points of f^N are bracketed on the monotone
    /// pieces of f^N, whose edges are the backward orbits of the critical
    /// points.
    std::vector<PeriodicOrbit> periodic_points(int N,
                                               std::int64_t budget = kDefaultLeafBudget) const {
        check_budget(N, budget);
        std::vector<double> nodes{domain_.lo, domain_.hi};
        for (const auto& c : criticals_)
            for (int j = 0; j < N; ++j)
                for (double y : preimages(c.point, j, budget).points) nodes.push_back(y);
        std::sort(nodes.begin(), nodes.end());
        dedup(nodes, 1e-13);

        const double ztol = 1e-10 * scale_;
        auto g = [&](double x) { return iterate(x, N) - x; };
        std::vector<double> fixed;
        for (double nd : nodes)
            if (std::abs(g(nd)) <= ztol) fixed.push_back(nd);
        const int samples = 16;
        for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
            double u = nodes[k], v = nodes[k + 1];
            if (!(v - u > 1e-13)) continue;
            std::vector<double> xs(samples + 1), gs(samples + 1);
            for (int s = 0; s <= samples; ++s) {
                xs[s] = u + (v - u) * s / samples;
                gs[s] = g(xs[s]);
            }
            for (int s = 1; s < samples; ++s)
                if (std::abs(gs[s]) <= ztol) fixed.push_back(xs[s]);
            for (int s = 0; s < samples; ++s)
                if (std::abs(gs[s]) > ztol && std::abs(gs[s + 1]) > ztol &&
                    (gs[s] < 0) != (gs[s + 1] < 0))
                    fixed.push_back(bisect_fixed(xs[s], xs[s + 1], gs[s], N));
        }
        for (double& p : fixed) p = polish_fixed(p, N);
        std::sort(fixed.begin(), fixed.end());
        dedup(fixed, 1e-9);
        return group_orbits(fixed, N);
    }

private:
    void build_branches() {
        criticals_.clear();
        scale_ = poly_.magnitude_on(domain_);
        std::vector<double> cps = deriv_.roots_in(domain_);
        for (double c : cps) {
            int order = 2;
            Polynomial d = deriv_;
            // first non-vanishing higher derivative fixes the order
            for (int k = 2; k <= poly_.degree() + 1; ++k) {
                d = d.derivative();
                if (d.zero() || std::abs(d(c)) > 1e-7 * d.magnitude_on(domain_)) {
                    order = k;
                    break;
                }
            }
            criticals_.push_back({c, order});
        }
        std::vector<double> edges{domain_.lo};
        for (const auto& c : criticals_)
            if (c.point > domain_.lo + 1e-12 && c.point < domain_.hi - 1e-12)
                edges.push_back(c.point);
        edges.push_back(domain_.hi);
        std::sort(edges.begin(), edges.end());
        branches_.clear();
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            Interval sub{edges[i], edges[i + 1]};
            if (!(sub.width() > 1e-13)) continue;
            bool inc = deriv_(sub.mid()) > 0;
            double v1 = poly_(sub.lo), v2 = poly_(sub.hi);
            branches_.push_back({sub, inc, {std::min(v1, v2), std::max(v1, v2)}});
        }
        if (branches_.empty())
            throw ConstructionError("map has no monotone branch");
    }

    void validate_image() const {
        for (const auto& b : branches_)
            if (b.range.lo < domain_.lo - 1e-12 * scale_ ||
                b.range.hi > domain_.hi + 1e-12 * scale_)
                throw ConstructionError("map image is not contained in its domain");
    }

    void compute_degree() {
        std::vector<double> cuts;
        for (const auto& b : branches_) {
            cuts.push_back(b.range.lo);
            cuts.push_back(b.range.hi);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        int deg = 1;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            double m = 0.5 * (cuts[i] + cuts[i + 1]);
            int cover = 0;
            for (const auto& b : branches_)
                if (m > b.range.lo && m < b.range.hi) ++cover;
            deg = std::max(deg, cover);
        }
        degree_ = deg;
    }

    void check_budget(int n, std::int64_t budget) const {
        double leaves = pow_int(static_cast<double>(degree_), n);
        if (leaves > static_cast<double>(budget))
            throw BudgetError("depth " + std::to_string(n) + " exceeds the leaf budget");
    }

    static void dedup(std::vector<double>& v, double radius) {
        v.erase(std::unique(v.begin(), v.end(),
                            [radius](double a, double b) { return std::abs(b - a) < radius; }),
                v.end());
    }

    /// Newton refinement of y against f^k(y) = target; a step is kept only
    /// if the composed residual shrinks.
    double polish_orbit_root(double y, int k, double target) const {
        for (int it = 0; it < 2; ++it) {
            double v = y, d = 1.0;
            for (int j = 0; j < k; ++j) {
                d *= deriv_(v);
                v = domain_.clamp(poly_(v));
            }
            double r = v - target;
            if (r == 0.0 || std::abs(d) < 1e-9) break;
            double ny = y - r / d;
            if (!domain_.contains(ny)) break;
            if (std::abs(iterate(ny, k) - target) < std::abs(r))
                y = ny;
            else
                break;
        }
        return y;
    }

    double polish_pullback_endpoint(double e, int n, const Interval& J) const {
        double v = iterate(e, n);
        double t;
        if (std::abs(v - J.lo) <= 1e-6 * scale_)
            t = J.lo;
        else if (std::abs(v - J.hi) <= 1e-6 * scale_)
            t = J.hi;
        else
            return e; // endpoint inherited from the domain boundary
        return polish_orbit_root(e, n, t);
    }

    double bisect_fixed(double u, double v, double gu, int N) const {
        bool neg_left = gu < 0;
        for (int it = 0; it < 200; ++it) {
            double m = 0.5 * (u + v);
            if (m == u || m == v) break;
            double gm = iterate(m, N) - m;
            if (gm == 0.0) return m;
            ((gm < 0) == neg_left ? u : v) = m;
        }
        return 0.5 * (u + v);
    }

    double polish_fixed(double p, int N) const {
        for (int it = 0; it < 3; ++it) {
            double r = iterate(p, N) - p;
            if (r == 0.0) break;
            double d = orbit_derivative(p, N) - 1.0;
            if (std::abs(d) < 1e-9) break;
            double np = p - r / d;
            if (!domain_.contains(np)) break;
            if (std::abs(iterate(np, N) - np) < std::abs(r))
                p = np;
            else
                break;
        }
        return p;
    }

    std::vector<PeriodicOrbit> group_orbits(const std::vector<double>& fixed, int N) const {
        const double match = 1e-7 * scale_;
        std::vector<bool> used(fixed.size(), false);
        std::vector<PeriodicOrbit> orbits;
        for (std::size_t i = 0; i < fixed.size(); ++i) {
            if (used[i]) continue;
            double p = fixed[i];
            // minimal period = smallest divisor d of N with f^d(p) = p
            int d = N;
            for (int cand = 1; cand <= N; ++cand) {
                if (N % cand != 0) continue;
                if (std::abs(iterate(p, cand) - p) <= match) { d = cand; break; }
            }
            PeriodicOrbit orb;
            orb.period = d;
            double v = p;
            for (int j = 0; j < d; ++j) {
                orb.orbit.push_back(v);
                // mark the matching root as consumed
                for (std::size_t k = 0; k < fixed.size(); ++k)
                    if (!used[k] && std::abs(fixed[k] - v) <= match) used[k] = true;
                v = eval(v);
            }
            std::rotate(orb.orbit.begin(),
                        std::min_element(orb.orbit.begin(), orb.orbit.end()),
                        orb.orbit.end());
            orb.point = orb.orbit.front();
            double mult = 1.0;
            for (double q : orb.orbit) mult *= deriv_(q);
            orb.multiplier = mult;
            orbits.push_back(std::move(orb));
        }
        std::sort(orbits.begin(), orbits.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
            return a.period != b.period ? a.period < b.period : a.point < b.point;
        });
        return orbits;
    }

    Polynomial poly_;
    Polynomial deriv_;
    Interval domain_;
    std::string name_;
    std::vector<MonotoneBranch> branches_;
    std::vector<CriticalPoint> criticals_;
    int degree_ = 1;
    double scale_ = 1.0;
};

} // namespace thermoform
