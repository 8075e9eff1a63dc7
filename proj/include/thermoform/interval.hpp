#pragma once

#include <algorithm>
#include <cmath>

namespace thermoform {

/// Closed interval [lo, hi]. An interval with hi < lo is empty.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool empty() const { return hi < lo; }

    bool contains(double x, double tol = 0.0) const {
        return x >= lo - tol && x <= hi + tol;
    }
    bool contains(const Interval& other, double tol = 0.0) const {
        return other.lo >= lo - tol && other.hi <= hi + tol;
    }

    double clamp(double x) const { return std::min(hi, std::max(lo, x)); }

    /// Distance from x to the nearer endpoint.
    double boundary_distance(double x) const {
        return std::min(std::abs(x - lo), std::abs(x - hi));
    }
};

inline Interval intersect(const Interval& a, const Interval& b) {
    return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

inline Interval hull(const Interval& a, const Interval& b) {
    return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

} // namespace thermoform
