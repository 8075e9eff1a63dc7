#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <vector>

#include "thermoform/interval.hpp"

namespace thermoform {

/// Dense univariate polynomial, coefficients in ascending degree order.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }
    Polynomial(std::initializer_list<double> coeffs) : c_(coeffs) { trim(); }

    const std::vector<double>& coeffs() const { return c_; }
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool zero() const { return c_.empty(); }

    double operator()(double x) const {
        double r = 0.0;
        for (std::size_t i = c_.size(); i-- > 0;) r = r * x + c_[i];
        return r;
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return Polynomial{};
        std::vector<double> d(c_.size() - 1);
        for (std::size_t i = 1; i < c_.size(); ++i)
            d[i - 1] = c_[i] * static_cast<double>(i);
        return Polynomial(std::move(d));
    }

    /// Σ|c_i|·max(1,|lo|,|hi|)^i, a magnitude scale for tolerances.
    double magnitude_on(const Interval& iv) const {
        double m = std::max({1.0, std::abs(iv.lo), std::abs(iv.hi)});
        double s = 0.0, p = 1.0;
        for (double ci : c_) {
            s += std::abs(ci) * p;
            p *= m;
        }
        return std::max(s, 1.0);
    }

    /// All real roots in [iv.lo, iv.hi], ascending, deduplicated.
    /// Isolation by recursive monotone subdivision at the roots of the
    /// derivative, then bisection to machine width with a guarded Newton
    /// polish. Multiple roots are detected at the subdivision nodes.
    std::vector<double> roots_in(const Interval& iv) const {
        std::vector<double> roots;
        if (c_.size() <= 1) return roots; // constant (incl. zero poly)
        if (degree() == 1) {
            double r = -c_[0] / c_[1];
            if (iv.contains(r, 1e-14 * magnitude_on(iv))) roots.push_back(iv.clamp(r));
            return roots;
        }
        Polynomial d = derivative();
        std::vector<double> nodes = d.roots_in(iv);
        nodes.push_back(iv.lo);
        nodes.push_back(iv.hi);
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end(),
                                [](double a, double b) { return std::abs(a - b) < 1e-14; }),
                    nodes.end());

        const double ztol = 1e-11 * magnitude_on(iv);
        for (double n : nodes)
            if (std::abs((*this)(n)) <= ztol) roots.push_back(n);
        for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
            double u = nodes[k], v = nodes[k + 1];
            double fu = (*this)(u), fv = (*this)(v);
            if (std::abs(fu) <= ztol || std::abs(fv) <= ztol) continue; // endpoint root already taken
            if ((fu < 0) == (fv < 0)) continue;
            roots.push_back(bisect_root(u, v, fu));
        }
        std::sort(roots.begin(), roots.end());
        roots.erase(std::unique(roots.begin(), roots.end(),
                                [](double a, double b) { return std::abs(a - b) < 1e-10; }),
                    roots.end());
        return roots;
    }

    /// Exact sup of |p| over the interval (endpoints plus interior critical points).
    double sup_abs_on(const Interval& iv) const {
        double m = std::max(std::abs((*this)(iv.lo)), std::abs((*this)(iv.hi)));
        for (double r : derivative().roots_in(iv))
            m = std::max(m, std::abs((*this)(r)));
        return m;
    }

private:
    void trim() {
        while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
    }

    double bisect_root(double u, double v, double fu) const {
        bool neg_left = fu < 0;
        for (int it = 0; it < 200; ++it) {
            double m = 0.5 * (u + v);
            if (m <= u || m >= v) break; // interval at machine resolution
            double fm = (*this)(m);
            if (fm == 0.0) return m;
            if ((fm < 0) == neg_left)
                u = m;
            else
                v = m;
        }
        double x = 0.5 * (u + v);
        // Guarded Newton polish: keep a step only if the residual shrinks.
        Polynomial d = derivative();
        for (int it = 0; it < 2; ++it) {
            double fx = (*this)(x);
            double dx = d(x);
            if (dx == 0.0) break;
            double x2 = x - fx / dx;
            if (x2 < u || x2 > v) break;
            if (std::abs((*this)(x2)) < std::abs(fx))
                x = x2;
            else
                break;
        }
        return x;
    }

    std::vector<double> c_;
};

} // namespace thermoform
