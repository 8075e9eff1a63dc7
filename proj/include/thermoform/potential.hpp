#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "thermoform/errors.hpp"
#include "thermoform/interval_map.hpp"

namespace thermoform {

inline constexpr double kSingularityRadius = 1e-9;

enum class PotentialKind { constant, poly, cosine, geometric };

/// Evaluable potential on the map's domain. Constant, polynomial and
/// cosine kinds are Lipschitz with an exactly computed constant; the
/// geometric kind base - t·log|f'| is singular at critical points and is
/// flagged non-Hölder.
class Potential {
public:
    static Potential constant(double c) {
        Potential p;
        p.kind_ = PotentialKind::constant;
        p.value_ = c;
        p.holder_c_ = 0.0;
        return p;
    }

    static Potential polynomial(Polynomial poly, Interval domain) {
        Potential p;
        p.kind_ = PotentialKind::poly;
        p.poly_ = std::move(poly);
        p.domain_ = domain;
        p.holder_c_ = p.poly_.derivative().sup_abs_on(domain);
        return p;
    }

    /// amp · cos(2π x̂), where x̂ rescales the domain to [0,1].
    static Potential cosine(double amp, Interval domain) {
        Potential p;
        p.kind_ = PotentialKind::cosine;
        p.value_ = amp;
        p.domain_ = domain;
        p.holder_c_ = 2.0 * M_PI * std::abs(amp) / domain.width();
        return p;
    }

    /// base(x) - t·log|f'(x)|; undefined within 1e-9 of a critical point.
    static Potential geometric(Potential base, double t, const IntervalMap& map) {
        if (base.kind_ == PotentialKind::geometric)
            throw ConstructionError("geometric potential cannot nest another geometric one");
        if (t < 0.0) throw ConstructionError("geometric parameter t must be >= 0");
        Potential p;
        p.kind_ = PotentialKind::geometric;
        p.base_ = std::make_shared<Potential>(std::move(base));
        p.t_ = t;
        p.map_ = std::make_shared<IntervalMap>(map);
        p.domain_ = map.domain();
        return p;
    }

    PotentialKind kind() const { return kind_; }
    bool is_holder() const { return kind_ != PotentialKind::geometric; }
    double geometric_t() const { return t_; }

    double operator()(double x) const {
        switch (kind_) {
        case PotentialKind::constant:
            return value_ + shift_;
        case PotentialKind::poly:
            return poly_(x) + shift_;
        case PotentialKind::cosine:
            return value_ * std::cos(2.0 * M_PI * (x - domain_.lo) / domain_.width()) + shift_;
        case PotentialKind::geometric: {
            if (map_->nearest_critical_distance(x) <= kSingularityRadius)
                throw SingularityError("geometric potential evaluated within 1e-9 of a critical point");
            return (*base_)(x)-t_ * std::log(std::abs(map_->derivative(x))) + shift_;
        }
        }
        return 0.0;
    }

    /// Declared (α, C); exact derivative bound with α = 1 for the smooth kinds.
    std::pair<double, double> holder_modulus() const {
        if (!is_holder())
            throw NotHolderError("geometric potentials are not Hölder continuous");
        return {1.0, holder_c_};
    }

    /// The same potential with a constant added.
    Potential shifted(double c) const {
        Potential p = *this;
        p.shift_ += c;
        return p;
    }

    double shift() const { return shift_; }

private:
    Potential() = default;

    PotentialKind kind_ = PotentialKind::constant;
    double value_ = 0.0;   // constant value or cosine amplitude
    Polynomial poly_;
    Interval domain_{0.0, 1.0};
    std::shared_ptr<const Potential> base_;
    std::shared_ptr<const IntervalMap> map_;
    double t_ = 0.0;
    double shift_ = 0.0;
    double holder_c_ = 0.0;
};

/// S_n(φ)(x) = φ(x) + φ(f x) + ... + φ(f^{n-1} x); S_0 = 0.
inline double birkhoff_sum(const IntervalMap& map, const Potential& phi, double x, int n) {
    map.check_domain(x);
    double s = 0.0, v = map.domain().clamp(x);
    for (int i = 0; i < n; ++i) {
        s += phi(v);
        v = map.eval(v);
    }
    return s;
}

} // namespace thermoform
