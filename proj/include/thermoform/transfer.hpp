#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "thermoform/errors.hpp"
#include "thermoform/interval_map.hpp"
#include "thermoform/numerics.hpp"
#include "thermoform/potential.hpp"

namespace thermoform {

/// Sparse row-major Ulam discretization of the weighted transfer operator.
/// Entry (i, j) accumulates, for every inverse branch g with g(C_i)
/// meeting C_j, the weight exp(φ(mid of g(C_i)∩C_j))·|g(C_i)∩C_j|/|g(C_i)|.
struct UlamOperator {
    Interval domain;
    int m = 0;
    std::vector<std::size_t> row_ptr; // size m+1
    std::vector<int> col;
    std::vector<double> val;

    Interval cell(int i) const {
        double h = domain.width() / m;
        return {domain.lo + i * h, domain.lo + (i + 1) * h};
    }
    double cell_mid(int i) const { return cell(i).mid(); }

    std::vector<double> row_sums() const {
        std::vector<double> s(m, 0.0);
        for (int i = 0; i < m; ++i)
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s[i] += val[k];
        return s;
    }

    /// Multiply from the right: (Mv)[i] = Σ_j M[i][j]·v[j].
    std::vector<double> apply(const std::vector<double>& v) const {
        std::vector<double> w(m, 0.0);
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
                acc += val[k] * v[col[k]];
            w[i] = acc;
        }
        return w;
    }

    /// Multiply from the left: (uM)[j] = Σ_i u[i]·M[i][j].
    std::vector<double> apply_transpose(const std::vector<double>& u) const {
        std::vector<double> w(m, 0.0);
        for (int i = 0; i < m; ++i)
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
                w[col[k]] += u[i] * val[k];
        return w;
    }

    /// Both reachability directions from cell 0 over the sparsity pattern.
    bool strongly_connected() const {
        std::vector<std::vector<int>> rev(m);
        for (int i = 0; i < m; ++i)
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
                rev[col[k]].push_back(i);
        auto reach = [&](bool forward) {
            std::vector<bool> seen(m, false);
            std::deque<int> q{0};
            seen[0] = true;
            int count = 1;
            while (!q.empty()) {
                int i = q.front();
                q.pop_front();
                auto visit = [&](int j) {
                    if (!seen[j]) {
                        seen[j] = true;
                        ++count;
                        q.push_back(j);
                    }
                };
                if (forward)
                    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) visit(col[k]);
                else
                    for (int j : rev[i]) visit(j);
            }
            return count == m;
        };
        return reach(true) && reach(false);
    }
};

/// Assembles the Ulam matrix. Midpoints that fall on a critical point of a
/// geometric potential get one subdivision; a second hit is an error.
inline UlamOperator ulam_operator(const IntervalMap& map, const Potential& phi, int m) {
    if (m < 2) throw PreconditionError("need at least 2 cells");
    UlamOperator op;
    op.domain = map.domain();
    op.m = m;
    op.row_ptr.assign(m + 1, 0);
    const double h = op.domain.width() / m;

    auto weight_at = [&](const Interval& piece) -> double {
        // exp(φ(mid)) with one retry after subdividing around a singularity
        try {
            return std::exp(phi(piece.mid())) * piece.width();
        } catch (const SingularityError&) {
            Interval a{piece.lo, piece.mid()}, b{piece.mid(), piece.hi};
            return std::exp(phi(a.mid())) * a.width() + std::exp(phi(b.mid())) * b.width();
        }
    };

    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < m; ++i) {
        row.clear();
        Interval Ci = op.cell(i);
        for (const auto& b : map.branches()) {
            Interval seg = intersect(Ci, b.range);
            if (!(seg.width() > 0)) continue;
            auto y1 = map.solve_on_branch(b, seg.lo);
            auto y2 = map.solve_on_branch(b, seg.hi);
            if (!y1 || !y2) continue;
            Interval g{std::min(*y1, *y2), std::max(*y1, *y2)};
            if (!(g.width() > 0)) continue;
            int j_lo = std::max(0, static_cast<int>((g.lo - op.domain.lo) / h));
            int j_hi = std::min(m - 1, static_cast<int>((g.hi - op.domain.lo) / h));
            for (int j = j_lo; j <= j_hi; ++j) {
                Interval ov = intersect(op.cell(j), g);
                if (!(ov.width() > 0)) continue;
                row.emplace_back(j, weight_at(ov) / g.width());
            }
        }
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k > 0 && op.col.back() == row[k].first)
                op.val.back() += row[k].second;
            else {
                op.col.push_back(row[k].first);
                op.val.push_back(row[k].second);
            }
        }
        op.row_ptr[i + 1] = op.col.size();
    }
    return op;
}

struct EigenData {
    double lambda = 0.0;
    std::vector<double> right; // Σ right = 1
    std::vector<double> left;  // Σ left·right = 1
    int iterations = 0;
};

/// Deterministic power iteration (uniform start, fixed reduction order) for
/// the leading eigenvalue with right and left eigenvectors.
inline EigenData leading_eigendata(const UlamOperator& op, double tolerance = 1e-13,
                                   int max_iter = 20000) {
    if (!op.strongly_connected())
        throw InvariantError("Ulam operator is not irreducible on its cells");
    const int m = op.m;
    EigenData out;
    std::vector<double> v(m, 1.0 / m);
    double lam = 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
        std::vector<double> w = op.apply(v);
        KahanAccumulator total;
        for (double x : w) total.add(x);
        double lam_new = total.value();
        if (!(lam_new > 0.0))
            throw ConvergenceError("power iteration lost positivity");
        for (double& x : w) x /= lam_new;
        bool done = it > 0 && std::abs(lam_new - lam) <= tolerance * std::max(1.0, std::abs(lam_new));
        v = std::move(w);
        lam = lam_new;
        if (done) break;
    }
    if (it >= max_iter) throw ConvergenceError("power iteration did not converge");
    out.lambda = lam;
    out.right = std::move(v);
    out.iterations = it + 1;

    std::vector<double> u(m, 1.0);
    double lam_l = 0.0;
    for (it = 0; it < max_iter; ++it) {
        std::vector<double> w = op.apply_transpose(u);
        KahanAccumulator total;
        for (double x : w) total.add(x);
        double lam_new = total.value();
        if (!(lam_new > 0.0))
            throw ConvergenceError("adjoint iteration lost positivity");
        for (double& x : w) x /= lam_new;
        bool done = it > 0 && std::abs(lam_new - lam_l) <= tolerance * std::max(1.0, std::abs(lam_new));
        u = std::move(w);
        lam_l = lam_new;
        if (done) break;
    }
    if (it >= max_iter) throw ConvergenceError("adjoint iteration did not converge");
    KahanAccumulator dot;
    for (int i = 0; i < m; ++i) dot.add(u[i] * out.right[i]);
    double s = dot.value();
    if (!(std::abs(s) > 0)) throw ConvergenceError("degenerate left/right normalization");
    for (double& x : u) x /= s;
    out.left = std::move(u);
    return out;
}

/// Probability weights over a uniform partition.
struct MeasureEstimate {
    Interval domain;
    std::vector<double> weights;

    int cells() const { return static_cast<int>(weights.size()); }
    Interval cell(int i) const {
        double h = domain.width() / cells();
        return {domain.lo + i * h, domain.lo + (i + 1) * h};
    }
    double cell_mid(int i) const { return cell(i).mid(); }

    /// Mass of [domain.lo, x] counting boundary cells fractionally.
    double mass_below(double x) const {
        double h = domain.width() / cells();
        KahanAccumulator acc;
        for (int i = 0; i < cells(); ++i) {
            Interval c = cell(i);
            if (c.hi <= x)
                acc.add(weights[i]);
            else if (c.lo < x)
                acc.add(weights[i] * (x - c.lo) / h);
        }
        return acc.value();
    }
};

/// Gibbs weights u_i·v_i, normalized.
inline MeasureEstimate equilibrium_estimate(const UlamOperator& op, const EigenData& eig) {
    MeasureEstimate mu;
    mu.domain = op.domain;
    mu.weights.resize(op.m);
    KahanAccumulator total;
    for (int i = 0; i < op.m; ++i) {
        mu.weights[i] = std::max(0.0, eig.left[i] * eig.right[i]);
        total.add(mu.weights[i]);
    }
    double s = total.value();
    if (!(s > 0)) throw ConvergenceError("equilibrium weights degenerate");
    for (double& w : mu.weights) w /= s;
    return mu;
}

struct IntegralDetail {
    double value = 0.0;
    double excluded_weight = 0.0;
    int excluded_cells = 0;
};

/// Midpoint integration; cells where g throws SingularityError are dropped
/// and their weight redistributed proportionally. More than 1% dropped
/// weight is an error.
template <typename G>
IntegralDetail integrate_detail(const MeasureEstimate& mu, G&& g) {
    IntegralDetail res;
    KahanAccumulator acc, kept;
    for (int i = 0; i < mu.cells(); ++i) {
        if (mu.weights[i] == 0.0) continue;
        try {
            double gi = g(mu.cell_mid(i));
            acc.add(mu.weights[i] * gi);
            kept.add(mu.weights[i]);
        } catch (const SingularityError&) {
            res.excluded_weight += mu.weights[i];
            res.excluded_cells += 1;
        }
    }
    KahanAccumulator total_acc;
    for (double w : mu.weights) total_acc.add(w);
    double total = total_acc.value();
    if (res.excluded_weight > 0.01 * total)
        throw SingularityError("integration excluded more than 1% of the measure");
    double denom = kept.value();
    if (!(denom > 0)) throw SingularityError("integration excluded all mass");
    res.value = acc.value() / denom;
    return res;
}

template <typename G>
double integrate(const MeasureEstimate& mu, G&& g) {
    return integrate_detail(mu, std::forward<G>(g)).value;
}

/// log|f'| with the 1e-9 exclusion zone around critical points.
inline auto log_derivative_observable(const IntervalMap& map) {
    return [&map](double x) {
        if (map.nearest_critical_distance(x) <= kSingularityRadius)
            throw SingularityError("log|f'| at a critical point");
        return std::log(std::abs(map.derivative(x)));
    };
}

struct EquilibriumReport {
    double pressure_used = 0.0;
    double pressure_ulam = 0.0;
    double entropy = 0.0;  // pressure_used - ∫φ dμ
    double lyapunov = 0.0; // ∫ log|f'| dμ
    double int_phi = 0.0;
    double excluded_weight = 0.0; // mass dropped by the log|f'| exclusion zone
    bool entropy_positive = false;
    bool lyapunov_positive = false;
    bool ruelle_ok = false; // entropy <= max(lyapunov, 0) + 0.02
};

inline constexpr double kRuelleTolerance = 0.02;

inline bool ruelle_inequality_ok(double entropy, double lyapunov) {
    return entropy <= std::max(lyapunov, 0.0) + kRuelleTolerance;
}

inline EquilibriumReport equilibrium_report(const IntervalMap& map, const Potential& phi,
                                            int m, double pressure_used) {
    UlamOperator op = ulam_operator(map, phi, m);
    EigenData eig = leading_eigendata(op);
    MeasureEstimate mu = equilibrium_estimate(op, eig);

    EquilibriumReport rep;
    rep.pressure_used = pressure_used;
    rep.pressure_ulam = std::log(eig.lambda);
    rep.int_phi = integrate(mu, [&](double x) { return phi(x); });
    auto lyap = integrate_detail(mu, log_derivative_observable(map));
    rep.lyapunov = lyap.value;
    rep.excluded_weight = lyap.excluded_weight;
    rep.entropy = pressure_used - rep.int_phi;
    rep.entropy_positive = rep.entropy > 0.0;
    rep.lyapunov_positive = rep.lyapunov > 0.0;
    rep.ruelle_ok = ruelle_inequality_ok(rep.entropy, rep.lyapunov);
    return rep;
}

/// log of the leading Ulam eigenvalue: the spectral pressure estimate.
inline double ulam_log_pressure(const IntervalMap& map, const Potential& phi, int cells) {
    return std::log(leading_eigendata(ulam_operator(map, phi, cells)).lambda);
}

} // namespace thermoform
