#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "thermoform/errors.hpp"
#include "thermoform/interval_map.hpp"
#include "thermoform/potential.hpp"
#include "thermoform/pressure.hpp"
#include "thermoform/transfer.hpp"

namespace thermoform {

inline constexpr double kCoincideRadius = 1e-10;
inline constexpr double kDisjointGap = 1e-8;
inline constexpr std::int64_t kDefaultWordBudget = std::int64_t{1} << 20;

struct ImfsBranch {
    int time = 1;    // m_l
    Interval window; // W_l, a pull-back of the base with f^{m_l}(W_l) = B_0
};

/// Iterated multivalued function system: inverse branches of f^{m_l}
/// mapping the base interval onto windows inside it. Branch application is
/// multivalued; word images are finite point sets.
class Imfs {
public:
    Imfs(IntervalMap map, Interval base, std::vector<ImfsBranch> branches)
        : map_(std::move(map)), base_(base), branches_(std::move(branches)) {
        if (branches_.empty()) throw ConstructionError("IMFS needs at least one branch");
        for (const auto& b : branches_) {
            if (b.time < 1) throw ConstructionError("branch time must be >= 1");
            if (!base_.contains(b.window, tol::boundary))
                throw ConstructionError("branch window not contained in the base interval");
            Interval img = map_.interval_image_n(b.window, b.time);
            if (std::abs(img.lo - base_.lo) > tol::boundary ||
                std::abs(img.hi - base_.hi) > tol::boundary)
                throw ConstructionError("branch window does not map onto the base interval");
        }
    }

    const IntervalMap& map() const { return map_; }
    const Interval& base() const { return base_; }
    const std::vector<ImfsBranch>& branches() const { return branches_; }
    int branch_count() const { return static_cast<int>(branches_.size()); }

    /// φ_l(y) = f^{-m_l}(y) ∩ W_l as a point set.
    std::vector<double> apply_branch(int l, double y) const {
        const auto& b = branches_.at(l);
        std::vector<double> out;
        for (double z : map_.preimages(y, b.time).points)
            if (b.window.contains(z, tol::boundary)) out.push_back(z);
        if (out.empty())
            throw InvariantError("branch application produced an empty set");
        return out;
    }

    /// φ_l(A) for an interval set A, as clipped pull-back components.
    std::vector<Interval> apply_branch(int l, const std::vector<Interval>& set) const {
        const auto& b = branches_.at(l);
        std::vector<Interval> out;
        for (const auto& A : set)
            for (const auto& comp : map_.pull_backs(A, b.time)) {
                Interval clipped = intersect(comp, b.window);
                if (!clipped.empty()) out.push_back(clipped);
            }
        if (out.empty()) throw InvariantError("branch application produced an empty set");
        return out;
    }

    int word_time(const std::vector<int>& letters) const {
        int t = 0;
        for (int l : letters) t += branches_.at(l).time;
        return t;
    }

    /// φ_w(x0) with the rightmost letter applied first.
    std::vector<double> word_image(const std::vector<int>& letters, double x0) const {
        if (letters.empty()) throw PreconditionError("words are nonempty");
        if (!base_.contains(x0, tol::boundary))
            throw OutOfDomainError("base point outside the base interval");
        std::vector<double> set{x0};
        for (auto it = letters.rbegin(); it != letters.rend(); ++it) {
            std::vector<double> next;
            for (double y : set)
                for (double z : apply_branch(*it, y)) next.push_back(z);
            std::sort(next.begin(), next.end());
            next.erase(std::unique(next.begin(), next.end(),
                                   [](double a, double b) {
                                       return std::abs(b - a) < tol::dedup_radius;
                                   }),
                       next.end());
            set = std::move(next);
        }
        return set;
    }

    /// φ_w(B_0) as a set of intervals.
    std::vector<Interval> word_window(const std::vector<int>& letters) const {
        if (letters.empty()) throw PreconditionError("words are nonempty");
        std::vector<Interval> set{base_};
        for (auto it = letters.rbegin(); it != letters.rend(); ++it)
            set = apply_branch(*it, set);
        return set;
    }

private:
    IntervalMap map_;
    Interval base_;
    std::vector<ImfsBranch> branches_;
};

/// One inverse branch per monotone branch of f whose base preimage lies
/// inside the base interval and maps onto it; time 1 each.
inline Imfs build_full_shift_imfs(const IntervalMap& map, const Interval& B0) {
    if (!map.domain().contains(B0, tol::domain))
        throw OutOfDomainError("base interval outside the domain");
    std::vector<ImfsBranch> branches;
    for (const auto& b : map.branches()) {
        if (!b.range.contains(B0, 1e-12)) continue; // must map onto B0
        auto y1 = map.solve_on_branch(b, B0.lo);
        auto y2 = map.solve_on_branch(b, B0.hi);
        if (!y1 || !y2) continue;
        Interval W{std::min(*y1, *y2), std::max(*y1, *y2)};
        if (!B0.contains(W, tol::boundary)) continue;
        branches.push_back({1, W});
    }
    if (branches.empty())
        throw ConstructionError("no monotone branch pulls the base interval into itself");
    return Imfs(map, B0, std::move(branches));
}

/// Description file: a header line `B0 <lo> <hi>` followed by one line per
/// branch `<m> <lo> <hi>`. '#' starts a comment.
inline Imfs parse_imfs_text(const IntervalMap& map, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    bool have_base = false;
    Interval base;
    std::vector<ImfsBranch> branches;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        if (!have_base) {
            std::string tag;
            if (!(ls >> tag)) continue; // blank
            double lo, hi;
            if (tag != "B0" || !(ls >> lo >> hi))
                throw ParseError("imfs file line " + std::to_string(lineno) +
                                 ": expected header 'B0 <lo> <hi>'");
            base = {lo, hi};
            have_base = true;
        } else {
            int m;
            double lo, hi;
            if (!(ls >> m)) continue; // blank
            if (!(ls >> lo >> hi))
                throw ParseError("imfs file line " + std::to_string(lineno) +
                                 ": expected '<m> <lo> <hi>'");
            branches.push_back({m, {lo, hi}});
        }
    }
    if (!have_base) throw ParseError("imfs file has no B0 header line");
    return Imfs(map, base, std::move(branches));
}

enum class SetRelation { coincide, disjoint, mixed };

/// Compares two equal-time word images. Points nearer than 1e-10 are the
/// same, farther than 1e-8 are distinct; distances in the dead zone raise
/// an AmbiguityError instead of guessing.
inline SetRelation compare_word_images(const std::vector<double>& A,
                                       const std::vector<double>& B) {
    auto nearest = [](const std::vector<double>& S, double x) {
        auto it = std::lower_bound(S.begin(), S.end(), x);
        double d = std::numeric_limits<double>::infinity();
        if (it != S.end()) d = std::min(d, std::abs(*it - x));
        if (it != S.begin()) d = std::min(d, std::abs(*(it - 1) - x));
        return d;
    };
    int matched = 0, separated = 0;
    auto classify = [&](const std::vector<double>& from, const std::vector<double>& to) {
        for (double x : from) {
            double d = nearest(to, x);
            if (d < kCoincideRadius)
                ++matched;
            else if (d > kDisjointGap)
                ++separated;
            else
                throw AmbiguityError("word images fall between the coincide/disjoint thresholds");
        }
    };
    classify(A, B);
    classify(B, A);
    if (separated == 0) return SetRelation::coincide;
    if (matched == 0) return SetRelation::disjoint;
    return SetRelation::mixed;
}

namespace detail {

struct WordImageEntry {
    std::vector<int> letters;
    std::vector<double> image;
};

/// All words of time <= T with their images at x0, bucketed by time.
inline std::map<int, std::vector<WordImageEntry>> enumerate_word_images(
    const Imfs& imfs, double x0, int T, std::int64_t budget) {
    std::map<int, std::vector<WordImageEntry>> buckets;
    std::int64_t count = 0;
    // grow words by prepending letters: image(l·w) = φ_l(image(w))
    struct Node {
        std::vector<int> letters;
        std::vector<double> image;
        int time;
    };
    std::vector<Node> stack;
    for (int l = imfs.branch_count() - 1; l >= 0; --l) {
        int t = imfs.branches()[l].time;
        if (t > T) continue;
        stack.push_back({{l}, imfs.word_image({l}, x0), t});
    }
    while (!stack.empty()) {
        Node node = std::move(stack.back());
        stack.pop_back();
        if (++count > budget) throw BudgetError("word enumeration exceeds the budget");
        buckets[node.time].push_back({node.letters, node.image});
        for (int l = imfs.branch_count() - 1; l >= 0; --l) {
            int t = node.time + imfs.branches()[l].time;
            if (t > T) continue;
            std::vector<double> img;
            for (double y : node.image)
                for (double z : imfs.apply_branch(l, y)) img.push_back(z);
            std::sort(img.begin(), img.end());
            img.erase(std::unique(img.begin(), img.end(),
                                  [](double a, double b) {
                                      return std::abs(b - a) < tol::dedup_radius;
                                  }),
                      img.end());
            std::vector<int> w{l};
            w.insert(w.end(), node.letters.begin(), node.letters.end());
            stack.push_back({std::move(w), std::move(img), t});
        }
    }
    return buckets;
}

} // namespace detail

/// (*) property: equal-time word images either coincide or are disjoint.
inline bool star_property_check(const Imfs& imfs, double x0, int T,
                                std::int64_t budget = kDefaultWordBudget) {
    auto buckets = detail::enumerate_word_images(imfs, x0, T, budget);
    for (const auto& [t, entries] : buckets)
        for (std::size_t i = 0; i < entries.size(); ++i)
            for (std::size_t j = i + 1; j < entries.size(); ++j)
                if (compare_word_images(entries[i].image, entries[j].image) ==
                    SetRelation::mixed)
                    return false;
    return true;
}

/// Freeness at x0: all distinct equal-time word images pairwise disjoint.
inline bool freeness_check(const Imfs& imfs, double x0, int T,
                           std::int64_t budget = kDefaultWordBudget) {
    auto buckets = detail::enumerate_word_images(imfs, x0, T, budget);
    for (const auto& [t, entries] : buckets)
        for (std::size_t i = 0; i < entries.size(); ++i)
            for (std::size_t j = i + 1; j < entries.size(); ++j)
                if (compare_word_images(entries[i].image, entries[j].image) !=
                    SetRelation::disjoint)
                    return false;
    return true;
}

/// Count of distinct points reached by all words of time exactly t.
inline std::int64_t distinct_equal_time_images(const Imfs& imfs, double x0, int t,
                                               std::int64_t budget = kDefaultWordBudget) {
    auto buckets = detail::enumerate_word_images(imfs, x0, t, budget);
    auto it = buckets.find(t);
    if (it == buckets.end()) return 0;
    std::vector<double> all;
    for (const auto& e : it->second)
        all.insert(all.end(), e.image.begin(), e.image.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end(),
                          [](double a, double b) { return std::abs(b - a) < tol::dedup_radius; }),
              all.end());
    return static_cast<std::int64_t>(all.size());
}

struct BranchBoundResult {
    bool ok = false;
    int skipped_samples = 0;  // singular evaluations of a geometric ψ
    double worst_gap = 0.0;   // min over samples of S_{m_l}(ψ)(y) - (m_l·∫ψdν - D)
    int worst_branch = -1;
};

/// Checks S_{m_l}(ψ)(y) >= m_l·∫ψ dν - D on uniform samples (plus the
/// endpoints) of every branch window.
inline BranchBoundResult branch_bound_check(const Imfs& imfs, const Potential& psi,
                                            const MeasureEstimate& nu, double D,
                                            int samples = 64) {
    if (samples < 2) throw PreconditionError("need at least two samples per window");
    double integral = integrate(nu, [&](double x) { return psi(x); });
    BranchBoundResult res;
    res.ok = true;
    res.worst_gap = std::numeric_limits<double>::infinity();
    for (int l = 0; l < imfs.branch_count(); ++l) {
        const auto& b = imfs.branches()[l];
        for (int s = 0; s < samples; ++s) {
            double y = b.window.lo + b.window.width() * s / (samples - 1);
            double value;
            try {
                value = birkhoff_sum(imfs.map(), psi, y, b.time);
            } catch (const SingularityError&) {
                ++res.skipped_samples;
                continue;
            }
            double gap = value - (b.time * integral - D);
            if (gap < res.worst_gap) {
                res.worst_gap = gap;
                res.worst_branch = l;
            }
            if (gap < 0) res.ok = false;
        }
    }
    return res;
}

struct KeyLemmaPoint {
    double x0 = 0.0;
    double tail_max = 0.0;
    double integral = 0.0; // ∫φ dν
    double margin = 0.0;   // tail_max - integral
    bool strict = false;   // margin > 1e-3
    bool near_critical = false;
};

/// Growth-rate form of the generating-series comparison: the tree-pressure
/// tail at each base point against ∫φ dν.
inline std::vector<KeyLemmaPoint> key_lemma_check(const IntervalMap& map, const Potential& phi,
                                                  const MeasureEstimate& nu,
                                                  const std::vector<double>& base_points,
                                                  int n_max, int threads = 1,
                                                  std::int64_t budget = kDefaultLeafBudget) {
    double integral = integrate(nu, [&](double x) { return phi(x); });
    std::vector<KeyLemmaPoint> out;
    for (double x0 : base_points) {
        auto series = tree_pressure_series(map, phi, x0, n_max, threads, budget);
        KeyLemmaPoint pt;
        pt.x0 = x0;
        pt.tail_max = series.tail_max;
        pt.integral = integral;
        pt.margin = series.tail_max - integral;
        pt.strict = pt.margin > kVerdictMargin;
        pt.near_critical = series.near_critical_flag;
        out.push_back(pt);
    }
    return out;
}

} // namespace thermoform
