#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "thermoform/imfs.hpp"
#include "thermoform/periodic.hpp"
#include "thermoform/pressure.hpp"
#include "thermoform/transfer.hpp"

namespace thermoform {

using ordered_json = nlohmann::ordered_json;

inline ordered_json to_json(const Interval& iv) { return ordered_json::array({iv.lo, iv.hi}); }

inline ordered_json to_json(const TreePressureSeries& s) {
    ordered_json j;
    j["base"] = s.base_point;
    j["n"] = ordered_json::array();
    j["p_n"] = ordered_json::array();
    j["leaf_count"] = ordered_json::array();
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        j["n"].push_back(i + 1);
        j["p_n"].push_back(s.values[i]);
        j["leaf_count"].push_back(s.leaf_counts[i]);
    }
    j["tail_max"] = s.tail_max;
    j["near_critical"] = s.near_critical_flag;
    return j;
}

inline ordered_json to_json(const HyperbolicityReport& r) {
    ordered_json j;
    j["series"] = to_json(r.series);
    j["sup_avg_lower"] = r.sup_avg_lower;
    j["sup_avg_upper"] = r.sup_avg_upper;
    j["pressure_lower"] = r.pressure_lower;
    j["pressure_ulam"] = r.pressure_ulam;
    j["min_n"] = r.min_n;
    j["gap"] = r.gap;
    j["margin"] = r.margin;
    j["verdict"] = to_string(r.verdict);
    return j;
}

inline ordered_json to_json(const EquilibriumReport& r) {
    ordered_json j;
    j["pressure_used"] = r.pressure_used;
    j["pressure_ulam"] = r.pressure_ulam;
    j["int_phi"] = r.int_phi;
    j["entropy"] = r.entropy;
    j["lyapunov"] = r.lyapunov;
    j["excluded_weight"] = r.excluded_weight;
    j["entropy_positive"] = r.entropy_positive;
    j["lyapunov_positive"] = r.lyapunov_positive;
    j["ruelle_ok"] = r.ruelle_ok;
    return j;
}

inline ordered_json to_json(const MeasureEstimate& mu) {
    ordered_json j;
    j["domain"] = to_json(mu.domain);
    j["cells"] = mu.cells();
    j["weights"] = mu.weights;
    return j;
}

inline ordered_json to_json(const PeriodicOrbit& o, bool endpoint) {
    ordered_json j;
    j["point"] = o.point;
    j["period"] = o.period;
    j["multiplier"] = o.multiplier;
    j["orbit"] = o.orbit;
    j["endpoint"] = endpoint;
    return j;
}

inline ordered_json to_json(const PeriodicGapReport& r, bool endpoint) {
    ordered_json j;
    j["orbit"] = to_json(r.orbit, endpoint);
    j["tail_max"] = r.series.tail_max;
    j["rhs"] = r.rhs;
    j["margin"] = r.margin;
    j["strict"] = r.strict;
    j["series"] = to_json(r.series);
    return j;
}

inline ordered_json to_json(const HorseshoeCertificate& c) {
    ordered_json j;
    j["x0"] = c.x0;
    j["K"] = c.K;
    j["U0"] = to_json(c.U0);
    j["U1"] = to_json(c.U1);
    j["V"] = to_json(c.V);
    return j;
}

inline ordered_json to_json(const InducedGapReport& r) {
    ordered_json j;
    j["phi_hat_x0"] = r.phi_hat_x0;
    j["q_m"] = r.q;
    j["itinerary_counts"] = r.itinerary_counts;
    j["tail_max"] = r.tail_max;
    j["margin"] = r.margin;
    j["strict"] = r.strict;
    j["slack"] = r.slack;
    j["quality_warning"] = r.quality_warning;
    return j;
}

inline ordered_json to_json(const BranchBoundResult& r, double D) {
    ordered_json j;
    j["D"] = D;
    j["ok"] = r.ok;
    j["skipped_samples"] = r.skipped_samples;
    j["worst_gap"] = r.worst_gap;
    j["worst_branch"] = r.worst_branch;
    return j;
}

inline ordered_json to_json(const KeyLemmaPoint& p) {
    ordered_json j;
    j["x0"] = p.x0;
    j["tail_max"] = p.tail_max;
    j["integral"] = p.integral;
    j["margin"] = p.margin;
    j["strict"] = p.strict;
    j["near_critical"] = p.near_critical;
    return j;
}

inline ordered_json to_json(const Imfs& sys) {
    ordered_json j;
    j["base"] = to_json(sys.base());
    j["branches"] = ordered_json::array();
    for (const auto& b : sys.branches()) {
        ordered_json bj;
        bj["m"] = b.time;
        bj["window"] = to_json(b.window);
        j["branches"].push_back(bj);
    }
    return j;
}

/// CSV rows n,p_n,leaf_count.
inline std::string to_csv(const TreePressureSeries& s) {
    std::string out = "n,p_n,leaf_count\n";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        out += std::to_string(i + 1);
        out += ',';
        out += format_double(s.values[i]);
        out += ',';
        out += std::to_string(s.leaf_counts[i]);
        out += '\n';
    }
    return out;
}

/// CSV rows cell_lo,cell_hi,weight.
inline std::string to_csv(const MeasureEstimate& mu) {
    std::string out = "cell_lo,cell_hi,weight\n";
    for (int i = 0; i < mu.cells(); ++i) {
        Interval c = mu.cell(i);
        out += format_double(c.lo);
        out += ',';
        out += format_double(c.hi);
        out += ',';
        out += format_double(mu.weights[i]);
        out += '\n';
    }
    return out;
}

/// Sparse matrix dump, rows i,j,value.
inline std::string to_csv(const UlamOperator& op) {
    std::string out = "i,j,value\n";
    for (int i = 0; i < op.m; ++i)
        for (std::size_t k = op.row_ptr[i]; k < op.row_ptr[i + 1]; ++k) {
            out += std::to_string(i);
            out += ',';
            out += std::to_string(op.col[k]);
            out += ',';
            out += format_double(op.val[k]);
            out += '\n';
        }
    return out;
}

} // namespace thermoform
