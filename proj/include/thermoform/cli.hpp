#pragma once

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thermoform/report_io.hpp"
#include "thermoform/speclang.hpp"

namespace thermoform {

/// Exit codes: 0 success, 1 internal error, 2 parse/config error,
/// 3 a strictness/consistency verdict failed, 4 budget exceeded.
enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitParse = 2,
    kExitVerdict = 3,
    kExitBudget = 4,
};

struct ExperimentConfig {
    std::string subcommand;
    std::string map_spec;
    std::string potential_spec = "const:0";
    std::vector<double> bases; // empty: pick the default base point
    int depth = 12;
    int n_sup = 8;
    long grid = 100000;
    int cells = 1024;
    int period = 1;
    bool horseshoe = false;
    double rho = 0.2;
    int k_max = 8;
    int m_max = 8;
    int time_T = 8;
    std::string imfs_file;
    bool key_lemma = false;
    std::optional<double> bound_d;
    int samples = 64;
    double exact_lo = 0.0, exact_hi = 0.0;
    int exact_n_max = 30;
    std::string out_path = "-";
    std::string format = "json";
    bool no_meta = false;
    bool dump_config = false;
    int threads = 1;
    std::string dump_matrix;
    std::string pressure_from = "ulam";

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0)) throw ParseError(std::string(name) + " must be positive");
        };
        positive(depth, "--depth");
        positive(n_sup, "--nsup");
        positive(static_cast<double>(grid), "--grid");
        positive(cells, "--cells");
        positive(period, "--period");
        positive(rho, "--rho");
        positive(k_max, "--kmax");
        positive(m_max, "--mmax");
        positive(time_T, "--time");
        positive(samples, "--samples");
        positive(exact_n_max, "--nmax");
        positive(threads, "--threads");
        if (format != "json" && format != "csv")
            throw ParseError("--format must be json or csv");
        if (pressure_from != "ulam" && pressure_from != "tree")
            throw ParseError("--pressure-from must be ulam or tree");
    }
};

struct ExperimentResult {
    std::string payload; // serialized report
    int exit_code = kExitOk;
};

namespace detail {

inline std::string iso_utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline ordered_json config_json(const ExperimentConfig& c) {
    ordered_json j;
    j["subcommand"] = c.subcommand;
    j["map"] = c.map_spec;
    j["potential"] = c.potential_spec;
    j["bases"] = c.bases;
    j["depth"] = c.depth;
    j["nsup"] = c.n_sup;
    j["grid"] = c.grid;
    j["cells"] = c.cells;
    j["period"] = c.period;
    j["horseshoe"] = c.horseshoe;
    j["rho"] = c.rho;
    j["kmax"] = c.k_max;
    j["mmax"] = c.m_max;
    j["time"] = c.time_T;
    j["imfs_file"] = c.imfs_file;
    j["key_lemma"] = c.key_lemma;
    if (c.bound_d) j["bound_d"] = *c.bound_d;
    j["samples"] = c.samples;
    j["format"] = c.format;
    j["threads"] = c.threads;
    j["pressure_from"] = c.pressure_from;
    return j;
}

struct Theorem1Report {
    HyperbolicityReport hyperbolicity;
    EquilibriumReport equilibrium;
    bool consistency = false;
};

inline ordered_json to_json(const Theorem1Report& r) {
    ordered_json j;
    j["hyperbolicity"] = thermoform::to_json(r.hyperbolicity);
    j["equilibrium"] = thermoform::to_json(r.equilibrium);
    j["consistency"] = r.consistency;
    return j;
}

} // namespace detail

/// Runs one experiment and serializes its report. Pure given the config:
/// identical configs produce byte-identical payloads (timestamps only enter
/// through the meta block, which --no-meta removes).
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const bool csv = cfg.format == "csv";
    IntervalMap map = parse_map_spec(cfg.map_spec);
    Potential phi = parse_potential_spec(cfg.potential_spec, map);
    double base0 = cfg.bases.empty() ? default_base_point(map) : cfg.bases.front();

    ordered_json result;
    std::string csv_payload;
    bool verdict_failed = false;

    if (cfg.subcommand == "pressure") {
        std::vector<double> bases = cfg.bases.empty() ? std::vector<double>{base0} : cfg.bases;
        result["map"] = cfg.map_spec;
        result["potential"] = cfg.potential_spec;
        result["depth"] = cfg.depth;
        result["series"] = ordered_json::array();
        for (double x0 : bases) {
            auto series = tree_pressure_series(map, phi, x0, cfg.depth, cfg.threads);
            result["series"].push_back(to_json(series));
            if (csv) {
                if (bases.size() != 1)
                    throw ParseError("csv output requires exactly one --base");
                csv_payload = to_csv(series);
            }
        }
    } else if (cfg.subcommand == "hyperbolicity") {
        if (csv) throw ParseError("hyperbolicity has no csv schema");
        HyperbolicityParams params;
        params.n_max = cfg.depth;
        params.n_sup = cfg.n_sup;
        params.grid = cfg.grid;
        params.ulam_cells = cfg.cells;
        params.base_point = base0;
        params.threads = cfg.threads;
        auto rep = hyperbolicity_report(map, phi, params);
        result["map"] = cfg.map_spec;
        result["potential"] = cfg.potential_spec;
        result["report"] = to_json(rep);
        verdict_failed = rep.verdict != Verdict::hyperbolic;
    } else if (cfg.subcommand == "equilibrium") {
        auto op = ulam_operator(map, phi, cfg.cells);
        auto eig = leading_eigendata(op);
        auto mu = equilibrium_estimate(op, eig);
        double pressure_used = cfg.pressure_from == "tree"
                                   ? tree_pressure_series(map, phi, base0, cfg.depth, cfg.threads).tail_max
                                   : std::log(eig.lambda);
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
        result["map"] = cfg.map_spec;
        result["potential"] = cfg.potential_spec;
        result["cells"] = cfg.cells;
        result["pressure_from"] = cfg.pressure_from;
        result["report"] = to_json(rep);
        result["measure"] = to_json(mu);
        verdict_failed = !rep.ruelle_ok;
        if (!cfg.dump_matrix.empty()) {
            std::ofstream mats(cfg.dump_matrix);
            if (!mats) throw ParseError("cannot open --dump-matrix path " + cfg.dump_matrix);
            mats << to_csv(op);
        }
        if (csv) csv_payload = to_csv(mu);
    } else if (cfg.subcommand == "periodic-gap") {
        if (csv) throw ParseError("periodic-gap has no csv schema");
        auto orbits = repelling_orbits(map, cfg.period);
        result["map"] = cfg.map_spec;
        result["potential"] = cfg.potential_spec;
        result["orbits"] = ordered_json::array();
        result["checks"] = ordered_json::array();
        const PeriodicOrbit* first_interior = nullptr;
        for (const auto& e : orbits) {
            result["orbits"].push_back(to_json(e.orbit, e.endpoint));
            if (e.endpoint) continue;
            if (!first_interior) first_interior = &e.orbit;
            auto rep = periodic_gap_check(map, phi, e.orbit, cfg.depth, cfg.threads);
            result["checks"].push_back(to_json(rep, e.endpoint));
            if (!rep.strict) verdict_failed = true;
        }
        if (cfg.horseshoe) {
            if (!first_interior)
                throw NotFoundError("no interior repelling orbit for the horseshoe search");
            auto cert = horseshoe_certificate(map, *first_interior, cfg.rho, cfg.k_max);
            auto induced = induced_gap_series(map, phi, cert, cfg.m_max);
            result["horseshoe"]["certificate"] = to_json(cert);
            result["horseshoe"]["induced"] = to_json(induced);
            if (!induced.strict) verdict_failed = true;
        }
    } else if (cfg.subcommand == "imfs") {
        if (csv) throw ParseError("imfs has no csv schema");
        Imfs sys = [&] {
            if (cfg.imfs_file.empty()) return build_full_shift_imfs(map, map.domain());
            std::ifstream in(cfg.imfs_file);
            if (!in) throw ParseError("cannot open --imfs-file " + cfg.imfs_file);
            std::stringstream buf;
            buf << in.rdbuf();
            return parse_imfs_text(map, buf.str());
        }();
        result["map"] = cfg.map_spec;
        result["imfs"] = to_json(sys);
        result["x0"] = base0;
        result["time"] = cfg.time_T;
        result["star"] = star_property_check(sys, base0, cfg.time_T);
        result["freeness"] = freeness_check(sys, base0, cfg.time_T);
        if (cfg.bound_d || cfg.key_lemma) {
            auto op = ulam_operator(map, Potential::constant(0.0), cfg.cells);
            auto nu = equilibrium_estimate(op, leading_eigendata(op));
            if (cfg.bound_d) {
                auto bres = branch_bound_check(sys, phi, nu, *cfg.bound_d, cfg.samples);
                result["branch_bound"] = to_json(bres, *cfg.bound_d);
            }
            if (cfg.key_lemma) {
                std::vector<double> pts = cfg.bases.empty() ? std::vector<double>{base0} : cfg.bases;
                result["key_lemma"] = ordered_json::array();
                for (const auto& pt : key_lemma_check(map, phi, nu, pts, cfg.depth, cfg.threads)) {
                    result["key_lemma"].push_back(to_json(pt));
                    if (!pt.strict) verdict_failed = true;
                }
            }
        }
    } else if (cfg.subcommand == "exactness") {
        if (csv) throw ParseError("exactness has no csv schema");
        auto t = map.exactness_time({cfg.exact_lo, cfg.exact_hi}, cfg.exact_n_max);
        result["map"] = cfg.map_spec;
        result["interval"] = ordered_json::array({cfg.exact_lo, cfg.exact_hi});
        result["n_max"] = cfg.exact_n_max;
        if (t)
            result["time"] = *t;
        else
            result["time"] = nullptr;
    } else if (cfg.subcommand == "theorem1") {
        if (csv) throw ParseError("theorem1 has no csv schema");
        HyperbolicityParams params;
        params.n_max = cfg.depth;
        params.n_sup = cfg.n_sup;
        params.grid = cfg.grid;
        params.ulam_cells = cfg.cells;
        params.base_point = base0;
        params.threads = cfg.threads;
        detail::Theorem1Report rep;
        rep.hyperbolicity = hyperbolicity_report(map, phi, params);
        rep.equilibrium =
            equilibrium_report(map, phi, cfg.cells, rep.hyperbolicity.pressure_lower);
        bool hyp = rep.hyperbolicity.verdict == Verdict::hyperbolic;
        rep.consistency =
            !hyp || (rep.equilibrium.entropy_positive && rep.equilibrium.lyapunov_positive);
        result["map"] = cfg.map_spec;
        result["potential"] = cfg.potential_spec;
        result["report"] = detail::to_json(rep);
        verdict_failed = !hyp || !rep.consistency;
    } else {
        throw ParseError("unknown subcommand '" + cfg.subcommand + "'");
    }

    ExperimentResult res;
    if (csv) {
        res.payload = csv_payload;
    } else {
        ordered_json doc;
        doc["tool"] = "thermoform";
        doc["subcommand"] = cfg.subcommand;
        if (cfg.dump_config) doc["config"] = detail::config_json(cfg);
        doc["result"] = result;
        if (!cfg.no_meta) doc["meta"] = ordered_json{{"generated_at", detail::iso_utc_now()}};
        res.payload = doc.dump(2) + "\n";
    }
    res.exit_code = verdict_failed ? kExitVerdict : kExitOk;
    return res;
}

/// Argument-vector front end (args exclude the program name).
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg;
    CLI::App app{"thermodynamic-formalism experiments on interval maps", "thermoform"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub, bool wants_potential = true) {
        sub->add_option("--map", cfg.map_spec,
                        "map spec: cheb2 | cheb3 | quad:a | poly:[a,b]:c0,c1,...")
            ->required();
        if (wants_potential)
            sub->add_option("--potential", cfg.potential_spec,
                            "potential spec: const:c | cos:a | poly:c0,... | geom:t[:base]");
        sub->add_option("--out", cfg.out_path, "output path, or - for stdout");
        sub->add_option("--format", cfg.format, "json or csv");
        sub->add_flag("--no-meta", cfg.no_meta, "omit the timestamp block");
        sub->add_flag("--dump-config", cfg.dump_config, "echo the resolved config");
        sub->add_option("--threads", cfg.threads, "worker cap (does not change output bytes)");
    };

    auto* pressure = app.add_subcommand("pressure", "tree pressure series");
    add_common(pressure);
    pressure->add_option("--base", cfg.bases, "base point(s) x0");
    pressure->add_option("--depth", cfg.depth, "tree depth n_max");

    auto* hyp = app.add_subcommand("hyperbolicity", "hyperbolicity verdict");
    add_common(hyp);
    hyp->add_option("--base", cfg.bases, "base point x0");
    hyp->add_option("--depth", cfg.depth, "tree depth n_max");
    hyp->add_option("--nsup", cfg.n_sup, "sup averages for n = 1..nsup");
    hyp->add_option("--grid", cfg.grid, "sup grid size");
    hyp->add_option("--cells", cfg.cells, "Ulam cells");

    auto* eq = app.add_subcommand("equilibrium", "equilibrium-state estimate");
    add_common(eq);
    eq->add_option("--cells", cfg.cells, "Ulam cells");
    eq->add_option("--pressure-from", cfg.pressure_from, "ulam | tree");
    eq->add_option("--base", cfg.bases, "base point for --pressure-from tree");
    eq->add_option("--depth", cfg.depth, "tree depth for --pressure-from tree");
    eq->add_option("--dump-matrix", cfg.dump_matrix, "write the sparse operator as i,j,value csv");

    auto* pg = app.add_subcommand("periodic-gap", "periodic-orbit gap inequality");
    add_common(pg);
    pg->add_option("--period", cfg.period, "max period");
    pg->add_option("--depth", cfg.depth, "tree depth");
    pg->add_flag("--horseshoe", cfg.horseshoe, "also build a horseshoe certificate");
    pg->add_option("--rho", cfg.rho, "ball radius around the periodic point");
    pg->add_option("--kmax", cfg.k_max, "max iterate count for the certificate");
    pg->add_option("--mmax", cfg.m_max, "induced series depth");

    auto* im = app.add_subcommand("imfs", "inverse-branch system checks");
    add_common(im);
    im->add_option("--base", cfg.bases, "base point(s) x0");
    im->add_option("--time", cfg.time_T, "max word time T");
    im->add_option("--imfs-file", cfg.imfs_file, "branch description file");
    im->add_option("--bound-d", cfg.bound_d, "check the branch inequality with this D");
    im->add_option("--samples", cfg.samples, "samples per branch window");
    im->add_flag("--key-lemma", cfg.key_lemma, "run the growth-rate comparison at each base");
    im->add_option("--depth", cfg.depth, "tree depth for --key-lemma");
    im->add_option("--cells", cfg.cells, "Ulam cells for the reference measure");

    auto* ex = app.add_subcommand("exactness", "time to cover the whole interval");
    add_common(ex, false);
    ex->add_option("--lo", cfg.exact_lo, "interval lower endpoint")->required();
    ex->add_option("--hi", cfg.exact_hi, "interval upper endpoint")->required();
    ex->add_option("--nmax", cfg.exact_n_max, "search bound");

    auto* t1 = app.add_subcommand("theorem1", "hyperbolicity + equilibrium consistency");
    add_common(t1);
    t1->add_option("--base", cfg.bases, "base point x0");
    t1->add_option("--depth", cfg.depth, "tree depth n_max");
    t1->add_option("--nsup", cfg.n_sup, "sup averages for n = 1..nsup");
    t1->add_option("--grid", cfg.grid, "sup grid size");
    t1->add_option("--cells", cfg.cells, "Ulam cells");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitParse;
    }

    // subcommand-sensitive defaults
    if (eq->parsed() && !eq->count("--cells")) cfg.cells = 4096;
    if (t1->parsed() && !t1->count("--cells")) cfg.cells = 4096;
    if (t1->parsed() && !t1->count("--depth")) cfg.depth = 14;
    for (auto* sub : {pressure, hyp, eq, pg, im, ex, t1})
        if (sub->parsed()) cfg.subcommand = sub->get_name();

    try {
        ExperimentResult res = run_experiment(cfg);
        if (cfg.out_path == "-") {
            out << res.payload;
        } else {
            std::ofstream f(cfg.out_path, std::ios::binary);
            if (!f) {
                err << "thermoform: cannot open output path " << cfg.out_path << "\n";
                return kExitParse;
            }
            f << res.payload;
        }
        return res.exit_code;
    } catch (const ParseError& e) {
        err << "thermoform: " << e.what() << "\n";
        return kExitParse;
    } catch (const ConstructionError& e) {
        err << "thermoform: " << e.what() << "\n";
        return kExitParse;
    } catch (const OutOfDomainError& e) {
        err << "thermoform: " << e.what() << "\n";
        return kExitParse;
    } catch (const PreconditionError& e) {
        err << "thermoform: " << e.what() << "\n";
        return kExitParse;
    } catch (const NotHolderError& e) {
        err << "thermoform: " << e.what() << "\n";
        return kExitParse;
    } catch (const BudgetError& e) {
        err << "thermoform: " << e.what() << "\n";
        return kExitBudget;
    } catch (const NotFoundError& e) {
        err << "thermoform: " << e.what() << "\n";
        return kExitVerdict;
    } catch (const std::exception& e) {
        err << "thermoform: " << e.what() << "\n";
        return kExitInternal;
    }
}

} // namespace thermoform
