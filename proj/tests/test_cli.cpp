#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "thermoform/cli.hpp"

using namespace thermoform;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = run_cli(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

} // namespace

TEST_CASE("map and potential specs parse", "[cli]") {
    auto f2 = parse_map_spec("cheb2");
    CHECK(f2.degree() == 2);
    auto zero = parse_potential_spec("const:0", f2);
    CHECK(zero(0.3) == 0.0);

    // coefficient identity: poly:[0,1]:0,4,-4 is cheb2
    auto poly = parse_map_spec("poly:[0,1]:0,4,-4");
    for (double x : {0.1, 0.33, 0.62, 0.9})
        CHECK(poly.eval(x) == Catch::Approx(f2.eval(x)).margin(1e-15));
    auto cosp = parse_potential_spec("cos:0.3", poly);
    CHECK(cosp(0.5) == Catch::Approx(-0.3).margin(1e-15));

    auto geo = parse_potential_spec("geom:1", f2);
    CHECK_FALSE(geo.is_holder());
    CHECK(geo(0.25) == Catch::Approx(-std::log(2.0)).margin(1e-12));
    auto geo2 = parse_potential_spec("geom:0.5:cos:0.3", f2);
    CHECK(geo2(0.25) == Catch::Approx(0.3 * std::cos(M_PI / 2) - 0.5 * std::log(2.0)).margin(1e-12));

    CHECK_THROWS_AS(parse_map_spec("cheb4"), ParseError);
    CHECK_THROWS_AS(parse_map_spec("quad:abc"), ParseError);
    CHECK_THROWS_AS(parse_map_spec("poly:0,1"), ParseError);
    CHECK_THROWS_AS(parse_potential_spec("sin:1", f2), ParseError);
}

TEST_CASE("pressure subcommand prints log 2", "[cli]") {
    auto r = run({"pressure", "--map", "cheb2", "--potential", "const:0", "--base", "0.75",
                  "--depth", "10", "--no-meta"});
    REQUIRE(r.code == 0);
    auto doc = ordered_json::parse(r.out);
    auto p10 = doc["result"]["series"][0]["p_n"][9].get<double>();
    CHECK(p10 == Catch::Approx(0.6931472).margin(5e-8));
    CHECK(doc["result"]["series"][0]["leaf_count"][9].get<long long>() == 1024);
}

TEST_CASE("csv and json report identical numbers", "[cli]") {
    std::vector<std::string> base{"pressure", "--map",   "cheb2", "--potential", "cos:0.3",
                                  "--base",   "0.75",    "--depth", "8",         "--no-meta"};
    auto js = run(base);
    auto csvargs = base;
    csvargs.push_back("--format");
    csvargs.push_back("csv");
    auto cs = run(csvargs);
    REQUIRE(js.code == 0);
    REQUIRE(cs.code == 0);
    auto doc = ordered_json::parse(js.out);

    std::istringstream lines(cs.out);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "n,p_n,leaf_count");
    for (int n = 1; std::getline(lines, line); ++n) {
        auto c1 = line.find(','), c2 = line.rfind(',');
        double p = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        long long lc = std::stoll(line.substr(c2 + 1));
        // identical bits, not merely close
        CHECK(p == doc["result"]["series"][0]["p_n"][n - 1].get<double>());
        CHECK(lc == doc["result"]["series"][0]["leaf_count"][n - 1].get<long long>());
    }
}

TEST_CASE("reports are byte-identical across reruns and thread counts", "[cli]") {
    std::vector<std::vector<std::string>> configs = {
        {"pressure", "--map", "cheb2", "--potential", "cos:0.3", "--base", "0.75", "--depth",
         "10", "--no-meta"},
        {"theorem1", "--map", "cheb2", "--potential", "cos:0.1", "--depth", "10", "--nsup",
         "4", "--grid", "5000", "--cells", "128", "--no-meta"},
        {"periodic-gap", "--map", "cheb2", "--potential", "const:0", "--period", "1",
         "--depth", "10", "--no-meta"},
    };
    for (const auto& cfg : configs) {
        auto a = run(cfg);
        auto b = run(cfg);
        CHECK(a.out == b.out);
        for (const char* t : {"1", "8"}) {
            auto threaded = cfg;
            threaded.push_back("--threads");
            threaded.push_back(t);
            CHECK(run(threaded).out == a.out);
        }
    }
}

TEST_CASE("meta block is present by default and removed by --no-meta", "[cli]") {
    auto with = run({"exactness", "--map", "cheb2", "--lo", "0.4", "--hi", "0.6"});
    auto doc = ordered_json::parse(with.out);
    CHECK(doc.contains("meta"));
    CHECK(doc["result"]["time"].get<int>() == 4);

    auto without = run({"exactness", "--map", "cheb2", "--lo", "0.4", "--hi", "0.6", "--no-meta"});
    CHECK_FALSE(ordered_json::parse(without.out).contains("meta"));

    auto absent = run({"exactness", "--map", "cheb2", "--lo", "0.49", "--hi", "0.51",
                       "--nmax", "3", "--no-meta"});
    CHECK(ordered_json::parse(absent.out)["result"]["time"].is_null());
}

TEST_CASE("exit codes follow the documented mapping", "[cli]") {
    // 2: parse errors
    CHECK(run({"pressure", "--map", "cheb4"}).code == kExitParse);
    CHECK(run({"pressure", "--map", "cheb2", "--potential", "sin:3"}).code == kExitParse);
    CHECK(run({"bogus-subcommand"}).code == kExitParse);
    CHECK(run({"theorem1", "--map", "cheb2", "--format", "csv"}).code == kExitParse);
    // non-Hölder potential rejected for verdict subcommands
    CHECK(run({"hyperbolicity", "--map", "cheb2", "--potential", "geom:1"}).code == kExitParse);

    // 2: nonpositive numeric params are rejected before any computation
    CHECK(run({"pressure", "--map", "cheb2", "--depth", "-3"}).code == kExitParse);
    CHECK(run({"hyperbolicity", "--map", "cheb2", "--grid", "0"}).code == kExitParse);

    // 4: budget
    CHECK(run({"pressure", "--map", "cheb2", "--depth", "40"}).code == kExitBudget);

    // 3: a failed strictness search (window too small for the certificate)
    CHECK(run({"periodic-gap", "--map", "cheb2", "--period", "1", "--depth", "8",
               "--horseshoe", "--rho", "1e-6", "--kmax", "2"}).code == kExitVerdict);

    // 0: healthy runs
    CHECK(run({"pressure", "--map", "cheb2", "--depth", "6"}).code == kExitOk);
    CHECK(run({"imfs", "--map", "cheb2", "--base", "0.75", "--time", "6"}).code == kExitOk);
}

TEST_CASE("geom potential is accepted where no Hölder hypothesis is needed", "[cli]") {
    auto r = run({"pressure", "--map", "cheb2", "--potential", "geom:1", "--base", "0.3",
                  "--depth", "4", "--no-meta"});
    CHECK(r.code == kExitOk);
}

TEST_CASE("theorem1 pipeline on cheb2 with a cosine potential", "[cli]") {
    auto r = run({"theorem1", "--map", "cheb2", "--potential", "cos:0.3", "--depth", "12",
                  "--nsup", "6", "--grid", "20000", "--cells", "512", "--no-meta"});
    REQUIRE(r.code == 0);
    auto doc = ordered_json::parse(r.out);
    CHECK(doc["result"]["report"]["consistency"].get<bool>());
    CHECK(doc["result"]["report"]["hyperbolicity"]["verdict"].get<std::string>() == "hyperbolic");
    CHECK(doc["result"]["report"]["equilibrium"]["ruelle_ok"].get<bool>());
}

TEST_CASE("dump-config echoes the resolved parameters", "[cli]") {
    auto r = run({"pressure", "--map", "cheb2", "--depth", "6", "--dump-config", "--no-meta"});
    auto doc = ordered_json::parse(r.out);
    CHECK(doc["config"]["depth"].get<int>() == 6);
    CHECK(doc["config"]["map"].get<std::string>() == "cheb2");
}

TEST_CASE("equilibrium csv carries the measure table", "[cli]") {
    auto r = run({"equilibrium", "--map", "cheb2", "--potential", "const:0", "--cells", "64",
                  "--format", "csv", "--no-meta"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "cell_lo,cell_hi,weight");
    int rows = 0;
    double total = 0;
    std::string line;
    while (std::getline(lines, line)) {
        ++rows;
        total += std::stod(line.substr(line.rfind(',') + 1));
    }
    CHECK(rows == 64);
    CHECK(total == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("imfs subcommand checks the branch inequality", "[cli]") {
    // against the MME estimate, ∫x dν ≈ 0.5, and the left window still has min y = 0
    auto good = run({"imfs", "--map", "cheb2", "--potential", "poly:0,1", "--bound-d", "0.8",
                     "--cells", "128", "--time", "4", "--no-meta"});
    REQUIRE(good.code == 0);
    auto doc = ordered_json::parse(good.out);
    CHECK(doc["result"]["branch_bound"]["ok"].get<bool>());

    auto bad = run({"imfs", "--map", "cheb2", "--potential", "poly:0,1", "--bound-d", "0.2",
                    "--cells", "128", "--time", "4", "--no-meta"});
    auto bdoc = ordered_json::parse(bad.out);
    CHECK_FALSE(bdoc["result"]["branch_bound"]["ok"].get<bool>());
}

TEST_CASE("equilibrium can dump the sparse operator", "[cli]") {
    std::string path = "cli_test_matrix.csv";
    auto r = run({"equilibrium", "--map", "cheb2", "--potential", "const:0", "--cells", "8",
                  "--dump-matrix", path, "--no-meta"});
    REQUIRE(r.code == 0);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "i,j,value");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows >= 16); // at least degree entries per row
    in.close();
    std::remove(path.c_str());
}

TEST_CASE("imfs subcommand runs the key lemma across base points", "[cli]") {
    auto r = run({"imfs", "--map", "cheb2", "--potential", "cos:0.3", "--key-lemma", "--base",
                  "0.3", "--base", "0.6", "--base", "0.75", "--depth", "12", "--cells", "256",
                  "--time", "6", "--no-meta"});
    REQUIRE(r.code == 0);
    auto doc = ordered_json::parse(r.out);
    CHECK(doc["result"]["freeness"].get<bool>()); // x0 = 0.3 is generic
    REQUIRE(doc["result"]["key_lemma"].size() == 3);
    for (const auto& pt : doc["result"]["key_lemma"])
        CHECK(pt["strict"].get<bool>());
}
