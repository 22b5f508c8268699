#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cgl/config.hpp"
#include "cgl/io.hpp"
#include "cgl/run.hpp"
#include "doctest.h"

using namespace cgl;

TEST_SUITE("config_io") {

TEST_CASE("minimal config fills defaults") {
    const RunConfig cfg = parse_config("[model]\np = 2\n");
    CHECK(cfg.p == 2.0);
    CHECK(cfg.beta == 0.0);
    CHECK(cfg.d == 1);
    CHECK(cfg.tau_end == 50.0);
    CHECK(cfg.k_top == 4);
    CHECK(cfg.N_proj == 10);
    CHECK(cfg.tol_norm == 1e-6);
    double L;
    int n;
    resolved_domain(cfg, L, n);
    CHECK(L == 30.0);
    CHECK(n == 961);
    // d = 2 defaults
    RunConfig c2 = cfg;
    c2.d = 2;
    resolved_domain(c2, L, n);
    CHECK(L == 20.0);
    CHECK(n == 241);
}

TEST_CASE("config error paths") {
    try {
        parse_config("[model]\nbeta = 0.1\n");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingRequired);
    }
    try {
        parse_config("[model]\np = 2\nzeta = 1\n");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownKey);
    }
    try {
        parse_config("[model]\np = fast\n");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TypeError);
    }
    try {
        parse_config("[chrome]\nshiny = 1\n");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownKey);
    }
    // model-level rejections surface through params_of
    try {
        params_of(parse_config("[model]\np = 0.5\n"));
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BadExponent);
    }
    try {
        params_of(parse_config("[model]\np = 2\ndelta = 2\nbeta = 0\n"));
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SupercriticalOrCritical);
    }
}

TEST_CASE("canonical serializer round-trips") {
    RunConfig cfg = parse_config("[model]\np = 2.5\nbeta = -0.125\ndelta = 0.33333333333333331\n");
    cfg.snapshot_taus = {0.25, 1.0, 12.5};
    cfg.shift = {0.37};
    cfg.overwrite = true;
    cfg.phys_kind = "gaussian";
    const std::string text = serialize_config(cfg);
    const RunConfig cfg2 = parse_config(text);
    CHECK(serialize_config(cfg2) == text);
    // comments and blank lines are tolerated
    const RunConfig cfg3 = parse_config("# header\n[model]\np = 2 # inline\n\n");
    CHECK(cfg3.p == 2.0);
}

TEST_CASE("rescaled snapshot round-trips bit-exactly") {
    namespace fs = std::filesystem;
    const Grid g(1, 30.0, 61);
    RescaledSnapshot snap;
    snap.tau = 1.5;
    snap.t = 0.01;
    snap.H = 0.37;
    snap.phi0 = -0.2;
    snap.V = {0.125};
    snap.M = UpperTri::identity(1);
    snap.M.set(0, 0, 1.0625);
    snap.U = Field(g);
    snap.Theta = Field(g);
    for (std::size_t i = 0; i < snap.U.size(); ++i) {
        snap.U.v[i] = std::sin(0.1 * i) + 1.5;
        snap.Theta.v[i] = std::cos(0.2 * i);
    }
    const std::string path = (fs::temp_directory_path() / "cgl_test_snap.snap").string();
    write_rescaled_snapshot(path, g, snap);
    Grid g2;
    const RescaledSnapshot back = read_rescaled_snapshot(path, g2);
    CHECK(g2 == g);
    CHECK(back.tau == snap.tau);
    CHECK(back.t == snap.t);
    CHECK(back.H == snap.H);
    CHECK(back.phi0 == snap.phi0);
    CHECK(back.V == snap.V);
    CHECK(back.M.a == snap.M.a);
    CHECK(back.U.v == snap.U.v);      // bit-exact payload
    CHECK(back.Theta.v == snap.Theta.v);
    fs::remove(path);
}

TEST_CASE("series CSV round-trips through 17-digit decimals") {
    namespace fs = std::filesystem;
    std::vector<SeriesRow> rows(3);
    for (int i = 0; i < 3; ++i) {
        SeriesRow& r = rows[i];
        r.tau = i * 0.1 + 1.0 / 3.0;
        r.t = i * 0.001;
        r.H = std::exp(-0.3 * i);
        r.cW = 0.1 / (i + 1);
        r.cU = r.cW - 1.0;
        r.trQ = 0.5 / (i + 1);
        r.detQ = r.trQ;
        r.lam_min = r.lam_max = r.trQ;
        r.V = {1e-9 * i};
        r.E0 = 1e-3;
        r.Ektop = 2e-3;
        r.F1 = 3e-3;
        r.Fktop = 4e-3;
        r.Etotal = 5e-3;
        r.min_U_ratio = 0.99;
        r.phi0 = -0.1 * i;
        r.That_estimate = 0.0103;
    }
    const std::string path = (fs::temp_directory_path() / "cgl_test_series.csv").string();
    write_series_csv(path, rows, 1);
    const auto back = read_series_csv(path, 1);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].tau == rows[i].tau);
        CHECK(back[i].H == rows[i].H);
        CHECK(back[i].V[0] == rows[i].V[0]);
        CHECK(back[i].That_estimate == rows[i].That_estimate);
    }
    // header line is the exact schema
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header ==
          "tau,t,H,cW,cU,trQ,detQ,lam_min,lam_max,V0,E0,Ektop,F1,Fktop,Etotal,min_U_ratio,phi0,"
          "That_estimate");
    fs::remove(path);
}

TEST_CASE("runs are bit-for-bit reproducible from the same config") {
    RunConfig cfg = parse_config("[model]\np = 2\nbeta = 0.5\ndelta = 0.2\n");
    cfg.L = 15;
    cfg.n = 241;
    cfg.tau_end = 0.2;
    cfg.report_every = 0.1;
    cfg.H_scale = 1e-3;
    cfg.dir = "";
    const RescaledRunData a = run_rescaled(cfg, false);
    const RescaledRunData b = run_rescaled(cfg, false);
    REQUIRE(a.series.size() == b.series.size());
    for (std::size_t i = 0; i < a.series.size(); ++i) {
        CHECK(a.series[i].H == b.series[i].H);
        CHECK(a.series[i].Etotal == b.series[i].Etotal);
        CHECK(a.series[i].cW == b.series[i].cW);
    }
}

TEST_CASE("meta.json carries the required keys") {
    namespace fs = std::filesystem;
    const std::string dir = (fs::temp_directory_path() / "cgl_test_meta").string();
    fs::remove_all(dir);
    fs::create_directories(dir);
    RunConfig cfg = parse_config("[model]\np = 2\n");
    MonitorSummary mon;
    write_meta(dir, cfg, params_of(cfg), mon, "completed");
    std::ifstream is(fs::path(dir) / "meta.json");
    REQUIRE(is.good());
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    for (const char* key : {"\"config\"", "\"constants\"", "\"monitors\"", "\"outcome\"",
                            "\"kappa2\"", "\"K\"", "\"c0\""})
        CHECK(text.find(key) != std::string::npos);
    fs::remove_all(dir);
}

}  // TEST_SUITE
