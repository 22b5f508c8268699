#include "cgl/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cgl/diagnostics.hpp"
#include "json.hpp"

namespace cgl {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "snapshot format assumes a little-endian host");

std::string format_g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

std::vector<std::string> series_header(int d) {
    std::vector<std::string> h = {"tau", "t", "H", "cW", "cU", "trQ", "detQ", "lam_min", "lam_max"};
    for (int a = 0; a < d; ++a) h.push_back("V" + std::to_string(a));
    for (const char* s : {"E0", "Ektop", "F1", "Fktop", "Etotal", "min_U_ratio", "phi0",
                          "That_estimate"})
        h.push_back(s);
    return h;
}

void write_doubles(std::ofstream& os, const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::ifstream& is, std::size_t count) {
    std::vector<double> v(count);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) fail(ErrorCode::IoError, "snapshot truncated");
    return v;
}

json grid_header(const Grid& g, double tau, double t, const std::vector<std::string>& fields) {
    json h;
    h["d"] = g.d;
    std::vector<int> ns(g.d, g.n);
    h["n"] = ns;
    h["L"] = g.L;
    h["tau"] = tau;
    h["t"] = t;
    h["fields"] = fields;
    return h;
}

Grid grid_from_header(const json& h, bool physical) {
    const int d = h.at("d").get<int>();
    const auto ns = h.at("n").get<std::vector<int>>();
    const double L = h.at("L").get<double>();
    if (ns.empty()) fail(ErrorCode::IoError, "snapshot header has empty n");
    return physical ? Grid::physical(d, L, ns[0]) : Grid(d, L, ns[0], L >= 10.0);
}

}  // namespace

void write_series_csv(const std::string& path, const std::vector<SeriesRow>& rows, int d) {
    std::ofstream os(path);
    if (!os) fail(ErrorCode::IoError, "cannot open " + path);
    const auto hdr = series_header(d);
    for (std::size_t i = 0; i < hdr.size(); ++i) os << (i ? "," : "") << hdr[i];
    os << "\n";
    for (const auto& r : rows) {
        std::vector<double> vals = {r.tau, r.t, r.H, r.cW, r.cU, r.trQ, r.detQ, r.lam_min,
                                    r.lam_max};
        for (int a = 0; a < d; ++a) vals.push_back(r.V.size() > static_cast<std::size_t>(a) ? r.V[a] : 0.0);
        for (double x : {r.E0, r.Ektop, r.F1, r.Fktop, r.Etotal, r.min_U_ratio, r.phi0,
                         r.That_estimate})
            vals.push_back(x);
        for (std::size_t i = 0; i < vals.size(); ++i) os << (i ? "," : "") << format_g17(vals[i]);
        os << "\n";
    }
}

std::vector<SeriesRow> read_series_csv(const std::string& path, int d) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::IoError, "cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) fail(ErrorCode::IoError, "empty series file");
    std::vector<SeriesRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> vals;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = line.find(',', pos);
            const std::string tok = line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                                : comma - pos);
            vals.push_back(std::strtod(tok.c_str(), nullptr));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (vals.size() != static_cast<std::size_t>(17 + d))
            fail(ErrorCode::IoError, "series row has wrong column count");
        SeriesRow r;
        std::size_t i = 0;
        r.tau = vals[i++];
        r.t = vals[i++];
        r.H = vals[i++];
        r.cW = vals[i++];
        r.cU = vals[i++];
        r.trQ = vals[i++];
        r.detQ = vals[i++];
        r.lam_min = vals[i++];
        r.lam_max = vals[i++];
        r.V.assign(d, 0.0);
        for (int a = 0; a < d; ++a) r.V[a] = vals[i++];
        r.E0 = vals[i++];
        r.Ektop = vals[i++];
        r.F1 = vals[i++];
        r.Fktop = vals[i++];
        r.Etotal = vals[i++];
        r.min_U_ratio = vals[i++];
        r.phi0 = vals[i++];
        r.That_estimate = vals[i++];
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_physical_series_csv(const std::string& path,
                               const std::vector<PhysicalSeriesRow>& rows, int d) {
    std::ofstream os(path);
    if (!os) fail(ErrorCode::IoError, "cannot open " + path);
    os << "t,amp_max";
    for (int a = 0; a < d; ++a) os << ",amp_argmax" << a;
    os << ",dt\n";
    for (const auto& r : rows) {
        os << format_g17(r.t) << "," << format_g17(r.amp_max);
        for (int a = 0; a < d; ++a) os << "," << format_g17(r.amp_argmax[a]);
        os << "," << format_g17(r.dt) << "\n";
    }
}

void write_rescaled_snapshot(const std::string& path, const Grid& grid,
                             const RescaledSnapshot& snap) {
    json h = grid_header(grid, snap.tau, snap.t, {"U", "Theta"});
    h["mod"] = {{"H", snap.H}, {"V", snap.V}, {"M", snap.M.a}, {"phi0", snap.phi0}};
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::IoError, "cannot open " + path);
    os << h.dump() << "\n";
    write_doubles(os, snap.U.v);
    write_doubles(os, snap.Theta.v);
}

RescaledSnapshot read_rescaled_snapshot(const std::string& path, Grid& grid_out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::IoError, "cannot open " + path);
    std::string header;
    if (!std::getline(is, header)) fail(ErrorCode::IoError, "missing snapshot header");
    const json h = json::parse(header);
    grid_out = grid_from_header(h, false);
    RescaledSnapshot snap;
    snap.tau = h.at("tau").get<double>();
    snap.t = h.at("t").get<double>();
    const json& mod = h.at("mod");
    snap.H = mod.at("H").get<double>();
    snap.V = mod.at("V").get<std::vector<double>>();
    snap.phi0 = mod.at("phi0").get<double>();
    snap.M = UpperTri(grid_out.d);
    snap.M.a = mod.at("M").get<std::vector<double>>();
    snap.U = Field(grid_out);
    snap.Theta = Field(grid_out);
    snap.U.v = read_doubles(is, grid_out.size());
    snap.Theta.v = read_doubles(is, grid_out.size());
    return snap;
}

void write_physical_snapshot(const std::string& path, const Grid& grid,
                             const PhysicalSnapshot& snap) {
    json h = grid_header(grid, 0.0, snap.t, {"Re", "Im"});
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::IoError, "cannot open " + path);
    os << h.dump() << "\n";
    write_doubles(os, snap.psi.re);
    write_doubles(os, snap.psi.im);
}

PhysicalSnapshot read_physical_snapshot(const std::string& path, Grid& grid_out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::IoError, "cannot open " + path);
    std::string header;
    if (!std::getline(is, header)) fail(ErrorCode::IoError, "missing snapshot header");
    const json h = json::parse(header);
    grid_out = grid_from_header(h, true);
    PhysicalSnapshot snap;
    snap.t = h.at("t").get<double>();
    snap.psi = ComplexField(grid_out);
    snap.psi.re = read_doubles(is, grid_out.size());
    snap.psi.im = read_doubles(is, grid_out.size());
    return snap;
}

void ensure_output_dir(const std::string& dir, bool overwrite) {
    fs::path p(dir);
    if (fs::exists(p)) {
        if (!overwrite && !fs::is_empty(p))
            fail(ErrorCode::IoError, "output directory exists and overwrite = false: " + dir);
        if (overwrite) fs::remove_all(p);
    }
    fs::create_directories(p / "snapshots");
}

void write_meta(const std::string& dir, const RunConfig& cfg, const Parameters& params,
                const MonitorSummary& monitors, const std::string& outcome) {
    const DerivedConstants dc = derive_constants(params);
    const WeightConstants wc = weight_constants(params, cfg.k_top);
    json meta;
    meta["config"] = serialize_config(cfg);
    meta["constants"] = {
        {"flat_star", dc.flat_star}, {"c_p", dc.c_p},       {"sigma", dc.sigma},
        {"kappa0", dc.kappa0},       {"kappa2", dc.kappa2}, {"kappa4", dc.kappa4},
        {"mu_phase", dc.mu_phase},   {"mu5", dc.mu5},       {"sigma_prime", dc.sigma_prime},
        {"K", dc.K},                 {"eps", dc.eps},       {"eps2", dc.eps2},
        {"C_b", dc.C_b},             {"c0", wc.c0},         {"c1", wc.c1},
        {"k_top", cfg.k_top}};
    meta["monitors"] = {{"max_norm_residual_at_report", monitors.max_norm_residual_at_report},
                        {"min_U_ratio_min", monitors.min_U_ratio_min},
                        {"detQ_min", monitors.detQ_min},
                        {"lower_bound_ok", monitors.lower_bound_ok},
                        {"energies_bounded", monitors.energies_bounded},
                        {"max_projection_correction", monitors.max_projection_correction},
                        {"last_cfl_dt", monitors.last_cfl_dt},
                        {"total_steps", monitors.total_steps},
                        {"k_top_in_place_of_K", true}};
    meta["outcome"] = outcome;
    meta["version"] = "cgl-lab 0.1.0";
    std::ofstream os(fs::path(dir) / "meta.json");
    if (!os) fail(ErrorCode::IoError, "cannot write meta.json");
    os << meta.dump(2) << "\n";
}

RescaledRunData load_rescaled_run(const std::string& dir) {
    fs::path p(dir);
    std::ifstream ms(p / "meta.json");
    if (!ms) fail(ErrorCode::IoError, "missing meta.json in " + dir);
    json meta;
    ms >> meta;
    const RunConfig cfg = parse_config(meta.at("config").get<std::string>());

    RescaledRunData run;
    run.params = params_of(cfg);
    run.k_top = cfg.k_top;
    run.outcome = meta.at("outcome").get<std::string>();
    double L;
    int n;
    resolved_domain(cfg, L, n);
    run.grid = Grid(cfg.d, L, n);
    run.series = read_series_csv((p / "series.csv").string(), cfg.d);

    std::vector<fs::path> snaps;
    if (fs::exists(p / "snapshots"))
        for (const auto& e : fs::directory_iterator(p / "snapshots"))
            if (e.path().extension() == ".snap") snaps.push_back(e.path());
    std::sort(snaps.begin(), snaps.end());
    for (const auto& sp : snaps) {
        Grid g;
        run.snapshots.push_back(read_rescaled_snapshot(sp.string(), g));
    }
    std::sort(run.snapshots.begin(), run.snapshots.end(),
              [](const RescaledSnapshot& a, const RescaledSnapshot& b) { return a.tau < b.tau; });
    return run;
}

void write_report_json(const std::string& dir, const RescaledRunData& run) {
    std::vector<RateInputRow> rows;
    for (const auto& s : run.series) {
        RateInputRow r;
        r.tau = s.tau;
        r.t = s.t;
        r.H = s.H;
        r.trQ = s.trQ;
        r.phi0 = s.phi0;
        rows.push_back(r);
    }
    for (auto& r : rows)
        for (const auto& s : run.snapshots)
            if (std::fabs(s.tau - r.tau) < 1e-9) {
                r.has_M = true;
                r.M = s.M;
            }
    const auto rates = rate_report(rows, run.params);

    json out = json::array();
    for (std::size_t i = 0; i < rates.size(); ++i) {
        const auto& rr = rates[i];
        const auto& s = run.series[i];
        json o = {{"tau", rr.tau},
                  {"t", rr.t},
                  {"That", rr.That},
                  {"ratio_TH", rr.ratio_TH},
                  {"ratio_H", rr.ratio_H},
                  {"ratio_pred", rr.ratio_pred},
                  {"trQ_tau_over_d", rr.trQ_tau_over_d},
                  {"A_phase", rr.A_phase},
                  {"Abar_phase", rr.Abar_phase},
                  {"E0", s.E0},
                  {"Ektop", s.Ektop},
                  {"F1", s.F1},
                  {"Fktop", s.Fktop},
                  {"Etotal", s.Etotal},
                  {"min_U_ratio", s.min_U_ratio},
                  {"phi0", s.phi0}};
        if (std::isfinite(rr.R_scale_check)) o["R_scale_check"] = rr.R_scale_check;
        // profile error at snapshot times
        for (const auto& snap : run.snapshots)
            if (std::fabs(snap.tau - rr.tau) < 1e-9) {
                const ProfileError pe =
                    linf_profile_error(snap.U, snap.Theta, snap.tau, run.params);
                o["err_complex"] = pe.err_complex;
                o["err_amp_weighted"] = pe.err_amp_weighted;
            }
        out.push_back(o);
    }
    std::ofstream os(fs::path(dir) / "report.json");
    if (!os) fail(ErrorCode::IoError, "cannot write report.json");
    os << out.dump(2) << "\n";
}

}  // namespace cgl
