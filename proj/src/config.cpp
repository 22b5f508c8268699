#include "cgl/config.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace cgl {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double to_double(const std::string& sec, const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        fail(ErrorCode::TypeError, "[" + sec + "] " + key + ": expected a number, got '" + v + "'");
    return x;
}

int to_int(const std::string& sec, const std::string& key, const std::string& v) {
    const double x = to_double(sec, key, v);
    const int i = static_cast<int>(x);
    if (static_cast<double>(i) != x)
        fail(ErrorCode::TypeError, "[" + sec + "] " + key + ": expected an integer, got '" + v + "'");
    return i;
}

bool to_bool(const std::string& sec, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(ErrorCode::TypeError, "[" + sec + "] " + key + ": expected a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& sec, const std::string& key, const std::string& v) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(sec, key, trim(item)));
    return out;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fmt_list(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ",";
        out += fmt(xs[i]);
    }
    return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    bool have_p = false;
    std::string section;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail(ErrorCode::TypeError, "malformed section header: " + line);
            section = trim(line.substr(1, line.size() - 2));
            if (section != "model" && section != "domain" && section != "time" &&
                section != "initial" && section != "diagnostics" && section != "output" &&
                section != "physical")
                fail(ErrorCode::UnknownKey, "unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(ErrorCode::TypeError, "expected key = value: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        auto unknown = [&]() {
            fail(ErrorCode::UnknownKey, "unknown key '" + key + "' in section [" + section + "]");
        };
        if (section == "model") {
            if (key == "p") {
                cfg.p = to_double(section, key, val);
                have_p = true;
            } else if (key == "beta") cfg.beta = to_double(section, key, val);
            else if (key == "delta") cfg.delta = to_double(section, key, val);
            else if (key == "gamma") cfg.gamma = to_double(section, key, val);
            else if (key == "d") cfg.d = to_int(section, key, val);
            else unknown();
        } else if (section == "domain") {
            if (key == "L") cfg.L = to_double(section, key, val);
            else if (key == "n") cfg.n = to_int(section, key, val);
            else unknown();
        } else if (section == "time") {
            if (key == "dtau_max") cfg.dtau_max = to_double(section, key, val);
            else if (key == "tau_end") cfg.tau_end = to_double(section, key, val);
            else if (key == "report_every") cfg.report_every = to_double(section, key, val);
            else if (key == "snapshot_taus") cfg.snapshot_taus = to_list(section, key, val);
            else unknown();
        } else if (section == "initial") {
            if (key == "kind") {
                if (val != "profile_scaled" && val != "gaussian" && val != "file")
                    fail(ErrorCode::TypeError, "initial.kind must be profile_scaled|gaussian|file");
                cfg.kind = val;
            } else if (key == "amplitude") cfg.amplitude = to_double(section, key, val);
            else if (key == "width") cfg.width = to_double(section, key, val);
            else if (key == "shift") cfg.shift = to_list(section, key, val);
            else if (key == "theta_const") cfg.theta_const = to_double(section, key, val);
            else if (key == "H_scale") cfg.H_scale = to_double(section, key, val);
            else if (key == "u0_file") cfg.u0_file = val;
            else if (key == "theta0_file") cfg.theta0_file = val;
            else unknown();
        } else if (section == "diagnostics") {
            if (key == "k_top") cfg.k_top = to_int(section, key, val);
            else if (key == "nu") cfg.nu = to_double(section, key, val);
            else if (key == "nu1") cfg.nu1 = to_double(section, key, val);
            else if (key == "nu2") cfg.nu2 = to_double(section, key, val);
            else if (key == "tol_norm") cfg.tol_norm = to_double(section, key, val);
            else if (key == "N_proj") cfg.N_proj = to_int(section, key, val);
            else unknown();
        } else if (section == "output") {
            if (key == "dir") cfg.dir = val;
            else if (key == "overwrite") cfg.overwrite = to_bool(section, key, val);
            else unknown();
        } else if (section == "physical") {
            if (key == "L") cfg.phys_L = to_double(section, key, val);
            else if (key == "n") cfg.phys_n = to_int(section, key, val);
            else if (key == "t_end") cfg.phys_t_end = to_double(section, key, val);
            else if (key == "amp_stop") cfg.phys_amp_stop = to_double(section, key, val);
            else if (key == "periodic") cfg.phys_periodic = to_bool(section, key, val);
            else if (key == "kind") {
                if (val != "constant" && val != "gaussian" && val != "from_rescaled")
                    fail(ErrorCode::TypeError, "physical.kind must be constant|gaussian|from_rescaled");
                cfg.phys_kind = val;
            } else if (key == "amplitude") cfg.phys_amplitude = to_double(section, key, val);
            else if (key == "width") cfg.phys_width = to_double(section, key, val);
            else if (key == "source_run") cfg.phys_source_run = val;
            else if (key == "source_amp_factor") cfg.phys_source_amp_factor = to_double(section, key, val);
            else unknown();
        } else {
            fail(ErrorCode::UnknownKey, "key '" + key + "' outside any section");
        }
    }
    if (!have_p) fail(ErrorCode::MissingRequired, "missing required key model.p");
    return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "[model]\n"
       << "p = " << fmt(cfg.p) << "\n"
       << "beta = " << fmt(cfg.beta) << "\n"
       << "delta = " << fmt(cfg.delta) << "\n"
       << "gamma = " << fmt(cfg.gamma) << "\n"
       << "d = " << cfg.d << "\n"
       << "[domain]\n"
       << "L = " << fmt(cfg.L) << "\n"
       << "n = " << cfg.n << "\n"
       << "[time]\n"
       << "dtau_max = " << fmt(cfg.dtau_max) << "\n"
       << "tau_end = " << fmt(cfg.tau_end) << "\n"
       << "report_every = " << fmt(cfg.report_every) << "\n"
       << "snapshot_taus = " << fmt_list(cfg.snapshot_taus) << "\n"
       << "[initial]\n"
       << "kind = " << cfg.kind << "\n"
       << "amplitude = " << fmt(cfg.amplitude) << "\n"
       << "width = " << fmt(cfg.width) << "\n"
       << "shift = " << fmt_list(cfg.shift) << "\n"
       << "theta_const = " << fmt(cfg.theta_const) << "\n"
       << "H_scale = " << fmt(cfg.H_scale) << "\n"
       << "u0_file = " << cfg.u0_file << "\n"
       << "theta0_file = " << cfg.theta0_file << "\n"
       << "[diagnostics]\n"
       << "k_top = " << cfg.k_top << "\n"
       << "nu = " << fmt(cfg.nu) << "\n"
       << "nu1 = " << fmt(cfg.nu1) << "\n"
       << "nu2 = " << fmt(cfg.nu2) << "\n"
       << "tol_norm = " << fmt(cfg.tol_norm) << "\n"
       << "N_proj = " << cfg.N_proj << "\n"
       << "[output]\n"
       << "dir = " << cfg.dir << "\n"
       << "overwrite = " << (cfg.overwrite ? "true" : "false") << "\n"
       << "[physical]\n"
       << "L = " << fmt(cfg.phys_L) << "\n"
       << "n = " << cfg.phys_n << "\n"
       << "t_end = " << fmt(cfg.phys_t_end) << "\n"
       << "amp_stop = " << fmt(cfg.phys_amp_stop) << "\n"
       << "periodic = " << (cfg.phys_periodic ? "true" : "false") << "\n"
       << "kind = " << cfg.phys_kind << "\n"
       << "amplitude = " << fmt(cfg.phys_amplitude) << "\n"
       << "width = " << fmt(cfg.phys_width) << "\n"
       << "source_run = " << cfg.phys_source_run << "\n"
       << "source_amp_factor = " << fmt(cfg.phys_source_amp_factor) << "\n";
    return os.str();
}

Parameters params_of(const RunConfig& cfg) {
    return validate_params(cfg.p, cfg.beta, cfg.delta, cfg.gamma, cfg.d);
}

void resolved_domain(const RunConfig& cfg, double& L, int& n) {
    L = cfg.L > 0.0 ? cfg.L : (cfg.d == 1 ? 30.0 : 20.0);
    n = cfg.n > 0 ? cfg.n : (cfg.d == 1 ? 961 : 241);
}

}  // namespace cgl
