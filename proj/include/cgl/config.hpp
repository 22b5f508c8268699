#ifndef CGL_CONFIG_HPP
#define CGL_CONFIG_HPP

#include <string>
#include <vector>

#include "cgl/params.hpp"

namespace cgl {

// INI-style run configuration. Unknown keys are rejected; all defaults are
// embedded in run metadata via the canonical serializer.
struct RunConfig {
    // [model]
    double p = 2.0;
    double beta = 0.0;
    double delta = 0.0;
    double gamma = 0.0;
    int d = 1;

    // [domain]   (0 means "default for this dimension": d=1 -> L=30, n=961; d=2 -> L=20, n=241)
    double L = 0.0;
    int n = 0;

    // [time]
    double dtau_max = 0.01;
    double tau_end = 50.0;
    double report_every = 0.5;
    std::vector<double> snapshot_taus;

    // [initial]
    std::string kind = "profile_scaled";  // profile_scaled | gaussian | file
    double amplitude = 1.5;
    double width = 2.0;
    std::vector<double> shift;
    double theta_const = 0.0;
    double H_scale = 0.0;  // target H(0)^{p-1}; 0 disables the parabolic prescale
    std::string u0_file;
    std::string theta0_file;

    // [diagnostics]
    int k_top = 4;
    double nu = 0.1;
    double nu1 = 0.1;
    double nu2 = 0.01;
    double tol_norm = 1e-6;
    int N_proj = 10;

    // [output]
    std::string dir = "run_out";
    bool overwrite = false;

    // [physical]
    double phys_L = 10.0;
    int phys_n = 641;
    double phys_t_end = 1.0;
    double phys_amp_stop = 1e6;
    bool phys_periodic = false;
    std::string phys_kind = "constant";  // constant | gaussian | from_rescaled
    double phys_amplitude = 1.0;
    double phys_width = 1.0;
    std::string phys_source_run;
    double phys_source_amp_factor = 2.0;
};

RunConfig parse_config(const std::string& text);
std::string serialize_config(const RunConfig& cfg);

Parameters params_of(const RunConfig& cfg);
void resolved_domain(const RunConfig& cfg, double& L, int& n);

}  // namespace cgl

#endif
