#ifndef CGL_RUN_HPP
#define CGL_RUN_HPP

#include "cgl/config.hpp"
#include "cgl/diagnostics.hpp"
#include "cgl/io.hpp"

namespace cgl {

// Initial data evaluators resolved from a config (after the H_scale parabolic
// prescale, if requested).
struct InitialData {
    SpatialFn u0;
    SpatialFn theta0;
    std::vector<double> V_guess;
    double fd_scale = 1e-2;  // differencing scale for the maximizer seed search
};

InitialData raw_initial_data_from_config(const RunConfig& cfg, const Parameters& params,
                                         const Grid& grid);
InitialData apply_H_scale(const RunConfig& cfg, const Parameters& params, const Grid& grid,
                          const InitialData& raw);
InitialData initial_data_from_config(const RunConfig& cfg, const Parameters& params,
                                     const Grid& grid);

// Run loop with explicit initial-data evaluators (used by the stability experiment).
RescaledRunData run_rescaled_with_data(const RunConfig& cfg, const InitialData& init,
                                       bool write_output);

// Full rescaled run. Writes series.csv, snapshots/ and meta.json under cfg.dir
// when write_output is set; always returns the in-memory artifacts.
RescaledRunData run_rescaled(const RunConfig& cfg, bool write_output = true);

// Physical run configured by the [physical] section (psi0 from constant,
// gaussian, or a rescaled-run reconstruction).
PhysicalRunResult run_physical(const RunConfig& cfg, bool write_output = true);

InitialDataReport validate_from_config(const RunConfig& cfg);

// Paired-run stability experiment: the base data versus base + a profile-shaped
// Gaussian bump amplitude * Ubar(z) exp(-|z|^2/width^2).
struct PerturbationSpec {
    double amplitude = 1e-3;
    double width = 1.0;
};

struct StabilityReport {
    InitialDataReport base_validation, pert_validation;
    bool pert_validation_failed = false;
    RescaledRunData base, pert;
    double That_base = 0.0, That_pert = 0.0;
    double dThat_rel = 0.0;
    double err_complex_base = 0.0, err_complex_pert = 0.0;  // final profile errors
};

StabilityReport stability_experiment(const RunConfig& base_cfg, const PerturbationSpec& pert);

// Final extrapolated blowup time of a run (last healthy series row).
double extrapolated_blowup_time(const RescaledRunData& run);

}  // namespace cgl

#endif
