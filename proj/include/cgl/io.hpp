#ifndef CGL_IO_HPP
#define CGL_IO_HPP

#include <string>

#include "cgl/config.hpp"
#include "cgl/physical.hpp"
#include "cgl/rescaled.hpp"

namespace cgl {

std::string format_g17(double x);

// Scalar series CSV (columns in the fixed schema order).
void write_series_csv(const std::string& path, const std::vector<SeriesRow>& rows, int d);
std::vector<SeriesRow> read_series_csv(const std::string& path, int d);

void write_physical_series_csv(const std::string& path,
                               const std::vector<PhysicalSeriesRow>& rows, int d);

// Snapshot format: one UTF-8 JSON header line
//   {"d":..,"n":[..],"L":..,"tau":..,"t":..,"fields":["U","Theta"], ...}
// terminated by '\n', then the concatenated little-endian float64 arrays in
// listed order, row-major. Rescaled snapshots carry the modulation state in an
// extra "mod" header entry.
void write_rescaled_snapshot(const std::string& path, const Grid& grid,
                             const RescaledSnapshot& snap);
RescaledSnapshot read_rescaled_snapshot(const std::string& path, Grid& grid_out);

void write_physical_snapshot(const std::string& path, const Grid& grid,
                             const PhysicalSnapshot& snap);
PhysicalSnapshot read_physical_snapshot(const std::string& path, Grid& grid_out);

// Run metadata: required keys {config, constants, monitors, outcome}.
void write_meta(const std::string& dir, const RunConfig& cfg, const Parameters& params,
                const MonitorSummary& monitors, const std::string& outcome);

void ensure_output_dir(const std::string& dir, bool overwrite);

// Load a completed rescaled run (meta + series + snapshots).
RescaledRunData load_rescaled_run(const std::string& dir);

// Render the diagnostics report JSON for a run directory.
void write_report_json(const std::string& dir, const RescaledRunData& run);

}  // namespace cgl

#endif
