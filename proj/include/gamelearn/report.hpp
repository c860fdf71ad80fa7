#pragma once

#include <ostream>
#include <string>

#include "gamelearn/experiment.hpp"
#include "gamelearn/worth_field.hpp"

namespace gamelearn {

// Per-iteration CSV: n, covered, potential, estimated, active, diagnostic,
// then x_i, y_i per robot. Row 0 is the initial configuration. Values use
// %.17g so identical runs give identical files.
void write_run_csv(std::ostream& out, const RunRecord& record);

// One row per iteration and config: config, label, n, mean, low, high.
void write_band_csv(std::ostream& out, const SweepResult& result);

// One row per cell: config, label, algorithm, seed, iterations, final covered,
// steady, error. Wall time is left out on purpose (it is not reproducible).
void write_sweep_summary_csv(std::ostream& out, const SweepResult& result);

// x, y, value for every cell.
void write_raster_csv(std::ostream& out, const WorthField& field);

// Mean covered worth with min/max shading, one series per config.
std::string band_svg(const SweepResult& result, const std::string& title);

// Heatmap of the field with each robot's flags and final position.
std::string field_svg(const WorthField& field, const RunRecord* record, const std::string& title);

std::string format_double(double v);

}  // namespace gamelearn
