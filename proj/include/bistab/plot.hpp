#pragma once

// Minimal SVG line plots for decay diagnostics. Write-only.

#include <string>
#include <vector>

#include "bistab/spectral_core.hpp"

namespace bistab {

enum class PlotAxes {
    log_log,      // log10 t  vs log10 E
    loglog_log,   // log10 ln(1 + t) vs log10 E; C/ln(1+t)^2 is a line of slope -2
};

struct PlotSeries {
    std::string name;
    std::vector<Real> t;
    std::vector<Real> y;
    bool dashed = false;
};

struct PlotSpec {
    std::string title;
    PlotAxes axes = PlotAxes::log_log;
    std::vector<PlotSeries> series;
    /// Emits a generation-time comment; off for byte-identical output.
    bool timestamp = false;
};

/// Points with t <= 0 or y <= 0 are dropped (no log image).
std::string render_svg(const PlotSpec& spec);

}  // namespace bistab
