#pragma once

#include <string>
#include <vector>

#include "guidelab/models.hpp"

namespace guidelab::plots {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> y_err;  // optional half-widths of error bars
};

struct Panel {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool markers = true;  // point markers on line series
    bool scatter = false; // points only, no polyline
    std::vector<Series> series;
};

/// Renders panels side by side into one SVG document. Output depends only on
/// the data (fixed number formatting, no timestamps).
std::string render(const std::vector<Panel>& panels, int panel_width = 420, int panel_height = 320);

// Normalized histogram of axis 0 as a step-free polyline through bin centres.
Series density_series(const std::string& label, const std::vector<Vec>& samples, double lo, double hi, int bins);

// Exact density of a 1-D mixture at signal level t on a uniform grid.
Series gmm_density_series(const std::string& label, const IsotropicGmm& m, double t, double lo, double hi,
                          int points);

Series scatter_series(const std::string& label, const std::vector<Vec>& samples);

}  // namespace guidelab::plots
