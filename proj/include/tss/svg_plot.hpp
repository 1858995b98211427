#pragma once
// Static SVG line charts for training logs: no plotting dependency, plain
// polylines with a shared legend.

#include <string>
#include <vector>

namespace tss {

struct PlotSeries {
    std::string name;  // legend entry; series with the same name share a color
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotPanel {
    std::string title;
    std::string y_label;
    std::vector<PlotSeries> series;
};

// Complete SVG document with stacked panels and one legend entry per unique
// series name.
std::string render_svg(const std::vector<PlotPanel>& panels, const std::string& x_label);

// Reads every epochs.csv under logs_dir (layout <mode>/seed_*/epochs.csv),
// seed-averages pseudo_acc and the summed loss columns per mode, and writes
// an SVG chart. Throws SchemaError when no logs or required columns are found.
void plot_logs_to_svg(const std::string& logs_dir, const std::string& out_file);

}  // namespace tss
