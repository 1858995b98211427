#include "tss/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "tss/common.hpp"

namespace fs = std::filesystem;

namespace tss {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

constexpr double kPanelWidth = 640.0;
constexpr double kPanelHeight = 220.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginTop = 30.0;
constexpr double kPanelGap = 40.0;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

struct Range {
    double lo = 0.0, hi = 1.0;
};

Range series_range(const std::vector<PlotSeries>& series, bool use_x) {
    Range r;
    bool first = true;
    for (const PlotSeries& s : series) {
        const std::vector<double>& v = use_x ? s.x : s.y;
        for (double x : v) {
            if (first) {
                r.lo = r.hi = x;
                first = false;
            } else {
                r.lo = std::min(r.lo, x);
                r.hi = std::max(r.hi, x);
            }
        }
    }
    if (r.hi - r.lo < 1e-12) {
        r.lo -= 1.0;
        r.hi += 1.0;
    }
    return r;
}

}  // namespace

std::string render_svg(const std::vector<PlotPanel>& panels, const std::string& x_label) {
    std::vector<std::string> legend;
    auto color_of = [&legend](const std::string& name) {
        for (size_t i = 0; i < legend.size(); ++i)
            if (legend[i] == name) return kPalette[i % kPaletteSize];
        legend.push_back(name);
        return kPalette[(legend.size() - 1) % kPaletteSize];
    };
    for (const PlotPanel& panel : panels)
        for (const PlotSeries& s : panel.series) color_of(s.name);

    const double width = kMarginLeft + kPanelWidth + 160.0;
    const double height =
        kMarginTop + panels.size() * (kPanelHeight + kPanelGap) + 30.0;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
        << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << " " << fmt(height) << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    double top = kMarginTop;
    for (const PlotPanel& panel : panels) {
        const Range xr = series_range(panel.series, true);
        const Range yr = series_range(panel.series, false);
        auto map_x = [&xr](double x) {
            return kMarginLeft + (x - xr.lo) / (xr.hi - xr.lo) * kPanelWidth;
        };
        auto map_y = [&yr, top](double y) {
            return top + kPanelHeight - (y - yr.lo) / (yr.hi - yr.lo) * kPanelHeight;
        };

        svg << "<rect x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(top) << "\" width=\""
            << fmt(kPanelWidth) << "\" height=\"" << fmt(kPanelHeight)
            << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
        svg << "<text x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(top - 8.0)
            << "\" font-family=\"sans-serif\" font-size=\"14\">" << panel.title << "</text>\n";
        svg << "<text x=\"18\" y=\"" << fmt(top + kPanelHeight / 2.0)
            << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 "
            << fmt(top + kPanelHeight / 2.0) << ")\" text-anchor=\"middle\">" << panel.y_label
            << "</text>\n";
        svg << "<text x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(top + kPanelHeight + 16.0)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(yr.lo) << " .. "
            << fmt(yr.hi) << "</text>\n";

        for (const PlotSeries& s : panel.series) {
            if (s.x.empty()) continue;
            svg << "<polyline fill=\"none\" stroke=\"" << color_of(s.name)
                << "\" stroke-width=\"1.5\" points=\"";
            for (size_t i = 0; i < s.x.size(); ++i) {
                if (i > 0) svg << " ";
                svg << fmt(map_x(s.x[i])) << "," << fmt(map_y(s.y[i]));
            }
            svg << "\"/>\n";
        }
        top += kPanelHeight + kPanelGap;
    }

    svg << "<text x=\"" << fmt(kMarginLeft + kPanelWidth / 2.0) << "\" y=\"" << fmt(top - 10.0)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << x_label
        << "</text>\n";

    double ly = kMarginTop + 10.0;
    const double lx = kMarginLeft + kPanelWidth + 20.0;
    for (size_t i = 0; i < legend.size(); ++i) {
        svg << "<rect x=\"" << fmt(lx) << "\" y=\"" << fmt(ly - 9.0)
            << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[i % kPaletteSize] << "\"/>\n";
        svg << "<text class=\"legend\" x=\"" << fmt(lx + 18.0) << "\" y=\"" << fmt(ly + 2.0)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << legend[i] << "</text>\n";
        ly += 20.0;
    }
    svg << "</svg>\n";
    return svg.str();
}

namespace {

struct LogTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }
};

LogTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    LogTable table;
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty log file " + path.string());
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) table.columns.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::vector<double> values;
        while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
        if (values.size() != table.columns.size())
            throw SchemaError("ragged row in " + path.string());
        table.rows.push_back(std::move(values));
    }
    return table;
}

}  // namespace

void plot_logs_to_svg(const std::string& logs_dir, const std::string& out_file) {
    if (!fs::is_directory(logs_dir)) throw SchemaError("log directory not found: " + logs_dir);

    // mode name -> per-seed tables
    std::map<std::string, std::vector<LogTable>> by_mode;
    for (const auto& entry : fs::recursive_directory_iterator(logs_dir)) {
        if (!entry.is_regular_file() || entry.path().filename() != "epochs.csv") continue;
        const fs::path rel = fs::relative(entry.path(), logs_dir);
        const std::string mode = rel.begin() == rel.end() || rel.begin()->string() == "epochs.csv"
                                     ? "run"
                                     : rel.begin()->string();
        by_mode[mode].push_back(read_csv(entry.path()));
    }
    if (by_mode.empty()) throw SchemaError("no epochs.csv found under " + logs_dir);

    const std::vector<std::string> required = {"epoch",  "l_cls",  "l_sm",      "l_aff",
                                               "l_cont", "l_pse",  "pseudo_acc"};
    PlotPanel acc_panel{"pseudo-label accuracy", "accuracy (%)", {}};
    PlotPanel loss_panel{"training losses (sum of terms)", "loss", {}};

    for (const auto& [mode, tables] : by_mode) {
        size_t max_epochs = 0;
        for (const LogTable& t : tables) {
            for (const std::string& col : required)
                if (t.column(col) < 0)
                    throw SchemaError("log for mode '" + mode + "' lacks column '" + col + "'");
            max_epochs = std::max(max_epochs, t.rows.size());
        }

        PlotSeries acc{mode, {}, {}};
        PlotSeries loss{mode, {}, {}};
        for (size_t e = 0; e < max_epochs; ++e) {
            double acc_sum = 0.0, loss_sum = 0.0;
            int n = 0;
            for (const LogTable& t : tables) {
                if (e >= t.rows.size()) continue;
                const std::vector<double>& row = t.rows[e];
                acc_sum += row[static_cast<size_t>(t.column("pseudo_acc"))];
                for (const char* col : {"l_cls", "l_sm", "l_aff", "l_cont", "l_pse"})
                    loss_sum += row[static_cast<size_t>(t.column(col))];
                ++n;
            }
            acc.x.push_back(static_cast<double>(e));
            acc.y.push_back(acc_sum / n);
            loss.x.push_back(static_cast<double>(e));
            loss.y.push_back(loss_sum / n);
        }
        acc_panel.series.push_back(std::move(acc));
        loss_panel.series.push_back(std::move(loss));
    }

    const std::string svg = render_svg({acc_panel, loss_panel}, "epoch");
    std::ofstream out(out_file);
    if (!out) throw IoError("cannot write " + out_file);
    out << svg;
    if (!out) throw IoError("failed writing " + out_file);
}

}  // namespace tss
