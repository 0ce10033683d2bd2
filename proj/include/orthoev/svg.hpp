#pragma once

// Minimal static SVG line plots built from CSV tables.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "orthoev/io.hpp"

namespace orthoev {

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotOptions {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool log_x = false;
    std::optional<double> hline;  // e.g. an R-hat threshold
    int width = 640;
    int height = 420;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string tick_label(double v) {
    std::ostringstream ss;
    ss << std::setprecision(4) << v;
    return ss.str();
}

}  // namespace detail

inline std::string svg_line_plot(const std::vector<PlotSeries>& series, const PlotOptions& opt) {
    static const char* palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                    "#66a61e", "#e6ab02", "#a6761d", "#666666"};
    const double left = 70, right = 150, top = 36, bottom = 50;
    const double pw = opt.width - left - right, ph = opt.height - top - bottom;
    const auto tx = [&](double x) { return opt.log_x ? std::log10(x) : x; };

    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || !std::isfinite(tx(s.x[i]))) continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (opt.hline) {
        ymin = std::min(ymin, *opt.hline);
        ymax = std::max(ymax, *opt.hline);
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    const auto px = [&](double x) { return left + (tx(x) - xmin) / (xmax - xmin) * pw; };
    const auto py = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << left + pw / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << detail::xml_escape(opt.title) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        const double xv = opt.log_x ? std::pow(10.0, fx) : fx;
        const double sx = left + pw * i / 4.0, sy = top + ph * (1.0 - i / 4.0);
        o << "<text x=\"" << sx << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
          << detail::tick_label(xv) << "</text>\n";
        o << "<text x=\"" << left - 6 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">" << detail::tick_label(fy)
          << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << opt.height - 10 << "\" text-anchor=\"middle\">"
      << detail::xml_escape(opt.xlabel) << "</text>\n";
    o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << top + ph / 2 << ")\">" << detail::xml_escape(opt.ylabel) << "</text>\n";
    if (opt.hline)
        o << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << py(*opt.hline) << "\" y2=\""
          << py(*opt.hline) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* col = palette[k % 8];
        o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.y[i]) && std::isfinite(tx(s.x[i]))) o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        o << "\"/>\n";
        const double ly = top + 14 + 16.0 * static_cast<double>(k);
        o << "<line x1=\"" << left + pw + 10 << "\" x2=\"" << left + pw + 30 << "\" y1=\"" << ly - 4 << "\" y2=\""
          << ly - 4 << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << left + pw + 34 << "\" y=\"" << ly << "\">" << detail::xml_escape(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

/// One SVG per value of `facet` (if given), one line per value of `group`.
inline std::vector<std::filesystem::path> plot_csv(const std::filesystem::path& csv, const std::string& x_col,
                                                   const std::string& y_col, const std::string& group,
                                                   const std::string& facet, const std::filesystem::path& out_prefix,
                                                   PlotOptions opt) {
    const CsvTable t = read_csv_table(csv);
    const auto xs = t.numbers(x_col);
    const auto ys = t.numbers(y_col);
    const std::size_t g = group.empty() ? 0 : t.column(group);
    const std::size_t f = facet.empty() ? 0 : t.column(facet);
    std::map<std::string, std::map<std::string, PlotSeries>> panels;
    std::vector<std::string> facet_order;
    std::map<std::string, std::vector<std::string>> group_order;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string fk = facet.empty() ? "" : t.rows[r][f];
        const std::string gk = group.empty() ? y_col : t.rows[r][g];
        if (!panels.count(fk)) facet_order.push_back(fk);
        auto& panel = panels[fk];
        if (!panel.count(gk)) group_order[fk].push_back(gk);
        auto& s = panel[gk];
        s.name = gk;
        s.x.push_back(xs[r]);
        s.y.push_back(ys[r]);
    }
    std::vector<std::filesystem::path> written;
    const std::string base_title = opt.title;
    for (const auto& fk : facet_order) {
        std::vector<PlotSeries> series;
        for (const auto& gk : group_order[fk]) series.push_back(panels[fk][gk]);
        opt.title = fk.empty() ? base_title : base_title + " (" + fk + ")";
        auto path = out_prefix;
        path += fk.empty() ? ".svg" : "_" + fk + ".svg";
        auto out = open_output(path);
        out << svg_line_plot(series, opt);
        written.push_back(path);
    }
    return written;
}

}  // namespace orthoev
