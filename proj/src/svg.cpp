#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace robusttd::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
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

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

constexpr double kPanelW = 460, kPanelH = 340, kLeft = 70, kRight = 20, kTop = 50, kBottom = 50;

void draw_panel(std::ostringstream& out, const LinePanel& panel, double ox, double oy) {
    auto tx = [&](double x) { return panel.log_x ? std::log10(std::max(x, 1e-300)) : x; };
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const Series& s : panel.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, s.mean[i] - s.half_width[i]);
            ymax = std::max(ymax, s.mean[i] + s.half_width[i]);
        }
    if (!(xmin <= xmax)) xmin = 0, xmax = 1;
    if (!(ymin <= ymax)) ymin = 0, ymax = 1;
    if (xmax - xmin < 1e-12) xmin -= 0.5, xmax += 0.5;
    if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;

    const double pw = kPanelW - kLeft - kRight, ph = kPanelH - kTop - kBottom;
    auto px = [&](double x) { return ox + kLeft + (tx(x) - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return oy + kTop + (ymax - y) / (ymax - ymin) * ph; };

    out << "<text x=\"" << num(ox + kPanelW / 2) << "\" y=\"" << num(oy + 30)
        << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(panel.title) << "</text>\n";
    out << "<rect x=\"" << num(ox + kLeft) << "\" y=\"" << num(oy + kTop) << "\" width=\"" << num(pw)
        << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double yv = ymin + (ymax - ymin) * i / 4.0;
        out << "<text x=\"" << num(ox + kLeft - 6) << "\" y=\"" << num(py(yv) + 4)
            << "\" text-anchor=\"end\" font-size=\"10\">" << tick_label(yv) << "</text>\n";
        const double xt = xmin + (xmax - xmin) * i / 4.0;
        const double xv = panel.log_x ? std::pow(10.0, xt) : xt;
        out << "<text x=\"" << num(ox + kLeft + pw * i / 4.0) << "\" y=\"" << num(oy + kTop + ph + 16)
            << "\" text-anchor=\"middle\" font-size=\"10\">" << tick_label(xv) << "</text>\n";
    }
    out << "<text x=\"" << num(ox + kLeft + pw / 2) << "\" y=\"" << num(oy + kPanelH - 8)
        << "\" text-anchor=\"middle\" font-size=\"12\">" << escape(panel.xlabel + (panel.log_x ? " (log)" : ""))
        << "</text>\n";
    out << "<text x=\"" << num(ox + 16) << "\" y=\"" << num(oy + kTop + ph / 2) << "\" font-size=\"12\" "
        << "text-anchor=\"middle\" transform=\"rotate(-90 " << num(ox + 16) << ' ' << num(oy + kTop + ph / 2)
        << ")\">" << escape(panel.ylabel) << "</text>\n";

    for (std::size_t k = 0; k < panel.series.size(); ++k) {
        const Series& s = panel.series[k];
        const char* color = kPalette[k % std::size(kPalette)];
        std::vector<std::size_t> order(s.x.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
        out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
        for (std::size_t i : order) out << num(px(s.x[i])) << ',' << num(py(s.mean[i] + s.half_width[i])) << ' ';
        for (auto it = order.rbegin(); it != order.rend(); ++it)
            out << num(px(s.x[*it])) << ',' << num(py(s.mean[*it] - s.half_width[*it])) << ' ';
        out << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i : order) out << num(px(s.x[i])) << ',' << num(py(s.mean[i])) << ' ';
        out << "\"/>\n";
        for (std::size_t i : order)
            out << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.mean[i])) << "\" r=\"2.5\" fill=\""
                << color << "\"/>\n";
        const double ly = oy + kTop + 14 + 14.0 * static_cast<double>(k);
        out << "<line x1=\"" << num(ox + kLeft + 8) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(ox + kLeft + 24)
            << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << num(ox + kLeft + 28) << "\" y=\"" << num(ly) << "\" font-size=\"10\">"
            << escape(s.name) << "</text>\n";
    }
}

} // namespace

std::string line_charts(const std::string& title, const std::vector<LinePanel>& panels) {
    const double width = kPanelW * static_cast<double>(std::max<std::size_t>(1, panels.size()));
    const double height = kPanelH + 30;
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
        << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"10\" y=\"20\" font-size=\"16\">" << escape(title) << "</text>\n";
    for (std::size_t i = 0; i < panels.size(); ++i) draw_panel(out, panels[i], kPanelW * static_cast<double>(i), 20);
    out << "</svg>\n";
    return out.str();
}

std::string heatmaps(const GridMap& map, const std::vector<HeatPanel>& panels) {
    const double cell = 32, margin = 20, top = 50;
    const double pw = cell * map.width() + 2 * margin;
    const double width = pw * static_cast<double>(std::max<std::size_t>(1, panels.size()));
    const double height = top + cell * map.height() + margin;
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
        << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\">\n"
        << "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"5\" "
        << "markerHeight=\"5\" orient=\"auto-start-reverse\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#111\"/>"
        << "</marker></defs>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (std::size_t k = 0; k < panels.size(); ++k) {
        const HeatPanel& p = panels[k];
        const double ox = pw * static_cast<double>(k) + margin;
        double peak = 0.0;
        for (double v : p.visits) peak = std::max(peak, v);
        out << "<text x=\"" << num(ox + cell * map.width() / 2) << "\" y=\"" << num(top - 16)
            << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(p.title) << "</text>\n";
        for (int r = 0; r < map.height(); ++r)
            for (int c = 0; c < map.width(); ++c) {
                const Cell here{r, c};
                std::string fill;
                if (map.is_hazard(here)) {
                    fill = "#7a1f1f";
                } else {
                    const std::size_t s = static_cast<std::size_t>(r * map.width() + c);
                    const double v = s < p.visits.size() ? p.visits[s] : 0.0;
                    const double t = peak > 0 ? std::log1p(v) / std::log1p(peak) : 0.0;
                    const int shade = static_cast<int>(std::lround(255 - 200 * t));
                    char buf[16];
                    std::snprintf(buf, sizeof buf, "#%02x%02xff", shade, shade);
                    fill = buf;
                }
                out << "<rect x=\"" << num(ox + cell * c) << "\" y=\"" << num(top + cell * r) << "\" width=\""
                    << num(cell) << "\" height=\"" << num(cell) << "\" fill=\"" << fill
                    << "\" stroke=\"#ccc\" stroke-width=\"0.5\"/>\n";
            }
        for (auto [cellpos, label] : {std::pair{map.start(), "S"}, std::pair{map.goal(), "G"}})
            out << "<text x=\"" << num(ox + cell * (cellpos.col + 0.5)) << "\" y=\"" << num(top + cell * (cellpos.row + 0.5) + 5)
                << "\" text-anchor=\"middle\" font-size=\"14\" font-weight=\"bold\">" << label << "</text>\n";
        for (std::size_t i = 1; i < p.path.size(); ++i) {
            const Cell a = p.path[i - 1], b = p.path[i];
            if (a == b) continue;
            out << "<line x1=\"" << num(ox + cell * (a.col + 0.5)) << "\" y1=\"" << num(top + cell * (a.row + 0.5))
                << "\" x2=\"" << num(ox + cell * (b.col + 0.5)) << "\" y2=\"" << num(top + cell * (b.row + 0.5))
                << "\" stroke=\"#111\" stroke-width=\"2\" marker-end=\"url(#arrow)\"/>\n";
        }
    }
    out << "</svg>\n";
    return out.str();
}

} // namespace robusttd::svg
