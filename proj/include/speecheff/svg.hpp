#ifndef SPEECHEFF_SVG_HPP
#define SPEECHEFF_SVG_HPP

// Reference SVG emission for the layouts. Output is byte-stable: every number
// is printed with six decimals and elements are emitted in layout order.

#include "layout.hpp"

#include <string>

namespace speecheff {

namespace svg {

inline std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s == "-0.000000") s = "0.000000";
    return s;
}

inline std::string escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string open(double x, double y, double w, double h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"" + num(x) + " " + num(y) + " " + num(w) +
           " " + num(h) + "\">\n";
}

inline const char* close() { return "</svg>\n"; }

} // namespace svg

inline std::string render_svg(const SpiralLayout& layout) {
    double extent = layout.params.start_radius() + layout.params.circle_r_max;
    for (const auto& c : layout.circles) extent = std::max(extent, c.polar_radius + c.radius);
    extent *= 1.05;
    std::string out = svg::open(-extent, -extent, 2.0 * extent, 2.0 * extent);
    if (layout.circles.size() > 1) {
        out += "<polyline fill=\"none\" stroke=\"#cccccc\" stroke-width=\"" + svg::num(0.1 * layout.params.circle_r_min) +
               "\" points=\"";
        for (std::size_t i = 0; i < layout.circles.size(); ++i) {
            if (i > 0) out += " ";
            out += svg::num(layout.circles[i].cx) + "," + svg::num(layout.circles[i].cy);
        }
        out += "\"/>\n";
    }
    for (const auto& c : layout.circles) {
        out += "<circle cx=\"" + svg::num(c.cx) + "\" cy=\"" + svg::num(c.cy) + "\" r=\"" + svg::num(c.radius) +
               "\" fill=\"" + c.color + "\" fill-opacity=\"" + svg::num(c.opacity) + "\" data-interval=\"" +
               std::to_string(c.interval_index) + "\" data-start=\"" + svg::num(c.start_s) + "\"/>\n";
    }
    out += svg::close();
    return out;
}

inline std::string render_svg(const ScriptLayout& layout) {
    const double width = std::max(layout.width, 1.0);
    std::string out = svg::open(0.0, 0.0, width, layout.height);
    for (const auto& g : layout.glyphs) {
        out += "<text x=\"" + svg::num(g.x) + "\" y=\"" + svg::num(g.y) + "\" font-size=\"" + svg::num(g.font_size) +
               "\" letter-spacing=\"" + svg::num(g.tracking) + "\" fill=\"" + g.color + "\" data-weight=\"" +
               svg::num(g.shape_weight) + "\">" + svg::escape(g.text) + "</text>\n";
    }
    out += svg::close();
    return out;
}

inline std::string render_svg(const TypeLayout& layout) {
    std::string out = svg::open(0.0, 0.0, layout.params.width, layout.params.height);
    for (const auto& r : layout.rects) {
        out += "<rect x=\"" + svg::num(r.x) + "\" y=\"" + svg::num(r.y_center - 0.5 * r.height) + "\" width=\"" +
               svg::num(r.width) + "\" height=\"" + svg::num(r.height) + "\" fill=\"" + r.color + "\"/>\n";
    }
    out += "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"1.000000\" points=\"";
    for (std::size_t i = 0; i < layout.polyline.size(); ++i) {
        if (i > 0) out += " ";
        out += svg::num(layout.polyline[i].first) + "," + svg::num(layout.polyline[i].second);
    }
    out += "\"/>\n";
    out += svg::close();
    return out;
}

inline std::string render_svg(const StripLayout& layout) {
    const double label_w = 90.0, plot_w = 600.0, row_h = 30.0, pad = 10.0;
    const double span = layout.domain_max - layout.domain_min;
    auto px = [&](double v) { return label_w + (span > 0.0 ? (v - layout.domain_min) / span : 0.5) * plot_w; };
    const double height = row_h * static_cast<double>(layout.rows.size()) + 2.0 * pad;
    std::string out = svg::open(0.0, 0.0, label_w + plot_w + pad, height);
    for (std::size_t i = 0; i < layout.rows.size(); ++i) {
        const StripRow& row = layout.rows[i];
        const double top = pad + row_h * static_cast<double>(i);
        const double mid = top + 0.5 * row_h;
        out += "<text x=\"" + svg::num(0.0) + "\" y=\"" + svg::num(mid) + "\" font-size=\"12.000000\">" +
               std::string(kLevelNames[static_cast<std::size_t>(row.level - 1)]) + "</text>\n";
        out += "<rect x=\"" + svg::num(px(row.x25)) + "\" y=\"" + svg::num(top + 4.0) + "\" width=\"" +
               svg::num(px(row.x75) - px(row.x25)) + "\" height=\"" + svg::num(row_h - 8.0) +
               "\" fill=\"#add8e6\" fill-opacity=\"0.600000\"/>\n";
        out += "<line x1=\"" + svg::num(px(row.median_x)) + "\" y1=\"" + svg::num(top + 2.0) + "\" x2=\"" +
               svg::num(px(row.median_x)) + "\" y2=\"" + svg::num(top + row_h - 2.0) +
               "\" stroke=\"#00008b\" stroke-width=\"2.000000\"/>\n";
        for (const auto& d : row.dots) {
            out += "<circle cx=\"" + svg::num(px(d.x)) + "\" cy=\"" + svg::num(mid) + "\" r=\"3.000000\" fill=\"" +
                   row.color + "\" data-id=\"" + svg::escape(d.speech_id) + "\"/>\n";
        }
    }
    out += svg::close();
    return out;
}

inline std::string render_svg(const DistributionLayout& layout) {
    const double w = 400.0, h = 200.0, pad = 10.0;
    const double lo = layout.xs.front(), hi = layout.xs.back();
    std::string out = svg::open(0.0, 0.0, w + 2.0 * pad, h + 2.0 * pad);
    out += "<line x1=\"" + svg::num(pad) + "\" y1=\"" + svg::num(pad + h) + "\" x2=\"" + svg::num(pad + w) + "\" y2=\"" +
           svg::num(pad + h) + "\" stroke=\"#000000\" stroke-width=\"1.000000\"/>\n";
    for (std::size_t l = 0; l < kLevelCount; ++l) {
        out += "<polyline fill=\"none\" stroke=\"" + layout.colors[l] + "\" stroke-width=\"2.000000\" data-level=\"" +
               std::to_string(l + 1) + "\" points=\"";
        for (std::size_t i = 0; i < layout.xs.size(); ++i) {
            if (i > 0) out += " ";
            const double x = pad + (layout.xs[i] - lo) / (hi - lo) * w;
            const double y = pad + (1.0 - layout.curves[l][i]) * h;
            out += svg::num(x) + "," + svg::num(y);
        }
        out += "\"/>\n";
    }
    out += svg::close();
    return out;
}

} // namespace speecheff

#endif // SPEECHEFF_SVG_HPP
