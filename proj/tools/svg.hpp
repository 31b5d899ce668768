#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace spillover::cli {

/// Minimal SVG scatter canvas with data-space coordinates. Numbers are
/// printed with fixed precision so output is stable across runs.
class SvgPlot {
public:
    SvgPlot(double xmin, double xmax, double ymin, double ymax, std::string title)
        : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax), title_(std::move(title)) {
        if (!(xmax_ > xmin_)) xmax_ = xmin_ + 1.0;
        if (!(ymax_ > ymin_)) ymax_ = ymin_ + 1.0;
    }

    /// Bounds from a point cloud with a 5% margin.
    static std::array<double, 4> bounds(const std::vector<std::array<double, 2>>& pts) {
        double x0 = pts.front()[0], x1 = x0, y0 = pts.front()[1], y1 = y0;
        for (const auto& p : pts) {
            x0 = std::min(x0, p[0]);
            x1 = std::max(x1, p[0]);
            y0 = std::min(y0, p[1]);
            y1 = std::max(y1, p[1]);
        }
        const double px = 0.05 * std::max(x1 - x0, 1e-9);
        const double py = 0.05 * std::max(y1 - y0, 1e-9);
        return {x0 - px, x1 + px, y0 - py, y1 + py};
    }

    [[nodiscard]] double sx(double x) const { return kPad + (x - xmin_) / (xmax_ - xmin_) * kSize; }
    [[nodiscard]] double sy(double y) const { return kPad + kSize - (y - ymin_) / (ymax_ - ymin_) * kSize; }

    void comment(const std::string& text) { comments_ += text; }

    void circle(double x, double y, double r, const std::string& fill, const std::string& stroke = "none") {
        body_ += fmt("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\" stroke=\"%s\"/>\n", sx(x), sy(y), r,
                     fill.c_str(), stroke.c_str());
    }

    void ring(double x, double y, double r, const std::string& stroke) {
        body_ += fmt("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"none\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                     sx(x), sy(y), r, stroke.c_str());
    }

    void square(double x, double y, double half, const std::string& fill) {
        body_ += fmt("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\" stroke=\"black\"/>\n",
                     sx(x) - half, sy(y) - half, 2 * half, 2 * half, fill.c_str());
    }

    void triangle(double x, double y, double half, const std::string& fill) {
        const double cx = sx(x), cy = sy(y);
        body_ += fmt("<polygon points=\"%.2f,%.2f %.2f,%.2f %.2f,%.2f\" fill=\"%s\" stroke=\"black\"/>\n", cx,
                     cy - half, cx - half, cy + half, cx + half, cy + half, fill.c_str());
    }

    void cross(double x, double y, double half, const std::string& stroke) {
        const double cx = sx(x), cy = sy(y);
        body_ += fmt("<path d=\"M%.2f %.2fL%.2f %.2fM%.2f %.2fL%.2f %.2f\" stroke=\"%s\" stroke-width=\"3\"/>\n",
                     cx - half, cy - half, cx + half, cy + half, cx - half, cy + half, cx + half, cy - half,
                     stroke.c_str());
    }

    void line(double x0, double y0, double x1, double y1, const std::string& stroke, bool dashed = false) {
        body_ += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" stroke-width=\"1.5\"%s/>\n",
                     sx(x0), sy(y0), sx(x1), sy(y1), stroke.c_str(), dashed ? " stroke-dasharray=\"4 3\"" : "");
    }

    void rect(double x0, double y0, double x1, double y1, const std::string& stroke) {
        body_ += fmt("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"none\" stroke=\"%s\" "
                     "stroke-dasharray=\"4 3\"/>\n",
                     sx(x0), sy(y1), sx(x1) - sx(x0), sy(y0) - sy(y1), stroke.c_str());
    }

    void path(const std::string& d, const std::string& stroke) {
        if (d.empty()) return;
        body_ += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n";
    }

    void legend(const std::vector<std::pair<std::string, std::string>>& entries) {
        double y = kPad + 14;
        for (const auto& [color, label] : entries) {
            body_ += fmt("<rect x=\"%.2f\" y=\"%.2f\" width=\"10\" height=\"10\" fill=\"%s\"/>\n", kPad + kSize + 12, y - 9,
                         color.c_str());
            body_ += fmt("<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\">", kPad + kSize + 28, y) + escape(label) + "</text>\n";
            y += 18;
        }
    }

    [[nodiscard]] std::string str() const {
        std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        if (!comments_.empty()) s += "<!--\n" + comments_ + "-->\n";
        s += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\">\n", kWidth, kHeight);
        s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        s += fmt("<text x=\"%.2f\" y=\"24\" font-size=\"15\">", kPad) + escape(title_) + "</text>\n";
        s += fmt("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"none\" stroke=\"#888\"/>\n", kPad, kPad,
                 kSize, kSize);
        s += fmt("<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\">%.3g</text>\n", kPad, kPad + kSize + 16, xmin_);
        s += fmt("<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"end\">%.3g</text>\n", kPad + kSize,
                 kPad + kSize + 16, xmax_);
        s += fmt("<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"end\">%.3g</text>\n", kPad - 4, kPad + kSize, ymin_);
        s += fmt("<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"end\">%.3g</text>\n", kPad - 4, kPad + 10, ymax_);
        return s + body_ + "</svg>\n";
    }

    template <typename... A>
    static std::string fmt(const char* f, A... args) {
        char buf[512];
        std::snprintf(buf, sizeof buf, f, args...);
        return buf;
    }

private:
    static constexpr double kPad = 50.0;
    static constexpr double kSize = 420.0;
    static constexpr int kWidth = 680;
    static constexpr int kHeight = 520;

    static std::string escape(const std::string& s) {
        std::string out;
        for (const char c : s) {
            if (c == '<')
                out += "&lt;";
            else if (c == '>')
                out += "&gt;";
            else if (c == '&')
                out += "&amp;";
            else
                out += c;
        }
        return out;
    }

    double xmin_, xmax_, ymin_, ymax_;
    std::string title_;
    std::string body_;
    std::string comments_;
};

/// Marching squares over a res x res grid on the plot's data bounds; returns
/// SVG path data ("M..L..") for the iso-line f = level.
inline std::string iso_line(const SvgPlot& plot, const std::function<double(double, double)>& f, double level,
                            std::array<double, 4> b, int res) {
    std::vector<double> grid(static_cast<std::size_t>((res + 1) * (res + 1)));
    const auto gx = [&](int i) { return b[0] + (b[1] - b[0]) * i / res; };
    const auto gy = [&](int j) { return b[2] + (b[3] - b[2]) * j / res; };
    const auto at = [&](int i, int j) -> double& { return grid[static_cast<std::size_t>(j * (res + 1) + i)]; };
    for (int j = 0; j <= res; ++j)
        for (int i = 0; i <= res; ++i) at(i, j) = f(gx(i), gy(j));

    std::string d;
    const auto lerp = [&](double x0, double y0, double v0, double x1, double y1, double v1) {
        const double t = (v1 == v0) ? 0.5 : (level - v0) / (v1 - v0);
        return std::array<double, 2>{x0 + t * (x1 - x0), y0 + t * (y1 - y0)};
    };
    const auto seg = [&](std::array<double, 2> p, std::array<double, 2> q) {
        d += SvgPlot::fmt("M%.2f %.2fL%.2f %.2f", plot.sx(p[0]), plot.sy(p[1]), plot.sx(q[0]), plot.sy(q[1]));
    };
    for (int j = 0; j < res; ++j) {
        for (int i = 0; i < res; ++i) {
            const double x0 = gx(i), x1 = gx(i + 1), y0 = gy(j), y1 = gy(j + 1);
            const double v00 = at(i, j), v10 = at(i + 1, j), v11 = at(i + 1, j + 1), v01 = at(i, j + 1);
            const int c = (v00 >= level ? 1 : 0) | (v10 >= level ? 2 : 0) | (v11 >= level ? 4 : 0) | (v01 >= level ? 8 : 0);
            if (c == 0 || c == 15) continue;
            const auto bottom = [&] { return lerp(x0, y0, v00, x1, y0, v10); };
            const auto right = [&] { return lerp(x1, y0, v10, x1, y1, v11); };
            const auto top = [&] { return lerp(x0, y1, v01, x1, y1, v11); };
            const auto left = [&] { return lerp(x0, y0, v00, x0, y1, v01); };
            const bool center_high = 0.25 * (v00 + v10 + v11 + v01) >= level;
            switch (c) {
                case 1: case 14: seg(left(), bottom()); break;
                case 2: case 13: seg(bottom(), right()); break;
                case 3: case 12: seg(left(), right()); break;
                case 4: case 11: seg(right(), top()); break;
                case 6: case 9: seg(bottom(), top()); break;
                case 7: case 8: seg(left(), top()); break;
                case 5:
                    if (center_high) { seg(left(), top()); seg(bottom(), right()); }
                    else { seg(left(), bottom()); seg(right(), top()); }
                    break;
                case 10:
                    if (center_high) { seg(left(), bottom()); seg(right(), top()); }
                    else { seg(left(), top()); seg(bottom(), right()); }
                    break;
                default: break;
            }
        }
    }
    return d;
}

}  // namespace spillover::cli
