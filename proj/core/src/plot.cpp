#include "vortexscore/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include "vortexscore/error.hpp"

namespace vortexscore {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

std::string fmt(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string escape(const std::string& s) {
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

/// Round step for about `target` ticks over [lo, hi].
double nice_step(double lo, double hi, int target) {
    const double raw = (hi - lo) / target;
    if (!(raw > 0.0)) return 1.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) return m * mag;
    return 10.0 * mag;
}

struct Axes {
    double x0, x1, y0, y1;
    double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void frame(std::ostringstream& os, const Axes& ax, const std::string& xlabel, const std::string& ylabel,
           const std::string& title) {
    os << "<rect x=\"0\" y=\"0\" width=\"" << fmt(kWidth, 0) << "\" height=\"" << fmt(kHeight, 0)
       << "\" fill=\"white\"/>\n";
    os << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\"" << fmt(kWidth - kLeft - kRight)
       << "\" height=\"" << fmt(kHeight - kTop - kBottom) << "\" fill=\"none\" stroke=\"black\"/>\n";
    const double xs = nice_step(ax.x0, ax.x1, 8);
    for (double x = std::ceil(ax.x0 / xs) * xs; x <= ax.x1 + 1e-9 * xs; x += xs) {
        const double p = ax.px(x);
        os << "<line x1=\"" << fmt(p) << "\" y1=\"" << fmt(kHeight - kBottom) << "\" x2=\"" << fmt(p) << "\" y2=\""
           << fmt(kHeight - kBottom + 5) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << fmt(p) << "\" y=\"" << fmt(kHeight - kBottom + 20)
           << "\" font-size=\"12\" text-anchor=\"middle\">" << fmt(x, xs < 1 ? 2 : 0) << "</text>\n";
    }
    const double ys = nice_step(ax.y0, ax.y1, 6);
    const int ydig = ys >= 1 ? 0 : static_cast<int>(std::ceil(-std::log10(ys)));
    for (double y = std::ceil(ax.y0 / ys) * ys; y <= ax.y1 + 1e-9 * ys; y += ys) {
        const double p = ax.py(y);
        os << "<line x1=\"" << fmt(kLeft - 5) << "\" y1=\"" << fmt(p) << "\" x2=\"" << fmt(kLeft) << "\" y2=\""
           << fmt(p) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(p + 4)
           << "\" font-size=\"12\" text-anchor=\"end\">" << fmt(y, ydig) << "</text>\n";
    }
    os << "<text x=\"" << fmt((kLeft + kWidth - kRight) / 2) << "\" y=\"" << fmt(kHeight - 12)
       << "\" font-size=\"14\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n";
    os << "<text x=\"16\" y=\"" << fmt((kTop + kHeight - kBottom) / 2)
       << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << fmt((kTop + kHeight - kBottom) / 2) << ")\">" << escape(ylabel) << "</text>\n";
    if (!title.empty())
        os << "<text x=\"" << fmt(kWidth / 2) << "\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">"
           << escape(title) << "</text>\n";
}

const char* kPalette[] = {"#d62728", "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

std::string render_results_svg(std::span<const ResultsRow> rows, const std::string& title) {
    if (rows.empty()) throw SchemaError("no result rows to plot");

    // series key: component, then flow kind / nu when more than one group is present
    std::map<std::string, std::vector<const ResultsRow*>> series;
    std::map<std::pair<std::string, double>, int> groups;
    for (const auto& r : rows) groups[{r.flow_kind, r.nu}] = 0;
    for (const auto& r : rows) {
        std::string key = r.component;
        if (groups.size() > 1) key += " (" + r.flow_kind + ", nu=" + fmt(r.nu, r.nu < 0.1 ? 3 : 2) + ")";
        series[key].push_back(&r);
    }

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymax = 0.0;
    for (const auto& r : rows) {
        xmin = std::min(xmin, r.s);
        xmax = std::max(xmax, r.s);
        const double err = std::isfinite(r.std) ? r.std : 0.0;
        if (std::isfinite(r.mean_rel_mae)) ymax = std::max(ymax, r.mean_rel_mae + err);
    }
    if (xmax == xmin) {
        xmin -= 1.0;
        xmax += 1.0;
    } else {
        const double pad = 0.05 * (xmax - xmin);
        xmin -= pad;
        xmax += pad;
    }
    if (!(ymax > 0.0)) ymax = 1.0;
    const Axes ax{xmin, xmax, 0.0, ymax * 1.1};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth, 0) << "\" height=\"" << fmt(kHeight, 0)
       << "\" viewBox=\"0 0 " << fmt(kWidth, 0) << " " << fmt(kHeight, 0) << "\">\n";
    frame(os, ax, "s", "relative MAE", title);

    int idx = 0;
    for (auto& [name, pts] : series) {
        std::sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->s < b->s; });
        const char* color = kPalette[idx % 8];
        os << "<g fill=\"none\" stroke=\"" << color << "\">\n";
        if (pts.size() > 1) {
            os << "<polyline stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < pts.size(); ++i)
                os << (i ? " " : "") << fmt(ax.px(pts[i]->s)) << "," << fmt(ax.py(pts[i]->mean_rel_mae));
            os << "\"/>\n";
        }
        for (const auto* p : pts) {
            const double x = ax.px(p->s);
            const double err = std::isfinite(p->std) ? p->std : 0.0;
            const double lo = ax.py(std::max(0.0, p->mean_rel_mae - err));
            const double hi = ax.py(p->mean_rel_mae + err);
            os << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(lo) << "\" x2=\"" << fmt(x) << "\" y2=\"" << fmt(hi)
               << "\"/>\n";
            os << "<line x1=\"" << fmt(x - 4) << "\" y1=\"" << fmt(lo) << "\" x2=\"" << fmt(x + 4) << "\" y2=\""
               << fmt(lo) << "\"/>\n";
            os << "<line x1=\"" << fmt(x - 4) << "\" y1=\"" << fmt(hi) << "\" x2=\"" << fmt(x + 4) << "\" y2=\""
               << fmt(hi) << "\"/>\n";
            os << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(ax.py(p->mean_rel_mae)) << "\" r=\"3\" fill=\""
               << color << "\"/>\n";
        }
        os << "</g>\n";
        const double ly = kTop + 16 + 18 * idx;
        os << "<line x1=\"" << fmt(kWidth - kRight - 150) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
           << fmt(kWidth - kRight - 130) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << fmt(kWidth - kRight - 125) << "\" y=\"" << fmt(ly) << "\" font-size=\"12\">"
           << escape(name) << "</text>\n";
        ++idx;
    }
    os << "</svg>\n";
    return os.str();
}

void emit_svg(const std::filesystem::path& results_csv, const std::filesystem::path& out_path,
              const std::string& title) {
    const auto rows = read_results_csv(results_csv);
    write_text_file(out_path, render_results_svg(rows, title));
}

std::string render_trajectories_svg(const TrajectoryBatch& batch, std::size_t samples,
                                    const ReconstructionResult* predictions) {
    if (batch.empty()) throw PreconditionError("no trajectories to plot");
    samples = std::min(samples, batch.size());
    double rmin = std::numeric_limits<double>::infinity(), rmax = -rmin, zmin = rmin, zmax = -rmin;
    auto extend = [&](State s) {
        rmin = std::min(rmin, s.r);
        rmax = std::max(rmax, s.r);
        zmin = std::min(zmin, s.z);
        zmax = std::max(zmax, s.z);
    };
    for (std::size_t n = 0; n < samples; ++n)
        for (State s : batch.trajectory(n)) extend(s);
    if (predictions)
        for (std::size_t i = 0; i < std::min(samples, predictions->predicted_x0.size()); ++i)
            extend(predictions->predicted_x0[i]);
    const double rpad = 0.05 * std::max(rmax - rmin, 1e-9), zpad = 0.05 * std::max(zmax - zmin, 1e-9);
    const Axes ax{rmin - rpad, rmax + rpad, zmin - zpad, zmax + zpad};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth, 0) << "\" height=\"" << fmt(kHeight, 0)
       << "\" viewBox=\"0 0 " << fmt(kWidth, 0) << " " << fmt(kHeight, 0) << "\">\n";
    frame(os, ax, "r", "z", "trajectories (" + std::string(to_string(batch.cfg.kind())) + ")");
    os << "<g fill=\"none\" stroke=\"#1f77b4\" stroke-opacity=\"0.5\">\n";
    for (std::size_t n = 0; n < samples; ++n) {
        os << "<polyline points=\"";
        bool first = true;
        for (State s : batch.trajectory(n)) {
            os << (first ? "" : " ") << fmt(ax.px(s.r)) << "," << fmt(ax.py(s.z));
            first = false;
        }
        os << "\"/>\n";
    }
    os << "</g>\n";
    const State x0 = batch.state(0, 0);
    os << "<circle cx=\"" << fmt(ax.px(x0.r)) << "\" cy=\"" << fmt(ax.py(x0.z))
       << "\" r=\"5\" fill=\"black\"/>\n";
    if (predictions) {
        os << "<g fill=\"#d62728\">\n";
        for (std::size_t i = 0; i < std::min(samples, predictions->predicted_x0.size()); ++i)
            os << "<circle cx=\"" << fmt(ax.px(predictions->predicted_x0[i].r)) << "\" cy=\""
               << fmt(ax.py(predictions->predicted_x0[i].z)) << "\" r=\"3\"/>\n";
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace vortexscore
