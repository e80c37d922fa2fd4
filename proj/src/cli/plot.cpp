#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace ssmfrc::cli {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 24.0;
constexpr double kTop = 24.0;
constexpr double kBottom = 56.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.5g", v);
    return buf;
}

}  // namespace

std::string render_frc_svg(const FrcResult& result, const std::string& amplitude_label) {
    double x0 = 0, x1 = 1, y1 = 1;
    if (!result.points.empty()) {
        x0 = x1 = result.points.front().Omega;
        y1 = 0.0;
        for (const auto& p : result.points) {
            x0 = std::min(x0, p.Omega);
            x1 = std::max(x1, p.Omega);
            y1 = std::max(y1, p.amplitude);
        }
        if (x1 == x0) {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if (y1 <= 0.0) y1 = 1.0;
        y1 *= 1.05;
    }
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto X = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * pw; };
    auto Y = [&](double v) { return kTop + ph - v / y1 * ph; };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0;
        const double yv = y1 * i / 4.0;
        s << "<line x1=\"" << num(X(xv)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(X(xv)) << "\" y2=\""
          << num(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << num(X(xv)) << "\" y=\"" << num(kTop + ph + 20) << "\" text-anchor=\"middle\">" << label(xv)
          << "</text>\n";
        s << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(Y(yv)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
          << num(Y(yv)) << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(Y(yv) + 4) << "\" text-anchor=\"end\">" << label(yv)
          << "</text>\n";
    }
    s << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 12)
      << "\" text-anchor=\"middle\">Omega [rad/s]</text>\n";
    s << "<text x=\"16\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(kTop + ph / 2) << ")\">" << amplitude_label << "</text>\n";

    // one polyline per run of equal stability along a branch
    std::map<int, std::vector<const FrcPoint*>> branches;
    for (const auto& p : result.points) branches[p.branch_id].push_back(&p);
    for (const auto& [id, pts] : branches) {
        std::size_t start = 0;
        while (start < pts.size()) {
            const bool stable = is_stable(pts[start]->stability);
            std::size_t end = start + 1;
            while (end < pts.size() && is_stable(pts[end]->stability) == stable) ++end;
            // share the boundary point so runs join up
            const std::size_t stop = std::min(end + 1, pts.size());
            s << "<polyline fill=\"none\" stroke=\"" << (stable ? "#1f5fa8" : "#c0392b") << "\" stroke-width=\"1.6\""
              << (stable ? "" : " stroke-dasharray=\"5,3\"") << " points=\"";
            for (std::size_t i = start; i < stop; ++i)
                s << (i > start ? " " : "") << num(X(pts[i]->Omega)) << "," << num(Y(pts[i]->amplitude));
            s << "\"/>\n";
            if (stop - start == 1)
                s << "<circle cx=\"" << num(X(pts[start]->Omega)) << "\" cy=\"" << num(Y(pts[start]->amplitude))
                  << "\" r=\"2\" fill=\"" << (stable ? "#1f5fa8" : "#c0392b") << "\"/>\n";
            start = end;
        }
    }
    for (const auto& ev : result.events) {
        const double xv = 0.5 * (ev.Omega_before + ev.Omega_after);
        s << "<line x1=\"" << num(X(xv)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(X(xv)) << "\" y2=\""
          << num(kTop + ph) << "\" stroke=\"#888\" stroke-dasharray=\"2,3\"/>\n";
    }
    s << "<text x=\"" << num(kLeft + pw - 8) << "\" y=\"" << num(kTop + 16)
      << "\" text-anchor=\"end\" fill=\"#1f5fa8\">stable</text>\n";
    s << "<text x=\"" << num(kLeft + pw - 8) << "\" y=\"" << num(kTop + 32)
      << "\" text-anchor=\"end\" fill=\"#c0392b\">unstable</text>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace ssmfrc::cli
