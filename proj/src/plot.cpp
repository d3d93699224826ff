#include "topoloop/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "topoloop/dataset.hpp"
#include "topoloop/errors.hpp"

namespace topoloop {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
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
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

// 1, 2 or 5 times a power of ten, giving roughly five ticks.
double nice_step(double span) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-9) lo -= 0.5, hi += 0.5;
    const double m = 0.05 * (hi - lo);
    lo -= m;
    hi += m;
  }
};

}  // namespace

std::vector<LabeledPR> parse_pr(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<LabeledPR> out;
  bool labeled = false;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const std::string ctx = "pr.csv:" + std::to_string(lineno);
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("label,", 0) == 0) labeled = true;
      else if (line.rfind("threshold,", 0) != 0) throw FormatError(ctx + ": unexpected header");
      continue;
    }
    auto tok = split(line, ',');
    std::string label;
    if (labeled) {
      if (tok.empty()) throw ParseError(ctx + ": empty row");
      label = tok.front();
      tok.erase(tok.begin());
    }
    if (tok.size() != 6) throw ParseError(ctx + ": expected threshold,precision,recall,tp,fp,fn");
    PRPoint p;
    p.threshold = parse_double(tok[0], ctx);
    p.precision = parse_double(tok[1], ctx);
    p.recall = parse_double(tok[2], ctx);
    p.tp = parse_index(tok[3], ctx);
    p.fp = parse_index(tok[4], ctx);
    p.fn = parse_index(tok[5], ctx);
    if (out.empty() || out.back().label != label) out.push_back({label, {}});
    out.back().points.push_back(p);
  }
  if (!header_seen) throw EmptyDataError("pr.csv has no header");
  return out;
}

std::string render_line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                             const std::string& y_label, bool unit_square) {
  Range xr;
  Range yr;
  if (unit_square) {
    xr = {0.0, 1.0};
    yr = {0.0, 1.0};
  } else {
    for (const auto& s : series) {
      for (const auto& [x, y] : s.points) {
        xr.add(x);
        yr.add(y);
      }
    }
    xr.pad();
    yr.pad();
  }
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  if (!unit_square) {
    // Equal scale on both axes so trajectories keep their shape.
    const double scale = std::max((xr.hi - xr.lo) / pw, (yr.hi - yr.lo) / ph);
    const double cx = 0.5 * (xr.lo + xr.hi);
    const double cy = 0.5 * (yr.lo + yr.hi);
    xr = {cx - 0.5 * scale * pw, cx + 0.5 * scale * pw};
    yr = {cy - 0.5 * scale * ph, cy + 0.5 * scale * ph};
  }
  auto sx = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
    << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"#333\"/>\n";

  const double xs = nice_step(xr.hi - xr.lo);
  for (double t = std::ceil(xr.lo / xs) * xs; t <= xr.hi + 1e-9 * xs; t += xs) {
    o << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(sx(t)) << "\" y2=\""
      << num(kTop + ph) << "\" stroke=\"#e5e5e5\"/>\n";
    o << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(kTop + ph + 16) << "\" text-anchor=\"middle\">"
      << tick_label(t) << "</text>\n";
  }
  const double ys = nice_step(yr.hi - yr.lo);
  for (double t = std::ceil(yr.lo / ys) * ys; t <= yr.hi + 1e-9 * ys; t += ys) {
    o << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
      << num(sy(t)) << "\" stroke=\"#e5e5e5\"/>\n";
    o << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(sy(t) + 4) << "\" text-anchor=\"end\">" << tick_label(t)
      << "</text>\n";
  }
  o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 14) << "\" text-anchor=\"middle\">"
    << escape(x_label) << "</text>\n";
  o << "<text transform=\"translate(18," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % kPalette.size()];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
    for (const auto& [x, y] : series[k].points) o << num(sx(x)) << "," << num(sy(y)) << " ";
    o << "\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(k);
    o << "<line x1=\"" << num(kLeft + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kLeft + pw + 34)
      << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << num(kLeft + pw + 40) << "\" y=\"" << num(ly + 4) << "\">" << escape(series[k].label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string render_pr_svg(const std::vector<LabeledPR>& curves) {
  std::vector<Series> series;
  for (const auto& c : curves) {
    Series s{c.label.empty() ? "detector" : c.label, {}};
    for (const auto& p : c.points) s.points.emplace_back(p.recall, p.precision);
    series.push_back(std::move(s));
  }
  return render_line_plot(series, "Precision-recall", "recall", "precision", true);
}

std::string render_trajectories_svg(const std::vector<std::pair<std::string, std::vector<Pose2>>>& trajectories) {
  std::vector<Series> series;
  for (const auto& [label, poses] : trajectories) {
    Series s{label, {}};
    for (const auto& p : poses) s.points.emplace_back(p.x, p.y);
    series.push_back(std::move(s));
  }
  return render_line_plot(series, "Trajectories", "x [m]", "y [m]", false);
}

std::vector<std::filesystem::path> render_plots(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> written;
  if (fs::exists(dir / "pr.csv")) {
    write_text_file(dir / "pr.svg", render_pr_svg(parse_pr(read_text_file(dir / "pr.csv"))));
    written.push_back(dir / "pr.svg");
  }
  std::vector<std::pair<std::string, std::vector<Pose2>>> trajs;
  if (fs::exists(dir / "poses.txt")) {
    auto truth = read_poses(dir / "poses.txt");
    if (!truth.empty()) trajs.emplace_back("ground truth", std::move(truth));
  }
  for (const char* label : {"noisy", "baseline", "hierarchical"}) {
    const fs::path p = dir / (std::string("traj_") + label + ".txt");
    if (!fs::exists(p)) continue;
    auto poses = read_poses(p);
    if (!trajs.empty() && !poses.empty()) {
      // Same anchoring as the APE report: first estimate onto first truth pose.
      const Pose2 t = compose(trajs.front().second.front(), inverse(poses.front()));
      for (auto& q : poses) q = compose(t, q);
    }
    trajs.emplace_back(label, std::move(poses));
  }
  if (!trajs.empty()) {
    write_text_file(dir / "trajectories.svg", render_trajectories_svg(trajs));
    written.push_back(dir / "trajectories.svg");
  }
  if (written.empty()) throw DataError("nothing to plot in " + dir.string());
  return written;
}

}  // namespace topoloop
