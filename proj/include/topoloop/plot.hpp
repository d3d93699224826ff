#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "topoloop/evaluation.hpp"
#include "topoloop/geometry.hpp"

namespace topoloop {

// Reads pr.csv as written by format_pr (labelled or not).
std::vector<LabeledPR> parse_pr(const std::string& text);

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Line plot with axes, ticks and a legend.
std::string render_line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                             const std::string& y_label, bool unit_square);

// Precision (y) against recall (x), one line per curve.
std::string render_pr_svg(const std::vector<LabeledPR>& curves);

// x/y overlay of trajectories on equal axes.
std::string render_trajectories_svg(const std::vector<std::pair<std::string, std::vector<Pose2>>>& trajectories);

// Renders pr.svg and trajectories.svg from whatever of pr.csv, poses.txt and
// traj_*.txt exists in `dir`. Returns the files written.
std::vector<std::filesystem::path> render_plots(const std::filesystem::path& dir);

}  // namespace topoloop
