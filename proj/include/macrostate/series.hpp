#pragma once

#include <string>
#include <vector>

#include "macrostate/evolution.hpp"

namespace macrostate {

/// Tab-separated time series: header row, then one row per grid time.
struct SeriesTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// Columns: time, zeta0, zeta:<label>..., exp:<label>..., entropy; values printed with %.17g.
std::string format_series(const Trajectory& traj);
SeriesTable parse_series(const std::string& text);
SeriesTable read_series(const std::string& path);

struct ColumnDeviation {
  std::string column;
  double max_abs = 0.0;
  double mean_abs = 0.0;
};

/// Per-column deviations; the tables must share columns and row count.
std::vector<ColumnDeviation> compare_series(const SeriesTable& a, const SeriesTable& b);

}  // namespace macrostate
