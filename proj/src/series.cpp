#include "macrostate/series.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace macrostate {

namespace {

void append_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

std::string format_series(const Trajectory& traj) {
  std::string out = "time\tzeta0";
  for (const auto& l : traj.labels) out += "\tzeta:" + l;
  for (const auto& l : traj.labels) out += "\texp:" + l;
  out += "\tentropy\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    append_number(out, traj.times[k]);
    out += '\t';
    append_number(out, traj.zeta[k].zeta0);
    for (Index j = 0; j < traj.zeta[k].zeta.size(); ++j) {
      out += '\t';
      append_number(out, traj.zeta[k].zeta(j));
    }
    for (Index j = 0; j < traj.expectations[k].size(); ++j) {
      out += '\t';
      append_number(out, traj.expectations[k](j));
    }
    out += '\t';
    append_number(out, traj.entropy[k]);
    out += '\n';
  }
  return out;
}

SeriesTable parse_series(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  SeriesTable table;
  if (!std::getline(in, line) || line.empty()) throw InvalidArgument("series: missing header row");
  table.columns = split_tabs(line);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != table.columns.size()) {
      throw InvalidArgument("series: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                            " fields, header has " + std::to_string(table.columns.size()));
    }
    std::vector<double> row;
    for (const auto& f : fields) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(f, &used));
        if (used != f.size()) throw std::invalid_argument(f);
      } catch (const std::exception&) {
        throw InvalidArgument("series: line " + std::to_string(line_no) + ": '" + f + "' is not a number");
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

SeriesTable read_series(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("series: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_series(buf.str());
}

std::vector<ColumnDeviation> compare_series(const SeriesTable& a, const SeriesTable& b) {
  if (a.columns != b.columns) throw InvalidArgument("compare: the series have different columns");
  if (a.rows.size() != b.rows.size()) throw InvalidArgument("compare: the series have different row counts");
  std::vector<ColumnDeviation> out;
  for (std::size_t c = 0; c < a.columns.size(); ++c) {
    ColumnDeviation dev{a.columns[c], 0.0, 0.0};
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
      const double d = std::abs(a.rows[r][c] - b.rows[r][c]);
      dev.max_abs = std::max(dev.max_abs, d);
      dev.mean_abs += d;
    }
    if (!a.rows.empty()) dev.mean_abs /= static_cast<double>(a.rows.size());
    out.push_back(dev);
  }
  return out;
}

}  // namespace macrostate
