#include "fts/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fts {

void write_trace_csv(const std::string& path, const Trajectory& traj,
                     const std::vector<NamedColumn>& extras) {
  for (const auto& col : extras) {
    if (col.values.size() != traj.size()) {
      throw std::invalid_argument("write_trace_csv: extra column '" + col.name +
                                  "' length mismatch");
    }
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);

  out << "t";
  for (int i = 1; i <= traj.state_dim(); ++i) out << ",x" << i;
  for (int i = 1; i <= traj.control_dim(); ++i) out << ",u" << i;
  for (const auto& col : extras) out << "," << col.name;
  out << "\n";

  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (std::size_t r = 0; r < traj.size(); ++r) {
    put(traj.times[r]);
    const StateVector& x = traj.states[r];
    for (int i = 0; i < x.size(); ++i) {
      out << ",";
      put(x[i]);
    }
    if (!traj.controls.empty()) {
      const StateVector& u = traj.controls[r];
      for (int i = 0; i < u.size(); ++i) {
        out << ",";
        put(u[i]);
      }
    }
    for (const auto& col : extras) {
      out << ",";
      put(col.values[r]);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write_trace_csv: write failed for " + path);
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) table.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(table.header.size());
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != table.header.size()) {
      throw std::runtime_error("read_csv: ragged row in " + path);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace fts
