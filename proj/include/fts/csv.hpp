#pragma once

#include "fts/trajectory.hpp"

#include <string>
#include <vector>

namespace fts {

struct NamedColumn {
  std::string name;
  std::vector<double> values;
};

// Writes one row per sample with header t,x1..xn[,u1..um][,<extras>].
// Values are printed with 17 significant digits so parsing the file back
// reproduces every double bit-exactly.
void write_trace_csv(const std::string& path, const Trajectory& traj,
                     const std::vector<NamedColumn>& extras = {});

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

}  // namespace fts
