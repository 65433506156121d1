#pragma once

#include <limits>
#include <string>
#include <vector>

namespace ipvem {

struct ConvergenceLevel {
  int n_cells = 0;
  double h = 0.0;
  double err = 0.0;
  double seconds = 0.0;
};

struct ConvergenceReport {
  std::string case_name;
  double epsilon = 1.0;
  int k = 2;
  double rate = std::numeric_limits<double>::quiet_NaN();
  std::vector<ConvergenceLevel> levels;
};

}  // namespace ipvem
