#pragma once

#include <vector>

namespace capmink {

struct LPResult {
  enum Status { Optimal, Infeasible, Unbounded } status = Infeasible;
  double value = 0;
  std::vector<double> x;
};

// maximize c'x subject to A x <= b, with x >= 0 unless free_vars.
// A is row-major with b.size() rows and c.size() columns.
LPResult lp_maximize(const std::vector<double>& A, const std::vector<double>& b,
                     const std::vector<double>& c, bool free_vars);

}  // namespace capmink
