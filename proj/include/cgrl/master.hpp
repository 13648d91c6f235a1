#pragma once

#include <vector>

#include "cgrl/column.hpp"
#include "cgrl/simplex.hpp"

namespace cgrl {

inline constexpr double kNegativeReducedCost = -1e-6;

struct RmpSolution {
  std::vector<double> primal;  // one weight per pooled column
  double objective = 0.0;
  std::vector<double> duals;   // indexed by node id, duals[0] == 0 for the depot
  long pivots = 0;
};

// Set-covering LP over the pool: min sum c_r x_r, sum_r a_ir x_r >= 1,
// x >= 0. Keeps the simplex basis between solves so that appending columns
// warm-starts the next solve.
class RestrictedMaster {
 public:
  explicit RestrictedMaster(ColumnPool pool);

  // Adds new columns (duplicates dropped) and returns how many entered.
  std::size_t add_columns(std::vector<Column> cols, std::size_t cap = 0);

  // Throws InfeasibleMaster naming any uncovered customer.
  RmpSolution solve();

  const ColumnPool& pool() const { return pool_; }

 private:
  void sync_columns();

  ColumnPool pool_;
  CoveringSimplex lp_;
  std::size_t synced_ = 0;
};

// Cold-start convenience wrapper.
RmpSolution solve_rmp(const ColumnPool& pool, int n_customers);

}  // namespace cgrl
