#include "cgrl/master.hpp"

#include <sstream>

#include "cgrl/errors.hpp"

namespace cgrl {

RestrictedMaster::RestrictedMaster(ColumnPool pool)
    : pool_(std::move(pool)), lp_(pool_.instance().num_customers()) {}

std::size_t RestrictedMaster::add_columns(std::vector<Column> cols, std::size_t cap) {
  return pool_.add_columns(std::move(cols), cap);
}

void RestrictedMaster::sync_columns() {
  for (; synced_ < pool_.size(); ++synced_) {
    const Column& c = pool_[synced_];
    std::vector<int> rows;
    rows.reserve(c.nodes.size());
    for (int j : c.nodes) rows.push_back(j - 1);
    lp_.add_column(c.cost, rows);
  }
}

RmpSolution RestrictedMaster::solve() {
  if (const auto missing = pool_.uncovered(); !missing.empty()) {
    std::ostringstream msg;
    msg << "restricted master is infeasible, uncovered customers:";
    for (int j : missing) msg << ' ' << j;
    throw InfeasibleMaster(msg.str());
  }
  sync_columns();
  const auto status = lp_.solve();
  if (status == CoveringSimplex::Status::kInfeasible)
    throw InfeasibleMaster("restricted master phase 1 failed to reach feasibility");
  if (status == CoveringSimplex::Status::kPivotLimit)
    throw std::runtime_error("restricted master hit the simplex pivot limit");

  RmpSolution sol;
  sol.primal = lp_.primal();
  sol.objective = lp_.objective();
  const auto y = lp_.duals();
  sol.duals.assign(y.size() + 1, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) sol.duals[i + 1] = y[i];
  sol.pivots = lp_.pivots();
  return sol;
}

RmpSolution solve_rmp(const ColumnPool& pool, int n_customers) {
  if (n_customers != pool.instance().num_customers())
    throw std::invalid_argument("solve_rmp: customer count does not match the pool's instance");
  RestrictedMaster master(pool);
  return master.solve();
}

}  // namespace cgrl
