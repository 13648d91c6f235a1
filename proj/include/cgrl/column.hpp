#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "cgrl/instance.hpp"
#include "cgrl/route.hpp"

namespace cgrl {

// An elementary depot-to-depot route; the depot is implicit at both ends.
struct Column {
  std::vector<int> nodes;
  double cost = 0.0;
  std::vector<std::uint8_t> coverage;  // coverage[i - 1] for customer i
  double reduced_cost_at_birth = 0.0;
  int iteration = -1;  // CG iteration that produced it, -1 for the initial pool

  bool covers(int customer) const {
    return coverage[static_cast<std::size_t>(customer - 1)] != 0;
  }
};

class RouteInfeasible : public std::invalid_argument {
 public:
  RouteInfeasible(Violation v, const std::string& what)
      : std::invalid_argument(what), violation_(v) {}
  Violation violation() const { return violation_; }

 private:
  Violation violation_;
};

// Builds a column from a visit sequence; throws RouteInfeasible when the
// route fails check_route.
Column make_column(const VrptwInstance& inst, std::vector<int> seq,
                   double reduced_cost_at_birth = 0.0, int iteration = -1);

// cost - sum of duals of the visited customers. `node_duals` is indexed by
// node id with the depot at 0.
double reduced_cost(const Column& col, std::span<const double> node_duals);

// Arc-by-arc sum of p_ij along depot -> seq -> depot.
double path_price(std::span<const int> seq, const PricingInstance& pp);

class ColumnPool {
 public:
  explicit ColumnPool(InstancePtr inst);

  // Validates every column first, then inserts those whose visit sequence is
  // new, in order, up to `cap` insertions (0 = no cap). Returns the count.
  std::size_t add_columns(std::vector<Column> cols, std::size_t cap = 0);

  bool contains(const std::vector<int>& seq) const { return index_.count(seq) != 0; }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& operator[](std::size_t i) const { return columns_[i]; }
  std::size_t size() const { return columns_.size(); }
  const VrptwInstance& instance() const { return *inst_; }
  const InstancePtr& instance_ptr() const { return inst_; }

  // Customers not covered by any pooled column.
  std::vector<int> uncovered() const;

 private:
  InstancePtr inst_;
  std::vector<Column> columns_;
  std::map<std::vector<int>, std::size_t> index_;
};

void write_pool(std::ostream& out, const ColumnPool& pool);
ColumnPool read_pool(std::istream& in, InstancePtr inst);

}  // namespace cgrl
