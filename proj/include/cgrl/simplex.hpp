#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cgrl {

// Bounded revised primal simplex for covering LPs
//
//   min c^T x   s.t.  A x >= 1,  x >= 0,   A binary.
//
// Rows get surplus variables; the first solve runs a phase 1 over one
// artificial per row. Later solves warm-start from the previous optimal
// basis, which stays primal feasible when columns are appended. Entering
// variables follow Dantzig's rule and fall back to Bland's rule after a run
// of degenerate pivots.
class CoveringSimplex {
 public:
  struct Options {
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-9;
    int refactor_every = 64;
    int stall_threshold = 50;
    long max_pivots = 10'000'000;
  };

  enum class Status { kOptimal, kInfeasible, kPivotLimit };

  explicit CoveringSimplex(int rows) : CoveringSimplex(rows, Options{}) {}
  CoveringSimplex(int rows, Options opt);

  // `rows` lists the 0-based rows with coefficient 1.
  void add_column(double cost, std::span<const int> rows);

  Status solve();

  int num_rows() const { return rows_; }
  int num_columns() const { return static_cast<int>(cost_.size()); }
  double objective() const;
  std::vector<double> primal() const;
  // One multiplier per row, y = c_B^T B^{-1}.
  std::vector<double> duals() const;
  long pivots() const { return pivots_; }

 private:
  enum class Kind : unsigned char { kStructural, kSurplus, kArtificial };
  struct Var {
    Kind kind;
    int index;
  };

  double var_cost(Var v, bool phase1) const;
  Eigen::VectorXd direction(Var v) const;
  long order_key(Var v) const;
  int& position(Var v);

  Status iterate(bool phase1);
  void pivot(int row, Var entering, const Eigen::VectorXd& w);
  void refactor();
  bool drive_out_artificials();

  int rows_;
  Options opt_;
  std::vector<double> cost_;
  std::vector<std::vector<int>> col_rows_;

  std::vector<Var> basis_;
  std::vector<int> struct_pos_;  // row in basis, -1 when nonbasic
  std::vector<int> surplus_pos_;
  std::vector<int> artificial_pos_;
  Eigen::MatrixXd binv_;
  Eigen::VectorXd xb_;
  bool phase1_done_ = false;
  long pivots_ = 0;
  int since_refactor_ = 0;
};

}  // namespace cgrl
