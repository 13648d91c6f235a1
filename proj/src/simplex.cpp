#include "cgrl/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cgrl {

CoveringSimplex::CoveringSimplex(int rows, Options opt)
    : rows_(rows), opt_(opt) {
  if (rows <= 0) throw std::invalid_argument("CoveringSimplex: need at least one row");
  basis_.reserve(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) basis_.push_back({Kind::kArtificial, i});
  surplus_pos_.assign(static_cast<std::size_t>(rows), -1);
  artificial_pos_.resize(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) artificial_pos_[static_cast<std::size_t>(i)] = i;
  binv_ = Eigen::MatrixXd::Identity(rows, rows);
  xb_ = Eigen::VectorXd::Ones(rows);
}

void CoveringSimplex::add_column(double cost, std::span<const int> rows) {
  for (int r : rows)
    if (r < 0 || r >= rows_) throw std::out_of_range("CoveringSimplex: row index out of range");
  cost_.push_back(cost);
  col_rows_.emplace_back(rows.begin(), rows.end());
  struct_pos_.push_back(-1);
}

double CoveringSimplex::var_cost(Var v, bool phase1) const {
  switch (v.kind) {
    case Kind::kStructural: return phase1 ? 0.0 : cost_[static_cast<std::size_t>(v.index)];
    case Kind::kSurplus: return 0.0;
    case Kind::kArtificial: return phase1 ? 1.0 : 0.0;
  }
  return 0.0;
}

Eigen::VectorXd CoveringSimplex::direction(Var v) const {
  switch (v.kind) {
    case Kind::kStructural: {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(rows_);
      for (int r : col_rows_[static_cast<std::size_t>(v.index)]) w += binv_.col(r);
      return w;
    }
    case Kind::kSurplus: return -binv_.col(v.index);
    case Kind::kArtificial: return binv_.col(v.index);
  }
  return {};
}

// Fixed total order over variables for Bland's rule.
long CoveringSimplex::order_key(Var v) const {
  switch (v.kind) {
    case Kind::kStructural: return v.index;
    case Kind::kSurplus: return static_cast<long>(cost_.size()) + v.index;
    case Kind::kArtificial: return static_cast<long>(cost_.size()) + rows_ + v.index;
  }
  return 0;
}

int& CoveringSimplex::position(Var v) {
  switch (v.kind) {
    case Kind::kStructural: return struct_pos_[static_cast<std::size_t>(v.index)];
    case Kind::kSurplus: return surplus_pos_[static_cast<std::size_t>(v.index)];
    case Kind::kArtificial: return artificial_pos_[static_cast<std::size_t>(v.index)];
  }
  throw std::logic_error("unreachable");
}

void CoveringSimplex::pivot(int row, Var entering, const Eigen::VectorXd& w) {
  const double theta = xb_(row) / w(row);
  xb_ -= theta * w;
  xb_(row) = theta;
  for (int i = 0; i < rows_; ++i)
    if (xb_(i) < 0.0 && xb_(i) > -1e-11) xb_(i) = 0.0;

  binv_.row(row) /= w(row);
  for (int i = 0; i < rows_; ++i) {
    if (i == row || w(i) == 0.0) continue;
    binv_.row(i) -= w(i) * binv_.row(row);
  }
  position(basis_[static_cast<std::size_t>(row)]) = -1;
  basis_[static_cast<std::size_t>(row)] = entering;
  position(entering) = row;
  ++pivots_;
  if (++since_refactor_ >= opt_.refactor_every) refactor();
}

void CoveringSimplex::refactor() {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(rows_, rows_);
  for (int k = 0; k < rows_; ++k) {
    const Var v = basis_[static_cast<std::size_t>(k)];
    switch (v.kind) {
      case Kind::kStructural:
        for (int r : col_rows_[static_cast<std::size_t>(v.index)]) b(r, k) = 1.0;
        break;
      case Kind::kSurplus: b(v.index, k) = -1.0; break;
      case Kind::kArtificial: b(v.index, k) = 1.0; break;
    }
  }
  binv_ = b.partialPivLu().inverse();
  xb_ = binv_ * Eigen::VectorXd::Ones(rows_);
  for (int i = 0; i < rows_; ++i)
    if (xb_(i) < 0.0 && xb_(i) > -1e-9) xb_(i) = 0.0;
  since_refactor_ = 0;
}

CoveringSimplex::Status CoveringSimplex::iterate(bool phase1) {
  int degenerate_run = 0;
  const int m = rows_;
  const int k = num_columns();
  for (;;) {
    if (pivots_ >= opt_.max_pivots) return Status::kPivotLimit;
    const bool bland = degenerate_run > opt_.stall_threshold;

    Eigen::VectorXd cb(m);
    for (int i = 0; i < m; ++i) cb(i) = var_cost(basis_[static_cast<std::size_t>(i)], phase1);
    const Eigen::VectorXd y = binv_.transpose() * cb;

    Var entering{Kind::kStructural, -1};
    double best = 0.0;
    auto consider = [&](Var v, double d, double scale) {
      if (d >= -opt_.optimality_tol * scale) return false;
      if (entering.index < 0 || d < best) {
        entering = v;
        best = d;
      }
      return bland;  // Bland: first improving variable in the fixed order
    };
    bool stop = false;
    for (int j = 0; j < k && !stop; ++j) {
      if (struct_pos_[static_cast<std::size_t>(j)] >= 0) continue;
      double d = var_cost({Kind::kStructural, j}, phase1);
      for (int r : col_rows_[static_cast<std::size_t>(j)]) d -= y(r);
      stop = consider({Kind::kStructural, j}, d, std::max(1.0, std::abs(cost_[static_cast<std::size_t>(j)])));
    }
    for (int i = 0; i < m && !stop; ++i) {
      if (surplus_pos_[static_cast<std::size_t>(i)] >= 0) continue;
      stop = consider({Kind::kSurplus, i}, y(i), 1.0);
    }
    if (phase1) {
      for (int i = 0; i < m && !stop; ++i) {
        if (artificial_pos_[static_cast<std::size_t>(i)] >= 0) continue;
        stop = consider({Kind::kArtificial, i}, 1.0 - y(i), 1.0);
      }
    }
    if (entering.index < 0) return Status::kOptimal;

    const Eigen::VectorXd w = direction(entering);
    int row = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (w(i) <= opt_.pivot_tol) continue;
      const double r = xb_(i) / w(i);
      if (row < 0 || r < ratio - 1e-12) {
        row = i;
        ratio = r;
      } else if (r <= ratio + 1e-12) {
        const bool better = bland ? order_key(basis_[static_cast<std::size_t>(i)]) <
                                        order_key(basis_[static_cast<std::size_t>(row)])
                                  : w(i) > w(row);
        if (better) {
          row = i;
          ratio = std::min(ratio, r);
        }
      }
    }
    if (row < 0) throw std::logic_error("CoveringSimplex: unbounded direction in a covering LP");
    degenerate_run = ratio <= 1e-12 ? degenerate_run + 1 : 0;
    pivot(row, entering, w);
  }
}

bool CoveringSimplex::drive_out_artificials() {
  for (int r = 0; r < rows_; ++r) {
    if (basis_[static_cast<std::size_t>(r)].kind != Kind::kArtificial) continue;
    // Any nonbasic surplus with a nonzero entry in row r of B^{-1} works.
    int best = -1;
    double mag = 1e-7;
    for (int i = 0; i < rows_; ++i) {
      if (surplus_pos_[static_cast<std::size_t>(i)] >= 0) continue;
      if (std::abs(binv_(r, i)) > mag) {
        best = i;
        mag = std::abs(binv_(r, i));
      }
    }
    if (best < 0) return false;
    xb_(r) = 0.0;
    const Var v{Kind::kSurplus, best};
    pivot(r, v, direction(v));
  }
  return true;
}

CoveringSimplex::Status CoveringSimplex::solve() {
  if (!phase1_done_) {
    const Status s = iterate(true);
    if (s != Status::kOptimal) return s;
    double infeas = 0.0;
    for (int i = 0; i < rows_; ++i)
      if (basis_[static_cast<std::size_t>(i)].kind == Kind::kArtificial) infeas += xb_(i);
    if (infeas > 1e-9) return Status::kInfeasible;
    if (!drive_out_artificials()) return Status::kInfeasible;
    phase1_done_ = true;
  }
  return iterate(false);
}

double CoveringSimplex::objective() const {
  double obj = 0.0;
  for (int i = 0; i < rows_; ++i) obj += var_cost(basis_[static_cast<std::size_t>(i)], false) * xb_(i);
  return obj;
}

std::vector<double> CoveringSimplex::primal() const {
  std::vector<double> x(cost_.size(), 0.0);
  for (int i = 0; i < rows_; ++i) {
    const Var v = basis_[static_cast<std::size_t>(i)];
    if (v.kind == Kind::kStructural) x[static_cast<std::size_t>(v.index)] = xb_(i);
  }
  return x;
}

std::vector<double> CoveringSimplex::duals() const {
  Eigen::VectorXd cb(rows_);
  for (int i = 0; i < rows_; ++i) cb(i) = var_cost(basis_[static_cast<std::size_t>(i)], false);
  const Eigen::VectorXd y = binv_.transpose() * cb;
  return {y.data(), y.data() + y.size()};
}

}  // namespace cgrl
