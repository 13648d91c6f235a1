#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cgrl::ad {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;  // true = allowed

struct Parameter {
  std::string name;
  Mat value;
  Mat grad;

  Parameter() = default;
  Parameter(std::string n, Mat v) : name(std::move(n)), value(std::move(v)), grad(Mat::Zero(value.rows(), value.cols())) {}
};

struct Var {
  int id = -1;
};

// Reverse-mode tape over row-major matrices. With recording off, ops only
// compute values and backward() is unavailable.
class Tape {
 public:
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Mat value);
  Var param(Parameter& p);
  const Mat& value(Var v) const;
  const Mat& grad(Var v) const;

  Var matmul(Var a, Var b);
  Var matmul_bt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var add_row(Var a, Var row);  // row broadcast over every row of a
  Var mul_row(Var a, Var row);
  Var broadcast_row(Var row, int rows);
  Var relu(Var a);
  Var tanh_clip(Var a, double c);  // c * tanh(a)
  Var scale(Var a, double s);
  // Each column standardized over the rows.
  Var instance_norm(Var a, double eps = 1e-5);
  Var mean_rows(Var a);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, int start, int count);
  Var gather_rows(Var a, const std::vector<int>& rows);
  // Rows scattered into a zero matrix with `rows` rows.
  Var scatter_rows(Var a, const std::vector<int>& index, int rows);
  // Row-wise softmax; disallowed entries are exactly zero. Every row needs
  // at least one allowed entry.
  Var softmax(Var a, const Mask* mask = nullptr);
  // Column vector of log softmax(a)(r, pick[r]) under the mask.
  Var log_softmax_pick(Var a, const Mask& mask, const std::vector<int>& pick);
  // Scalar sum_r w[r] * a(r, 0).
  Var weighted_sum(Var a, const std::vector<double>& w);

  // Seeds d(out)/d(out) = 1 for a 1x1 output and accumulates into the
  // gradients of every parameter reached.
  void backward(Var out);

 private:
  struct Node {
    Mat value;
    const Mat* borrowed = nullptr;
    Mat grad;
    Parameter* param = nullptr;
    std::function<void()> back;
  };

  Var push(Mat value, std::function<void()> back = {});
  Mat& acc(int id);
  const Mat& val(int id) const { return value(Var{id}); }

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace cgrl::ad
