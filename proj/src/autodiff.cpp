#include "cgrl/autodiff.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cgrl::ad {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::logic_error(std::string("autodiff: ") + what);
}

}  // namespace

Var Tape::push(Mat value, std::function<void()> back) {
  Node n;
  n.value = std::move(value);
  if (record_) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Mat& Tape::acc(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) {
    const Mat& v = val(id);
    n.grad = Mat::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

const Mat& Tape::value(Var v) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(v.id));
  return n.borrowed != nullptr ? *n.borrowed : n.value;
}

const Mat& Tape::grad(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).grad; }

Var Tape::constant(Mat value) { return push(std::move(value)); }

Var Tape::param(Parameter& p) {
  Node n;
  n.borrowed = &p.value;
  if (record_) n.param = &p;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::matmul(Var a, Var b) {
  require(val(a.id).cols() == val(b.id).rows(), "matmul shape mismatch");
  const int out = static_cast<int>(nodes_.size());
  return push(val(a.id) * val(b.id), [this, a, b, out] {
    const Mat& g = nodes_[static_cast<std::size_t>(out)].grad;
    acc(a.id).noalias() += g * val(b.id).transpose();
    acc(b.id).noalias() += val(a.id).transpose() * g;
  });
}

Var Tape::matmul_bt(Var a, Var b) {
  require(val(a.id).cols() == val(b.id).cols(), "matmul_bt shape mismatch");
  const int out = static_cast<int>(nodes_.size());
  return push(val(a.id) * val(b.id).transpose(), [this, a, b, out] {
    const Mat& g = nodes_[static_cast<std::size_t>(out)].grad;
    acc(a.id).noalias() += g * val(b.id);
    acc(b.id).noalias() += g.transpose() * val(a.id);
  });
}

Var Tape::add(Var a, Var b) {
  require(val(a.id).rows() == val(b.id).rows() && val(a.id).cols() == val(b.id).cols(),
          "add shape mismatch");
  const int out = static_cast<int>(nodes_.size());
  return push(val(a.id) + val(b.id), [this, a, b, out] {
    const Mat& g = nodes_[static_cast<std::size_t>(out)].grad;
    acc(a.id) += g;
    acc(b.id) += g;
  });
}

Var Tape::add_row(Var a, Var row) {
  require(val(row.id).rows() == 1 && val(row.id).cols() == val(a.id).cols(), "add_row shape mismatch");
  const int out = static_cast<int>(nodes_.size());
  Mat v = val(a.id);
  v.rowwise() += val(row.id).row(0);
  return push(std::move(v), [this, a, row, out] {
    const Mat& g = nodes_[static_cast<std::size_t>(out)].grad;
    acc(a.id) += g;
    acc(row.id) += g.colwise().sum();
  });
}

Var Tape::mul_row(Var a, Var row) {
  require(val(row.id).rows() == 1 && val(row.id).cols() == val(a.id).cols(), "mul_row shape mismatch");
  const int out = static_cast<int>(nodes_.size());
  Mat v = val(a.id).array().rowwise() * val(row.id).row(0).array();
  return push(std::move(v), [this, a, row, out] {
    const Mat& g = nodes_[static_cast<std::size_t>(out)].grad;
    acc(a.id).array() += g.array().rowwise() * val(row.id).row(0).array();
    acc(row.id) += (g.array() * val(a.id).array()).matrix().colwise().sum();
  });
}

Var Tape::broadcast_row(Var row, int rows) {
  require(val(row.id).rows() == 1, "broadcast_row needs a row");
  const int out = static_cast<int>(nodes_.size());
  return push(val(row.id).replicate(rows, 1), [this, row, out] {
    acc(row.id) += nodes_[static_cast<std::size_t>(out)].grad.colwise().sum();
  });
}

Var Tape::relu(Var a) {
  const int out = static_cast<int>(nodes_.size());
  return push(val(a.id).cwiseMax(0.0), [this, a, out] {
    const Mat& g = nodes_[static_cast<std::size_t>(out)].grad;
    acc(a.id).array() += (val(a.id).array() > 0.0).select(g.array(), 0.0);
  });
}

Var Tape::tanh_clip(Var a, double c) {
  const int out = static_cast<int>(nodes_.size());
  return push(c * val(a.id).array().tanh().matrix(), [this, a, c, out] {
    const Mat& g = nodes_[static_cast<std::size_t>(out)].grad;
    const auto t = val(a.id).array().tanh();
    acc(a.id).array() += g.array() * c * (1.0 - t * t);
  });
}

Var Tape::scale(Var a, double s) {
  const int out = static_cast<int>(nodes_.size());
  return push(s * val(a.id), [this, a, s, out] {
    acc(a.id) += s * nodes_[static_cast<std::size_t>(out)].grad;
  });
}

Var Tape::instance_norm(Var a, double eps) {
  const Mat& x = val(a.id);
  const double rows = static_cast<double>(x.rows());
  Eigen::RowVectorXd mean = x.colwise().mean();
  Mat centered = x.rowwise() - mean;
  Eigen::RowVectorXd inv_std =
      ((centered.array().square().colwise().sum() / rows) + eps).sqrt().inverse().matrix();
  Mat xhat = centered.array().rowwise() * inv_std.array();
  const int out = static_cast<int>(nodes_.size());
  Var y = push(std::move(xhat));
  if (record_) {
    nodes_.back().back = [this, a, out, inv_std, rows] {
      const Mat& g = nodes_[static_cast<std::size_t>(out)].grad;
      const Mat& xh = nodes_[static_cast<std::size_t>(out)].value;
      const Eigen::RowVectorXd g_mean = g.colwise().sum() / rows;
      const Eigen::RowVectorXd gx_mean = (g.array() * xh.array()).matrix().colwise().sum() / rows;
      Mat d = g.rowwise() - g_mean;
      d.array() -= xh.array().rowwise() * gx_mean.array();
      acc(a.id).array() += d.array().rowwise() * inv_std.array();
    };
  }
  return y;
}

Var Tape::mean_rows(Var a) {
  const int out = static_cast<int>(nodes_.size());
  const auto rows = val(a.id).rows();
  return push(val(a.id).colwise().mean(), [this, a, rows, out] {
    acc(a.id).rowwise() += nodes_[static_cast<std::size_t>(out)].grad.row(0) / static_cast<double>(rows);
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_cols of nothing");
  const auto rows = val(parts[0].id).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    require(val(p.id).rows() == rows, "concat_cols row mismatch");
    cols += val(p.id).cols();
  }
  Mat v(rows, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    v.middleCols(at, val(p.id).cols()) = val(p.id);
    at += val(p.id).cols();
  }
  const int out = static_cast<int>(nodes_.size());
  return push(std::move(v), [this, parts, out] {
    const Mat& g = nodes_[static_cast<std::size_t>(out)].grad;
    Eigen::Index at = 0;
    for (Var p : parts) {
      const auto c = val(p.id).cols();
      acc(p.id) += g.middleCols(at, c);
      at += c;
    }
  });
}

Var Tape::slice_cols(Var a, int start, int count) {
  require(start >= 0 && count >= 0 && start + count <= val(a.id).cols(), "slice_cols out of range");
  const int out = static_cast<int>(nodes_.size());
  return push(val(a.id).middleCols(start, count), [this, a, start, count, out] {
    acc(a.id).middleCols(start, count) += nodes_[static_cast<std::size_t>(out)].grad;
  });
}

Var Tape::gather_rows(Var a, const std::vector<int>& rows) {
  const Mat& x = val(a.id);
  Mat v(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] >= 0 && rows[r] < x.rows(), "gather_rows index out of range");
    v.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
  }
  const int out = static_cast<int>(nodes_.size());
  return push(std::move(v), [this, a, rows, out] {
    const Mat& g = nodes_[static_cast<std::size_t>(out)].grad;
    Mat& d = acc(a.id);
    for (std::size_t r = 0; r < rows.size(); ++r) d.row(rows[r]) += g.row(static_cast<Eigen::Index>(r));
  });
}

Var Tape::scatter_rows(Var a, const std::vector<int>& index, int rows) {
  const Mat& x = val(a.id);
  require(static_cast<std::size_t>(x.rows()) == index.size(), "scatter_rows size mismatch");
  Mat v = Mat::Zero(rows, x.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    require(index[r] >= 0 && index[r] < rows, "scatter_rows index out of range");
    v.row(index[r]) += x.row(static_cast<Eigen::Index>(r));
  }
  const int out = static_cast<int>(nodes_.size());
  return push(std::move(v), [this, a, index, out] {
    const Mat& g = nodes_[static_cast<std::size_t>(out)].grad;
    Mat& d = acc(a.id);
    for (std::size_t r = 0; r < index.size(); ++r) d.row(static_cast<Eigen::Index>(r)) += g.row(index[r]);
  });
}

Var Tape::softmax(Var a, const Mask* mask) {
  const Mat& x = val(a.id);
  if (mask != nullptr) require(mask->rows() == x.rows() && mask->cols() == x.cols(), "softmax mask shape");
  Mat y = Mat::Zero(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      if (mask == nullptr || (*mask)(r, c)) top = std::max(top, x(r, c));
    require(std::isfinite(top), "softmax row fully masked");
    double z = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      if (mask == nullptr || (*mask)(r, c)) z += (y(r, c) = std::exp(x(r, c) - top));
    y.row(r) /= z;
  }
  const int out = static_cast<int>(nodes_.size());
  return push(std::move(y), [this, a, out] {
    const Node& n = nodes_[static_cast<std::size_t>(out)];
    const Eigen::VectorXd dot = (n.grad.array() * n.value.array()).rowwise().sum();
    acc(a.id).array() += n.value.array() * (n.grad.colwise() - dot).array();
  });
}

Var Tape::log_softmax_pick(Var a, const Mask& mask, const std::vector<int>& pick) {
  const Mat& x = val(a.id);
  require(mask.rows() == x.rows() && mask.cols() == x.cols(), "log_softmax_pick mask shape");
  require(static_cast<std::size_t>(x.rows()) == pick.size(), "log_softmax_pick pick count");
  Mat probs = Mat::Zero(x.rows(), x.cols());
  Mat v(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const int p = pick[static_cast<std::size_t>(r)];
    require(p >= 0 && p < x.cols() && mask(r, p), "log_softmax_pick of a masked entry");
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      if (mask(r, c)) top = std::max(top, x(r, c));
    double z = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      if (mask(r, c)) z += (probs(r, c) = std::exp(x(r, c) - top));
    probs.row(r) /= z;
    v(r, 0) = x(r, p) - top - std::log(z);
  }
  const int out = static_cast<int>(nodes_.size());
  return push(std::move(v), [this, a, pick, probs = std::move(probs), out] {
    const Mat& g = nodes_[static_cast<std::size_t>(out)].grad;
    Mat& d = acc(a.id);
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      d.row(r) -= g(r, 0) * probs.row(r);
      d(r, pick[static_cast<std::size_t>(r)]) += g(r, 0);
    }
  });
}

Var Tape::weighted_sum(Var a, const std::vector<double>& w) {
  const Mat& x = val(a.id);
  require(x.cols() == 1 && static_cast<std::size_t>(x.rows()) == w.size(), "weighted_sum shape");
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  Mat v(1, 1);
  v(0, 0) = x.col(0).dot(wv);
  const int out = static_cast<int>(nodes_.size());
  return push(std::move(v), [this, a, w, out] {
    const double g = nodes_[static_cast<std::size_t>(out)].grad(0, 0);
    Mat& d = acc(a.id);
    for (std::size_t r = 0; r < w.size(); ++r) d(static_cast<Eigen::Index>(r), 0) += g * w[r];
  });
}

void Tape::backward(Var out) {
  require(record_, "backward on a non-recording tape");
  require(val(out.id).size() == 1, "backward needs a scalar output");
  acc(out.id)(0, 0) += 1.0;
  for (int i = out.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0) continue;
    if (n.back) n.back();
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

}  // namespace cgrl::ad
