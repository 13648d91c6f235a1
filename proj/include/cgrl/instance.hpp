#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cgrl {

using Matrix = Eigen::MatrixXd;

// Node 0 is always the depot.
struct Node {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
  double demand = 0.0;
  double service = 0.0;
  double tw_open = 0.0;
  double tw_close = 0.0;
};

// Generated instances already live in the unit square; parsed ones are
// min-max scaled when features are built.
enum class CoordinateFrame { kUnitSquare, kRaw };

class InvalidInstance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class VrptwInstance {
 public:
  // Euclidean travel times are derived from the node coordinates.
  VrptwInstance(std::string name, std::vector<Node> nodes, double capacity,
                CoordinateFrame frame);
  // Explicit travel matrix; must be square, symmetric, non-negative with a
  // zero diagonal.
  VrptwInstance(std::string name, std::vector<Node> nodes, double capacity,
                Matrix travel, CoordinateFrame frame);

  const std::string& name() const { return name_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_customers() const { return num_nodes() - 1; }
  double capacity() const { return capacity_; }
  double horizon() const { return nodes_.front().tw_close; }
  double travel(int i, int j) const { return travel_(i, j); }
  const Matrix& travel_matrix() const { return travel_; }
  CoordinateFrame frame() const { return frame_; }
  bool euclidean() const { return euclidean_; }

 private:
  void validate() const;

  std::string name_;
  std::vector<Node> nodes_;
  double capacity_;
  Matrix travel_;
  CoordinateFrame frame_;
  bool euclidean_;
};

using InstancePtr = std::shared_ptr<const VrptwInstance>;

// Customers on [0,1]^2, integer demands in [1,10], service in [0.2,0.5],
// integer window opening in [0,16], width in [2,8], horizon 18.
VrptwInstance generate_instance(int n, double capacity, std::uint64_t seed);

// Vehicle capacity used for generated instances of size n: 30 up to 20
// customers, 40 up to 50, 50 beyond.
double default_capacity(int n);

struct DualSamplerConfig {
  // theta is fixed when theta_lb is empty, otherwise drawn per instance from
  // U[theta_lb, theta_max].
  double theta = 1.1;
  std::optional<double> theta_lb;
  double theta_max = 1.1;
  std::uint64_t seed = 0;

  static DualSamplerConfig constant(double theta, std::uint64_t seed);
  static DualSamplerConfig interval(double lower, std::uint64_t seed);
};

// Returns one dual per node, depot included (always zero).
std::vector<double> sample_duals(const VrptwInstance& inst,
                                 const DualSamplerConfig& cfg);

inline constexpr int kStaticFeatures = 7;

// Per node: x, y, tw_open, tw_close, demand, service, dual.
using FeatureBlock = Eigen::Matrix<double, Eigen::Dynamic, kStaticFeatures,
                                   Eigen::RowMajor>;

struct ScaledFeatures {
  FeatureBlock block;
  Matrix travel;  // t_ij / b_0
};

class PricingInstance {
 public:
  PricingInstance(InstancePtr base, std::vector<double> duals);

  const VrptwInstance& base() const { return *base_; }
  const InstancePtr& base_ptr() const { return base_; }
  const std::vector<double>& duals() const { return duals_; }
  double dual(int j) const { return duals_[static_cast<std::size_t>(j)]; }
  double price(int i, int j) const { return prices_(i, j); }
  const Matrix& prices() const { return prices_; }
  const ScaledFeatures& features() const { return features_; }
  int num_nodes() const { return base_->num_nodes(); }

 private:
  InstancePtr base_;
  std::vector<double> duals_;
  Matrix prices_;
  ScaledFeatures features_;
};

ScaledFeatures normalize(const VrptwInstance& inst,
                         const std::vector<double>& duals);
inline ScaledFeatures normalize(const PricingInstance& p) {
  return normalize(p.base(), p.duals());
}

// p / max(|min P|, |max P|), negated so that cheap arcs earn high reward.
Matrix scale_prices(const Matrix& prices);

// Stable 64-bit digest of duals and prices; equal digests mean the same
// pricing problem.
std::uint64_t fingerprint(const PricingInstance& p);

// Native text format, one node per line.
void write_instance(std::ostream& out, const VrptwInstance& inst);
VrptwInstance read_instance(std::istream& in);

}  // namespace cgrl
