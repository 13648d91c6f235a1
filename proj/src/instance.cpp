#include "cgrl/instance.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "cgrl/errors.hpp"
#include "text_util.hpp"

namespace cgrl {
namespace {

constexpr double kGeneratedHorizon = 18.0;
constexpr char kInstanceMagic[] = "cgrl-instance";
constexpr int kInstanceVersion = 1;

Matrix euclidean_matrix(const std::vector<Node>& nodes) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  Matrix t = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dx = nodes[i].x - nodes[j].x;
      const double dy = nodes[i].y - nodes[j].y;
      t(i, j) = t(j, i) = std::sqrt(dx * dx + dy * dy);
    }
  }
  return t;
}

}  // namespace

VrptwInstance::VrptwInstance(std::string name, std::vector<Node> nodes,
                             double capacity, CoordinateFrame frame)
    : name_(std::move(name)),
      nodes_(std::move(nodes)),
      capacity_(capacity),
      frame_(frame),
      euclidean_(true) {
  travel_ = euclidean_matrix(nodes_);
  validate();
}

VrptwInstance::VrptwInstance(std::string name, std::vector<Node> nodes,
                             double capacity, Matrix travel,
                             CoordinateFrame frame)
    : name_(std::move(name)),
      nodes_(std::move(nodes)),
      capacity_(capacity),
      travel_(std::move(travel)),
      frame_(frame),
      euclidean_(false) {
  validate();
}

void VrptwInstance::validate() const {
  if (nodes_.size() < 2) throw InvalidInstance("instance needs a depot and at least one customer");
  if (!(capacity_ > 0.0)) throw InvalidInstance("capacity must be positive");
  const Node& depot = nodes_.front();
  if (!(depot.tw_close > 0.0)) throw InvalidInstance("depot horizon must be positive");
  if (depot.demand != 0.0 || depot.service != 0.0 || depot.tw_open != 0.0)
    throw InvalidInstance("depot must have zero demand, service and window opening");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& v = nodes_[i];
    if (v.id != static_cast<int>(i))
      throw InvalidInstance("node ids must be 0..n in order, got " + std::to_string(v.id) + " at row " + std::to_string(i));
    if (v.tw_open > v.tw_close)
      throw InvalidInstance("node " + std::to_string(i) + " has tw_open > tw_close");
    if (v.tw_close > depot.tw_close)
      throw InvalidInstance("node " + std::to_string(i) + " closes after the horizon");
    if (v.demand < 0.0 || v.service < 0.0)
      throw InvalidInstance("node " + std::to_string(i) + " has negative demand or service");
  }
  const auto n = static_cast<Eigen::Index>(nodes_.size());
  if (travel_.rows() != n || travel_.cols() != n)
    throw InvalidInstance("travel matrix shape does not match node count");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (travel_(i, i) != 0.0) throw InvalidInstance("travel matrix diagonal must be zero");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(travel_(i, j) >= 0.0) || !std::isfinite(travel_(i, j)))
        throw InvalidInstance("travel times must be finite and non-negative");
      if (travel_(i, j) != travel_(j, i)) throw InvalidInstance("travel matrix must be symmetric");
    }
  }
}

VrptwInstance generate_instance(int n, double capacity, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generate_instance: n must be at least 2");
  if (!(capacity > 0.0)) throw std::invalid_argument("generate_instance: capacity must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> demand(1, 10);
  std::uniform_real_distribution<double> service(0.2, 0.5);
  std::uniform_int_distribution<int> opening(0, 16);
  std::uniform_real_distribution<double> width(2.0, 8.0);

  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(n) + 1);
  Node depot;
  depot.x = unit(rng);
  depot.y = unit(rng);
  depot.tw_close = kGeneratedHorizon;
  nodes.push_back(depot);
  for (int i = 1; i <= n; ++i) {
    Node v;
    v.id = i;
    v.x = unit(rng);
    v.y = unit(rng);
    v.demand = demand(rng);
    v.service = service(rng);
    v.tw_open = opening(rng);
    v.tw_close = std::min(v.tw_open + width(rng), kGeneratedHorizon);
    nodes.push_back(v);
  }
  return VrptwInstance("gen-n" + std::to_string(n) + "-s" + std::to_string(seed),
                       std::move(nodes), capacity, CoordinateFrame::kUnitSquare);
}

double default_capacity(int n) {
  if (n <= 20) return 30.0;
  if (n <= 50) return 40.0;
  return 50.0;
}

DualSamplerConfig DualSamplerConfig::constant(double theta, std::uint64_t seed) {
  DualSamplerConfig cfg;
  cfg.theta = theta;
  cfg.seed = seed;
  return cfg;
}

DualSamplerConfig DualSamplerConfig::interval(double lower, std::uint64_t seed) {
  DualSamplerConfig cfg;
  cfg.theta_lb = lower;
  cfg.seed = seed;
  return cfg;
}

std::vector<double> sample_duals(const VrptwInstance& inst,
                                 const DualSamplerConfig& cfg) {
  const int n = inst.num_customers();
  if (n < 2) throw std::invalid_argument("sample_duals: need at least 2 customers");
  const double lo = cfg.theta_lb.value_or(cfg.theta);
  const double hi = cfg.theta_lb ? cfg.theta_max : cfg.theta;
  if (lo < 0.0 || hi > 1.1 + 1e-12 || lo > hi)
    throw std::invalid_argument("sample_duals: theta must lie in [0, 1.1]");

  std::mt19937_64 rng(cfg.seed);
  double theta = lo;
  if (cfg.theta_lb) theta = std::uniform_real_distribution<double>(lo, hi)(rng);

  const int min_count = (n + 1) / 2;
  const int count = std::uniform_int_distribution<int>(min_count, n)(rng);

  std::vector<int> customers(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) customers[static_cast<std::size_t>(i)] = i + 1;
  std::shuffle(customers.begin(), customers.end(), rng);

  std::vector<double> duals(static_cast<std::size_t>(inst.num_nodes()), 0.0);
  for (int k = 0; k < count; ++k) {
    const int j = customers[static_cast<std::size_t>(k)];
    const double t_max = inst.travel_matrix().col(j).maxCoeff();
    const double upper = theta * t_max;
    duals[static_cast<std::size_t>(j)] =
        upper > 0.0 ? std::uniform_real_distribution<double>(0.0, upper)(rng) : 0.0;
  }
  return duals;
}

PricingInstance::PricingInstance(InstancePtr base, std::vector<double> duals)
    : base_(std::move(base)), duals_(std::move(duals)) {
  const int n = base_->num_nodes();
  if (static_cast<int>(duals_.size()) != n)
    throw std::invalid_argument("PricingInstance: one dual per node required");
  if (duals_.front() != 0.0) throw std::invalid_argument("PricingInstance: depot dual must be zero");
  prices_.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // No self-arcs.
      prices_(i, j) = i == j ? 0.0 : base_->travel(i, j) - duals_[static_cast<std::size_t>(j)];
    }
  }
  features_ = normalize(*base_, duals_);
}

ScaledFeatures normalize(const VrptwInstance& inst,
                         const std::vector<double>& duals) {
  const double horizon = inst.horizon();
  const double capacity = inst.capacity();
  if (!(horizon > 0.0) || !(capacity > 0.0))
    throw InvalidInstance("normalize: horizon and capacity must be positive");
  const int n = inst.num_nodes();

  double x0 = 0.0, y0 = 0.0, span = 1.0;
  if (inst.frame() == CoordinateFrame::kRaw) {
    double xmin = inst.node(0).x, xmax = xmin, ymin = inst.node(0).y, ymax = ymin;
    for (const Node& v : inst.nodes()) {
      xmin = std::min(xmin, v.x);
      xmax = std::max(xmax, v.x);
      ymin = std::min(ymin, v.y);
      ymax = std::max(ymax, v.y);
    }
    x0 = xmin;
    y0 = ymin;
    // One span for both axes keeps distances proportional.
    span = std::max(xmax - xmin, ymax - ymin);
    if (span <= 0.0) span = 1.0;
  }

  ScaledFeatures out;
  out.block.resize(n, kStaticFeatures);
  for (int i = 0; i < n; ++i) {
    const Node& v = inst.node(i);
    out.block(i, 0) = (v.x - x0) / span;
    out.block(i, 1) = (v.y - y0) / span;
    out.block(i, 2) = v.tw_open / horizon;
    out.block(i, 3) = v.tw_close / horizon;
    out.block(i, 4) = v.demand / capacity;
    out.block(i, 5) = v.service / horizon;
    out.block(i, 6) = duals.empty() ? 0.0 : duals[static_cast<std::size_t>(i)] / horizon;
  }
  out.travel = inst.travel_matrix() / horizon;
  return out;
}

Matrix scale_prices(const Matrix& prices) {
  if (prices.size() == 0) throw std::invalid_argument("scale_prices: empty matrix");
  const double bound = std::max(std::abs(prices.minCoeff()), std::abs(prices.maxCoeff()));
  if (bound == 0.0) return Matrix::Zero(prices.rows(), prices.cols());
  return -prices / bound;
}

std::uint64_t fingerprint(const PricingInstance& p) {
  std::uint64_t h = detail::kFnvOffset;
  const std::int64_t n = p.num_nodes();
  detail::fnv_mix(h, &n, sizeof n);
  detail::fnv_mix(h, p.duals().data(), p.duals().size() * sizeof(double));
  detail::fnv_mix(h, p.prices().data(),
                  static_cast<std::size_t>(p.prices().size()) * sizeof(double));
  return h;
}

void write_instance(std::ostream& out, const VrptwInstance& inst) {
  using detail::fmt_double;
  out << kInstanceMagic << " v" << kInstanceVersion << '\n';
  out << "name " << inst.name() << '\n';
  out << "customers " << inst.num_customers() << '\n';
  out << "capacity " << fmt_double(inst.capacity()) << '\n';
  out << "frame " << (inst.frame() == CoordinateFrame::kUnitSquare ? "unit" : "raw") << '\n';
  out << "nodes id x y demand service tw_open tw_close\n";
  for (const Node& v : inst.nodes()) {
    out << v.id << ' ' << fmt_double(v.x) << ' ' << fmt_double(v.y) << ' '
        << fmt_double(v.demand) << ' ' << fmt_double(v.service) << ' '
        << fmt_double(v.tw_open) << ' ' << fmt_double(v.tw_close) << '\n';
  }
  if (inst.euclidean()) {
    out << "travel euclidean\n";
  } else {
    out << "travel matrix\n";
    for (int i = 0; i < inst.num_nodes(); ++i) {
      for (int j = 0; j < inst.num_nodes(); ++j) {
        if (j) out << ' ';
        out << fmt_double(inst.travel(i, j));
      }
      out << '\n';
    }
  }
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> next(const char* what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      auto toks = detail::split_ws(line);
      if (!toks.empty()) return toks;
    }
    throw ParseError(line_no_, std::string("unexpected end of input, expected ") + what);
  }

  void expect_key(const std::vector<std::string>& toks, const char* key, std::size_t arity) {
    if (toks.empty() || toks[0] != key || toks.size() != arity + 1)
      throw ParseError(line_no_, std::string("expected '") + key + "' entry");
  }

  double to_double(const std::string& s) {
    try {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError(line_no_, "not a number: '" + s + "'");
    }
  }

  int line() const { return line_no_; }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

}  // namespace

VrptwInstance read_instance(std::istream& in) {
  LineReader r(in);
  auto toks = r.next("header");
  if (toks.size() != 2 || toks[0] != kInstanceMagic)
    throw ParseError(r.line(), "missing cgrl-instance header");
  if (toks[1] != "v" + std::to_string(kInstanceVersion))
    throw ParseError(r.line(), "unsupported instance version " + toks[1]);

  toks = r.next("name");
  r.expect_key(toks, "name", 1);
  std::string name = toks[1];
  toks = r.next("customers");
  r.expect_key(toks, "customers", 1);
  const int customers = static_cast<int>(r.to_double(toks[1]));
  if (customers < 1) throw ParseError(r.line(), "customer count must be positive");
  toks = r.next("capacity");
  r.expect_key(toks, "capacity", 1);
  const double capacity = r.to_double(toks[1]);
  toks = r.next("frame");
  r.expect_key(toks, "frame", 1);
  if (toks[1] != "unit" && toks[1] != "raw") throw ParseError(r.line(), "frame must be unit or raw");
  const auto frame = toks[1] == "unit" ? CoordinateFrame::kUnitSquare : CoordinateFrame::kRaw;
  toks = r.next("nodes");
  if (toks.empty() || toks[0] != "nodes") throw ParseError(r.line(), "expected node table");

  std::vector<Node> nodes;
  for (int i = 0; i <= customers; ++i) {
    toks = r.next("node row");
    if (toks.size() != 7) throw ParseError(r.line(), "node row needs 7 fields");
    Node v;
    v.id = static_cast<int>(r.to_double(toks[0]));
    v.x = r.to_double(toks[1]);
    v.y = r.to_double(toks[2]);
    v.demand = r.to_double(toks[3]);
    v.service = r.to_double(toks[4]);
    v.tw_open = r.to_double(toks[5]);
    v.tw_close = r.to_double(toks[6]);
    nodes.push_back(v);
  }
  toks = r.next("travel");
  r.expect_key(toks, "travel", 1);
  try {
    if (toks[1] == "euclidean") return VrptwInstance(name, std::move(nodes), capacity, frame);
    if (toks[1] != "matrix") throw ParseError(r.line(), "travel must be euclidean or matrix");
    const int n = customers + 1;
    Matrix t(n, n);
    for (int i = 0; i < n; ++i) {
      toks = r.next("travel row");
      if (static_cast<int>(toks.size()) != n) throw ParseError(r.line(), "travel row has wrong length");
      for (int j = 0; j < n; ++j) t(i, j) = r.to_double(toks[static_cast<std::size_t>(j)]);
    }
    return VrptwInstance(name, std::move(nodes), capacity, std::move(t), frame);
  } catch (const InvalidInstance& e) {
    throw ParseError(r.line(), e.what());
  }
}

}  // namespace cgrl
