#pragma once

#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgrl/master.hpp"
#include "cgrl/policy.hpp"
#include "cgrl/pulse.hpp"

namespace cgrl {

class UnroutableCustomers : public std::invalid_argument {
 public:
  UnroutableCustomers(std::vector<int> customers, const std::string& what)
      : std::invalid_argument(what), customers_(std::move(customers)) {}
  const std::vector<int>& customers() const { return customers_; }

 private:
  std::vector<int> customers_;
};

// Nearest-neighbour routes covering every customer exactly once.
ColumnPool initial_columns(const InstancePtr& inst);

enum class PricerKind { kExact, kNeural, kHybrid };
std::string to_string(PricerKind k);
PricerKind parse_pricer(const std::string& s);

struct PricingOutcome {
  std::vector<Column> columns;  // below tolerance, best first
  double best_reduced_cost = 0.0;
  std::string pricer;           // "exact" or "neural"
};

class Pricer {
 public:
  virtual ~Pricer() = default;
  virtual PricingOutcome price(const PricingInstance& pp, Deadline deadline) = 0;
};

// Pulse search; after a reduced-graph run finds nothing, arc reduction is
// switched off for the rest of the solve and the call is repeated.
class ExactPricer : public Pricer {
 public:
  explicit ExactPricer(PulseConfig cfg) : cfg_(cfg) {}
  PricingOutcome price(const PricingInstance& pp, Deadline deadline) override;
  bool arc_reduction_enabled() const { return cfg_.reduce_arcs; }

 private:
  PulseConfig cfg_;
};

// Forced-start rollouts; every distinct route below tolerance becomes a column.
class NeuralPricer : public Pricer {
 public:
  NeuralPricer(std::shared_ptr<PolicyParams> params, DecodeMode mode, std::uint64_t seed, double tolerance,
               std::size_t cap);
  PricingOutcome price(const PricingInstance& pp, Deadline deadline) override;

 private:
  std::shared_ptr<PolicyParams> params_;
  DecodeMode mode_;
  std::uint64_t seed_;
  std::uint64_t calls_ = 0;
  double tolerance_;
  std::size_t cap_;
};

// Neural until its first empty call, exact from then on.
class HybridPricer : public Pricer {
 public:
  HybridPricer(std::unique_ptr<Pricer> neural, std::unique_ptr<Pricer> exact)
      : neural_(std::move(neural)), exact_(std::move(exact)) {}
  PricingOutcome price(const PricingInstance& pp, Deadline deadline) override;
  bool switched() const { return switched_; }

 private:
  std::unique_ptr<Pricer> neural_;
  std::unique_ptr<Pricer> exact_;
  bool switched_ = false;
};

struct CgConfig {
  PricerKind pricer = PricerKind::kExact;
  double time_limit = 600.0;  // seconds, whole solve
  double tolerance = kNegativeReducedCost;
  std::size_t column_cap = 0;  // 0 = 10 for exact pricing, unlimited for neural
  PulseConfig pulse;
  DecodeMode neural_mode = DecodeMode::kGreedy;
  std::uint64_t seed = 0;
  int max_iterations = 100000;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  std::size_t columns_added = 0;
  double best_reduced_cost = 0.0;
  double wall_seconds = 0.0;  // since the start of the solve, when the objective became known
  double rmp_seconds = 0.0;
  double pricing_seconds = 0.0;
  std::string pricer;
  std::uint64_t pp_fingerprint = 0;
};

struct CgTrace {
  std::vector<IterationRecord> records;
  bool converged = false;
  bool time_limit_hit = false;
};

struct CgResult {
  RmpSolution solution;
  CgTrace trace;
  ColumnPool pool;
};

class IterationCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Called after every RMP solve with the solution and the pool it covers.
using CgObserver = std::function<void(int iteration, const RmpSolution&, const ColumnPool&)>;

std::unique_ptr<Pricer> make_pricer(const CgConfig& cfg, std::shared_ptr<PolicyParams> policy);

CgResult run_cg(ColumnPool initial, const CgConfig& cfg, std::shared_ptr<PolicyParams> policy = nullptr,
                const CgObserver& observer = {});
CgResult run_cg(ColumnPool initial, const CgConfig& cfg, Pricer& pricer, const CgObserver& observer = {});

// One row per iteration. Timing columns are the last three.
void write_trace(std::ostream& out, const CgTrace& trace);
CgTrace read_trace(std::istream& in);
// Same content without timing columns, for run-to-run comparisons.
std::string trace_fingerprint_text(const CgTrace& trace);

}  // namespace cgrl
