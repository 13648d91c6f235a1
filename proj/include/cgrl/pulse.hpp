#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "cgrl/column.hpp"
#include "cgrl/instance.hpp"

namespace cgrl {

using Clock = std::chrono::steady_clock;
using Deadline = Clock::time_point;

inline Deadline no_deadline() { return Deadline::max(); }
Deadline deadline_after(double seconds);

struct PulseConfig {
  double per_thread_limit = 10.0;  // seconds per first-customer task
  std::size_t max_columns = 10;
  double beta = 0.25;              // fraction of customer arcs kept
  bool drop_zero_dual_nodes = true;
  bool reduce_arcs = true;         // the CG driver turns this off after a failed reduced run
  // Deterministic per-task budget in node expansions (0 = unlimited).
  std::uint64_t max_expansions_per_task = 0;
  unsigned workers = 0;            // 0 = hardware concurrency

  void validate() const;
};

// Surviving nodes and, per node, its retained successors ordered by
// increasing p_ij (ties by node id). Depot arcs are never removed.
struct ReducedGraph {
  std::vector<bool> active;
  std::vector<std::vector<int>> successors;
  std::size_t customer_arcs_total = 0;
  std::size_t customer_arcs_kept = 0;
  bool arcs_reduced = false;

  int num_active_customers() const;
};

ReducedGraph reduce_graph(const PricingInstance& pp, const PulseConfig& cfg);

struct PulseResult {
  std::vector<Column> columns;     // best first, each below kNegativeReducedCost
  double best_reduced_cost = 0.0;  // min over explored routes, 0 for 0 -> 0
  bool arc_reduction_applied = false;
  bool reduction_failed = false;   // reduced graph yielded no column
  bool budget_exhausted = false;
  std::uint64_t expansions = 0;
};

// Depth-first pulse search with one task per first customer. Each task keeps
// its own top-`max_columns` buffer and prunes a partial path when its
// reduced cost plus an admissible completion bound cannot beat the buffer's
// worst entry (or zero while the buffer is not full).
PulseResult pulse_price(const PricingInstance& pp, const PulseConfig& cfg,
                        Deadline deadline = no_deadline());

struct BruteForceResult {
  std::vector<int> route;
  double reduced_cost = 0.0;
  std::size_t feasible_routes = 0;
};

// Exhaustive enumeration of every feasible elementary route. Refuses
// instances with more than `max_customers` customers.
BruteForceResult brute_force_price(const PricingInstance& pp, int max_customers = 8);

}  // namespace cgrl
