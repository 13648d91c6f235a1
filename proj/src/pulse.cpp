#include "cgrl/pulse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "cgrl/master.hpp"

namespace cgrl {

Deadline deadline_after(double seconds) {
  if (!std::isfinite(seconds)) return no_deadline();
  const auto now = Clock::now();
  const auto budget = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(seconds));
  if (budget > Deadline::max() - now) return no_deadline();
  return now + budget;
}

void PulseConfig::validate() const {
  if (!(per_thread_limit > 0.0)) throw std::invalid_argument("PulseConfig: per_thread_limit must be positive");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("PulseConfig: beta must lie in (0, 1]");
  if (max_columns == 0) throw std::invalid_argument("PulseConfig: max_columns must be positive");
}

int ReducedGraph::num_active_customers() const {
  return static_cast<int>(std::count(active.begin() + 1, active.end(), true));
}

ReducedGraph reduce_graph(const PricingInstance& pp, const PulseConfig& cfg) {
  cfg.validate();
  const int n = pp.num_nodes();
  ReducedGraph g;
  g.active.assign(static_cast<std::size_t>(n), true);
  if (cfg.drop_zero_dual_nodes)
    for (int j = 1; j < n; ++j) g.active[static_cast<std::size_t>(j)] = pp.dual(j) > 0.0;

  struct Arc {
    double price;
    int from;
    int to;
  };
  std::vector<Arc> arcs;
  for (int i = 1; i < n; ++i) {
    if (!g.active[static_cast<std::size_t>(i)]) continue;
    for (int j = 1; j < n; ++j)
      if (i != j && g.active[static_cast<std::size_t>(j)]) arcs.push_back({pp.price(i, j), i, j});
  }
  g.customer_arcs_total = arcs.size();
  std::size_t keep = arcs.size();
  if (cfg.reduce_arcs && cfg.beta < 1.0) {
    keep = static_cast<std::size_t>(std::ceil(cfg.beta * static_cast<double>(arcs.size()) - 1e-9));
    std::sort(arcs.begin(), arcs.end(), [](const Arc& a, const Arc& b) {
      return std::tie(a.price, a.from, a.to) < std::tie(b.price, b.from, b.to);
    });
    arcs.resize(keep);
    g.arcs_reduced = true;
  }
  g.customer_arcs_kept = keep;

  g.successors.assign(static_cast<std::size_t>(n), {});
  for (int j = 1; j < n; ++j)
    if (g.active[static_cast<std::size_t>(j)]) g.successors[0].push_back(j);
  for (const Arc& a : arcs) g.successors[static_cast<std::size_t>(a.from)].push_back(a.to);
  for (int i = 0; i < n; ++i) {
    auto& succ = g.successors[static_cast<std::size_t>(i)];
    std::sort(succ.begin(), succ.end(), [&](int a, int b) {
      const double pa = pp.price(i, a), pb = pp.price(i, b);
      return pa < pb || (pa == pb && a < b);
    });
  }
  return g;
}

namespace {

struct Found {
  double rc;
  std::vector<int> seq;
  bool operator<(const Found& o) const { return std::tie(rc, seq) < std::tie(o.rc, o.seq); }
};

class PulseTask {
 public:
  PulseTask(const PricingInstance& pp, const ReducedGraph& g,
            const std::vector<double>& min_in_price, const std::vector<double>& min_in_travel,
            std::size_t capacity, std::uint64_t max_expansions, Deadline deadline)
      : pp_(pp),
        inst_(pp.base()),
        g_(g),
        min_in_price_(min_in_price),
        min_in_travel_(min_in_travel),
        k_(capacity),
        max_expansions_(max_expansions),
        deadline_(deadline),
        visited_(static_cast<std::size_t>(pp.num_nodes()), false) {}

  void run(int first) {
    const Node& f = inst_.node(first);
    const double arrival = inst_.travel(0, first);
    if (f.demand > inst_.capacity() || arrival > f.tw_close) return;
    const double start = std::max(f.tw_open, arrival);
    if (start + f.service + inst_.travel(first, 0) > inst_.horizon()) return;
    const double cost = pp_.price(0, first);
    if (cost + bound(first, start, f.demand) > threshold() + kSlack) return;
    path_.push_back(first);
    visited_[static_cast<std::size_t>(first)] = true;
    dfs(first, cost, start, f.demand);
  }

  std::vector<Found>& found() { return found_; }
  double best() const { return best_; }
  bool exhausted() const { return stopped_; }
  std::uint64_t expansions() const { return expansions_; }

 private:
  static constexpr double kSlack = 1e-10;

  double threshold() const { return found_.size() < k_ ? 0.0 : found_.back().rc; }

  // Lower bound on the price of any completion leaving `v`: each future arc
  // enters a distinct reachable customer (or the depot, at price >= 0).
  double bound(int v, double start, double load) const {
    const double depart = start + inst_.node(v).service;
    const double room = inst_.capacity() - load;
    double lb = 0.0;
    for (int k = 1; k < inst_.num_nodes(); ++k) {
      const auto ku = static_cast<std::size_t>(k);
      if (visited_[ku] || k == v || !g_.active[ku] || min_in_price_[ku] >= 0.0) continue;
      const Node& node = inst_.node(k);
      if (node.demand > room || depart + min_in_travel_[ku] > node.tw_close) continue;
      lb += min_in_price_[ku];
    }
    return lb;
  }

  bool out_of_budget() {
    ++expansions_;
    if (max_expansions_ != 0 && expansions_ > max_expansions_) stopped_ = true;
    if ((expansions_ & 255U) == 0 && Clock::now() >= deadline_) stopped_ = true;
    return stopped_;
  }

  void record(double rc) {
    best_ = std::min(best_, rc);
    if (!(rc < kNegativeReducedCost) || !(rc < threshold())) return;
    Found f{rc, path_};
    found_.insert(std::upper_bound(found_.begin(), found_.end(), f), std::move(f));
    if (found_.size() > k_) found_.pop_back();
  }

  void dfs(int v, double cost, double start, double load) {
    if (out_of_budget()) return;
    record(cost + pp_.price(v, 0));
    const Node& from = inst_.node(v);
    const double depart = start + from.service;
    for (int j : g_.successors[static_cast<std::size_t>(v)]) {
      if (stopped_) return;
      const auto ju = static_cast<std::size_t>(j);
      if (visited_[ju]) continue;
      const Node& to = inst_.node(j);
      const double next_load = load + to.demand;
      if (next_load > inst_.capacity()) continue;
      const double arrival = depart + inst_.travel(v, j);
      if (arrival > to.tw_close) continue;
      const double next_start = std::max(to.tw_open, arrival);
      if (next_start + to.service + inst_.travel(j, 0) > inst_.horizon()) continue;
      const double next_cost = cost + pp_.price(v, j);
      visited_[ju] = true;
      const double lb = bound(j, next_start, next_load);
      if (next_cost + lb <= threshold() + kSlack) {
        path_.push_back(j);
        dfs(j, next_cost, next_start, next_load);
        path_.pop_back();
      }
      visited_[ju] = false;
    }
  }

  const PricingInstance& pp_;
  const VrptwInstance& inst_;
  const ReducedGraph& g_;
  const std::vector<double>& min_in_price_;
  const std::vector<double>& min_in_travel_;
  std::size_t k_;
  std::uint64_t max_expansions_;
  Deadline deadline_;

  std::vector<bool> visited_;
  std::vector<int> path_;
  std::vector<Found> found_;
  double best_ = 0.0;
  bool stopped_ = false;
  std::uint64_t expansions_ = 0;
};

}  // namespace

PulseResult pulse_price(const PricingInstance& pp, const PulseConfig& cfg, Deadline deadline) {
  cfg.validate();
  const ReducedGraph g = reduce_graph(pp, cfg);
  const int n = pp.num_nodes();

  std::vector<double> min_in_price(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<double> min_in_travel(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i) {
    if (!g.active[static_cast<std::size_t>(i)]) continue;
    for (int j : g.successors[static_cast<std::size_t>(i)]) {
      auto& mp = min_in_price[static_cast<std::size_t>(j)];
      auto& mt = min_in_travel[static_cast<std::size_t>(j)];
      mp = std::min(mp, pp.price(i, j));
      mt = std::min(mt, pp.base().travel(i, j));
    }
  }

  const std::vector<int>& firsts = g.successors[0];
  std::vector<std::vector<Found>> per_task(firsts.size());
  std::vector<double> best(firsts.size(), 0.0);
  std::vector<char> exhausted(firsts.size(), 0);
  std::vector<std::uint64_t> expansions(firsts.size(), 0);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < firsts.size(); t = next++) {
      const Deadline task_deadline = std::min(deadline, deadline_after(cfg.per_thread_limit));
      PulseTask task(pp, g, min_in_price, min_in_travel, cfg.max_columns,
                     cfg.max_expansions_per_task, task_deadline);
      task.run(firsts[t]);
      per_task[t] = std::move(task.found());
      best[t] = task.best();
      exhausted[t] = task.exhausted();
      expansions[t] = task.expansions();
    }
  };
  unsigned workers = cfg.workers != 0 ? cfg.workers : std::max(1U, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, firsts.size())));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  PulseResult out;
  out.arc_reduction_applied = g.arcs_reduced;
  std::vector<Found> merged;
  for (std::size_t t = 0; t < firsts.size(); ++t) {
    for (auto& f : per_task[t]) merged.push_back(std::move(f));
    out.best_reduced_cost = std::min(out.best_reduced_cost, best[t]);
    out.budget_exhausted = out.budget_exhausted || exhausted[t];
    out.expansions += expansions[t];
  }
  std::sort(merged.begin(), merged.end());
  for (auto& f : merged) {
    if (out.columns.size() >= cfg.max_columns) break;
    out.columns.push_back(make_column(pp.base(), std::move(f.seq), f.rc));
  }
  out.reduction_failed = g.arcs_reduced && out.columns.empty();
  return out;
}

}  // namespace cgrl
