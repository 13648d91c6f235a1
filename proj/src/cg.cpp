#include "cgrl/cg.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "cgrl/errors.hpp"
#include "text_util.hpp"

namespace cgrl {

ColumnPool initial_columns(const InstancePtr& inst) {
  const int n = inst->num_customers();
  std::vector<int> unroutable;
  const DecoderState empty = DecoderState::start(*inst);
  const auto first_moves = feasible_moves(*inst, empty);
  for (int j = 1; j <= n; ++j)
    if (!first_moves[static_cast<std::size_t>(j)]) unroutable.push_back(j);
  if (!unroutable.empty()) {
    std::ostringstream msg;
    msg << "customers cannot be served by any route:";
    for (int j : unroutable) msg << ' ' << j;
    throw UnroutableCustomers(unroutable, msg.str());
  }

  std::vector<char> done(static_cast<std::size_t>(n + 1), 0);
  std::vector<Column> cols;
  int remaining = n;
  while (remaining > 0) {
    DecoderState s = DecoderState::start(*inst);
    for (int j = 1; j <= n; ++j) s.visited[static_cast<std::size_t>(j)] = done[static_cast<std::size_t>(j)];
    std::vector<int> route;
    for (;;) {
      const auto ok = feasible_moves(*inst, s);
      int next = 0;
      for (int j = 1; j <= n; ++j)
        if (ok[static_cast<std::size_t>(j)] && (next == 0 || inst->travel(s.last, j) < inst->travel(s.last, next)))
          next = j;
      if (next == 0) break;
      s.advance(*inst, next);
      route.push_back(next);
      done[static_cast<std::size_t>(next)] = 1;
      --remaining;
    }
    cols.push_back(make_column(*inst, std::move(route)));
  }
  ColumnPool pool(inst);
  pool.add_columns(std::move(cols));
  return pool;
}

std::string to_string(PricerKind k) {
  switch (k) {
    case PricerKind::kExact: return "exact";
    case PricerKind::kNeural: return "neural";
    case PricerKind::kHybrid: return "hybrid";
  }
  return "unknown";
}

PricerKind parse_pricer(const std::string& s) {
  if (s == "exact") return PricerKind::kExact;
  if (s == "neural") return PricerKind::kNeural;
  if (s == "hybrid") return PricerKind::kHybrid;
  throw std::invalid_argument("unknown pricer '" + s + "' (expected exact, neural or hybrid)");
}

PricingOutcome ExactPricer::price(const PricingInstance& pp, Deadline deadline) {
  PulseResult r = pulse_price(pp, cfg_, deadline);
  if (r.reduction_failed) {
    cfg_.reduce_arcs = false;
    r = pulse_price(pp, cfg_, deadline);
  }
  PricingOutcome out;
  out.pricer = "exact";
  out.best_reduced_cost = r.columns.empty() ? r.best_reduced_cost : r.columns.front().reduced_cost_at_birth;
  out.columns = std::move(r.columns);
  return out;
}

NeuralPricer::NeuralPricer(std::shared_ptr<PolicyParams> params, DecodeMode mode, std::uint64_t seed,
                           double tolerance, std::size_t cap)
    : params_(std::move(params)), mode_(mode), seed_(seed), tolerance_(tolerance), cap_(cap) {
  if (!params_) throw std::invalid_argument("neural pricing needs a policy checkpoint");
}

PricingOutcome NeuralPricer::price(const PricingInstance& pp, Deadline) {
  ad::Tape tape(false);
  RolloutOptions o;
  o.mode = mode_;
  o.seed = detail::splitmix64(seed_ ^ detail::splitmix64(calls_++));
  const RolloutResult r = rollout(tape, *params_, pp, o);
  std::map<std::vector<int>, double> distinct;
  PricingOutcome out;
  out.pricer = "neural";
  for (const auto& tr : r.trajectories) {
    out.best_reduced_cost = std::min(out.best_reduced_cost, tr.reduced_cost);
    if (tr.reduced_cost < tolerance_) distinct.emplace(tr.route, tr.reduced_cost);
  }
  std::vector<std::pair<double, std::vector<int>>> ranked;
  for (auto& [route, rc] : distinct) ranked.emplace_back(rc, route);
  std::sort(ranked.begin(), ranked.end());
  for (auto& [rc, route] : ranked) {
    if (cap_ != 0 && out.columns.size() >= cap_) break;
    out.columns.push_back(make_column(pp.base(), std::move(route), rc));
  }
  return out;
}

PricingOutcome HybridPricer::price(const PricingInstance& pp, Deadline deadline) {
  if (!switched_) {
    PricingOutcome out = neural_->price(pp, deadline);
    if (!out.columns.empty()) return out;
    switched_ = true;
  }
  return exact_->price(pp, deadline);
}

void CgConfig::validate() const {
  if (!(time_limit > 0.0)) throw std::invalid_argument("CgConfig: time limit must be positive");
  if (!(tolerance <= 0.0)) throw std::invalid_argument("CgConfig: tolerance must not be positive");
  if (max_iterations <= 0) throw std::invalid_argument("CgConfig: iteration cap must be positive");
  pulse.validate();
}

std::unique_ptr<Pricer> make_pricer(const CgConfig& cfg, std::shared_ptr<PolicyParams> policy) {
  cfg.validate();
  PulseConfig pulse = cfg.pulse;
  pulse.max_columns = cfg.column_cap != 0 ? cfg.column_cap : 10;
  auto exact = [&] { return std::make_unique<ExactPricer>(pulse); };
  auto neural = [&] {
    return std::make_unique<NeuralPricer>(policy, cfg.neural_mode, cfg.seed, cfg.tolerance, cfg.column_cap);
  };
  switch (cfg.pricer) {
    case PricerKind::kExact: return exact();
    case PricerKind::kNeural: return neural();
    case PricerKind::kHybrid: return std::make_unique<HybridPricer>(neural(), exact());
  }
  throw std::invalid_argument("unknown pricer");
}

CgResult run_cg(ColumnPool initial, const CgConfig& cfg, std::shared_ptr<PolicyParams> policy,
                const CgObserver& observer) {
  const auto pricer = make_pricer(cfg, std::move(policy));
  return run_cg(std::move(initial), cfg, *pricer, observer);
}

CgResult run_cg(ColumnPool initial, const CgConfig& cfg, Pricer& pricer, const CgObserver& observer) {
  cfg.validate();
  using Seconds = std::chrono::duration<double>;
  const auto t0 = Clock::now();
  const Deadline deadline = deadline_after(cfg.time_limit);
  const InstancePtr inst = initial.instance_ptr();
  RestrictedMaster rmp(std::move(initial));
  CgResult out{RmpSolution{}, CgTrace{}, ColumnPool(inst)};

  for (int it = 0;; ++it) {
    if (it >= cfg.max_iterations) {
      std::ostringstream msg;
      msg << "column generation exceeded " << cfg.max_iterations << " iterations (last objective "
          << detail::fmt_double(out.solution.objective) << ", pool size " << rmp.pool().size() << ")";
      throw IterationCapExceeded(msg.str());
    }
    IterationRecord rec;
    rec.iteration = it;
    const auto r0 = Clock::now();
    out.solution = rmp.solve();
    const auto r1 = Clock::now();
    rec.objective = out.solution.objective;
    rec.rmp_seconds = Seconds(r1 - r0).count();
    rec.wall_seconds = Seconds(r1 - t0).count();
    if (observer) observer(it, out.solution, rmp.pool());

    if (r1 >= deadline) {
      out.trace.time_limit_hit = true;
      out.trace.records.push_back(rec);
      break;
    }
    const PricingInstance pp(inst, out.solution.duals);
    rec.pp_fingerprint = fingerprint(pp);
    PricingOutcome priced = pricer.price(pp, deadline);
    rec.pricing_seconds = Seconds(Clock::now() - r1).count();
    rec.pricer = priced.pricer;
    rec.best_reduced_cost = priced.best_reduced_cost;
    std::vector<Column> fresh;
    for (Column& c : priced.columns) {
      if (!(c.reduced_cost_at_birth < cfg.tolerance)) continue;
      c.iteration = it;
      fresh.push_back(std::move(c));
    }
    rec.columns_added = rmp.add_columns(std::move(fresh));
    out.trace.records.push_back(rec);
    if (rec.columns_added == 0) {
      out.trace.time_limit_hit = Clock::now() >= deadline;
      out.trace.converged = !out.trace.time_limit_hit;
      break;
    }
  }
  out.pool = rmp.pool();
  return out;
}

namespace {

constexpr const char* kTraceHeader =
    "iteration,objective,columns_added,best_reduced_cost,pricer,pp_fingerprint,wall_seconds,rmp_seconds,"
    "pricing_seconds";

void write_rows(std::ostream& out, const CgTrace& trace, bool timing) {
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << detail::fmt_double(r.objective) << ',' << r.columns_added << ','
        << detail::fmt_double(r.best_reduced_cost) << ',' << r.pricer << ',' << r.pp_fingerprint;
    if (timing)
      out << ',' << detail::fmt_double(r.wall_seconds) << ',' << detail::fmt_double(r.rmp_seconds) << ','
          << detail::fmt_double(r.pricing_seconds);
    out << '\n';
  }
}

}  // namespace

void write_trace(std::ostream& out, const CgTrace& trace) {
  out << "# converged=" << trace.converged << " time_limit_hit=" << trace.time_limit_hit << '\n';
  out << kTraceHeader << '\n';
  write_rows(out, trace, true);
}

CgTrace read_trace(std::istream& in) {
  CgTrace trace;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.front() == '#') {
      int c = 0, t = 0;
      if (std::sscanf(line.c_str(), "# converged=%d time_limit_hit=%d", &c, &t) != 2)
        throw ParseError(lineno, "malformed trace status line");
      trace.converged = c != 0;
      trace.time_limit_hit = t != 0;
      continue;
    }
    if (!header) {
      if (line != kTraceHeader) throw ParseError(lineno, "unexpected trace header");
      header = true;
      continue;
    }
    const auto f = detail::split(line, ',');
    if (f.size() != 9) throw ParseError(lineno, "expected 9 trace fields");
    try {
      IterationRecord r;
      r.iteration = std::stoi(f[0]);
      r.objective = std::stod(f[1]);
      r.columns_added = std::stoull(f[2]);
      r.best_reduced_cost = std::stod(f[3]);
      r.pricer = f[4];
      r.pp_fingerprint = std::stoull(f[5]);
      r.wall_seconds = std::stod(f[6]);
      r.rmp_seconds = std::stod(f[7]);
      r.pricing_seconds = std::stod(f[8]);
      trace.records.push_back(r);
    } catch (const std::logic_error&) {
      throw ParseError(lineno, "non-numeric trace field");
    }
  }
  if (!header) throw ParseError(lineno, "trace header missing");
  return trace;
}

std::string trace_fingerprint_text(const CgTrace& trace) {
  std::ostringstream out;
  out << "converged=" << trace.converged << " time_limit_hit=" << trace.time_limit_hit << '\n';
  write_rows(out, trace, false);
  return out.str();
}

}  // namespace cgrl
