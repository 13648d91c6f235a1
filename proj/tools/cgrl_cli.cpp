#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "cgrl/cg.hpp"
#include "cgrl/checkpoint.hpp"
#include "cgrl/errors.hpp"
#include "cgrl/metrics.hpp"
#include "cgrl/solomon.hpp"
#include "cgrl/trainer.hpp"

namespace fs = std::filesystem;
using namespace cgrl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidInput = 2;
constexpr int kExitInfeasibleMaster = 3;
constexpr int kExitTimeLimit = 4;

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  return out;
}

InstancePtr load_instance(const std::string& path, bool solomon, int solomon_customers) {
  std::ifstream in = open_in(path);
  return std::make_shared<const VrptwInstance>(solomon ? parse_solomon(in, solomon_customers) : read_instance(in));
}

std::shared_ptr<PolicyParams> load_policy(const std::string& path) {
  if (path.empty()) return nullptr;
  return std::make_shared<PolicyParams>(load_params(path));
}

void add_policy_flags(CLI::App* app, PolicyConfig& p) {
  app->add_option("--d-h", p.d_h, "embedding width")->capture_default_str();
  app->add_option("--layers", p.layers, "encoder layers")->capture_default_str();
  app->add_option("--heads", p.heads, "attention heads")->capture_default_str();
  app->add_option("--ff", p.ff, "feed-forward width")->capture_default_str();
  app->add_option("--clip", p.clip, "logit clipping constant")->capture_default_str();
}

void add_train_flags(CLI::App* app, TrainConfig& c) {
  app->add_option("--epochs", c.epochs, "training epochs")->capture_default_str();
  app->add_option("--instances-per-epoch", c.instances_per_epoch, "pricing problems per epoch")->capture_default_str();
  app->add_option("--batch-size", c.batch_size, "pricing problems per gradient step")->capture_default_str();
  app->add_option("--lr", c.lr, "Adam step size")->capture_default_str();
  app->add_option("--n", c.n, "customers per training instance")->capture_default_str();
  app->add_option("--capacity", c.capacity, "vehicle capacity, 0 picks the size default")->capture_default_str();
  app->add_option("--seed", c.seed, "random seed")->capture_default_str();
  app->add_option("--checkpoint-every", c.checkpoint_every, "epochs between checkpoints, 0 = final only")
      ->capture_default_str();
  add_policy_flags(app, c.policy);
}

void add_cg_flags(CLI::App* app, CgConfig& c, std::string& pricer, std::string& decode) {
  app->add_option("--pricer", pricer, "exact, neural or hybrid")
      ->check(CLI::IsMember({"exact", "neural", "hybrid"}))
      ->capture_default_str();
  app->add_option("--time-limit", c.time_limit, "seconds per solve")->capture_default_str();
  app->add_option("--tolerance", c.tolerance, "reduced cost below which a column is added")->capture_default_str();
  app->add_option("--column-cap", c.column_cap, "columns per pricing call, 0 = pricer default")->capture_default_str();
  app->add_option("--max-iterations", c.max_iterations, "iteration cap")->capture_default_str();
  app->add_option("--decode", decode, "neural decoding: greedy or sample")
      ->check(CLI::IsMember({"greedy", "sample"}))
      ->capture_default_str();
  app->add_option("--seed", c.seed, "random seed")->capture_default_str();
  app->add_option("--per-thread-limit", c.pulse.per_thread_limit, "seconds per pulse task")->capture_default_str();
  app->add_option("--beta", c.pulse.beta, "fraction of arcs kept by arc reduction")->capture_default_str();
  app->add_option("--max-expansions", c.pulse.max_expansions_per_task, "pulse expansions per task, 0 = unlimited")
      ->capture_default_str();
  app->add_option("--workers", c.pulse.workers, "pulse worker threads, 0 = all cores")->capture_default_str();
  app->add_flag("!--no-node-drop", c.pulse.drop_zero_dual_nodes, "keep zero-dual customers in the pricing graph");
  app->add_flag("!--no-arc-reduction", c.pulse.reduce_arcs, "price on the full arc set");
}

void finish_cg_config(CgConfig& c, const std::string& pricer, const std::string& decode) {
  c.pricer = parse_pricer(pricer);
  c.neural_mode = decode == "sample" ? DecodeMode::kSample : DecodeMode::kGreedy;
}

int cmd_gen(int n, double capacity, int count, std::uint64_t seed, const std::string& out_dir) {
  if (count < 1) throw InputError("--count must be at least 1");
  const double q = capacity > 0.0 ? capacity : default_capacity(n);
  fs::create_directories(out_dir);
  for (int k = 0; k < count; ++k) {
    const VrptwInstance inst = generate_instance(n, q, seed + static_cast<std::uint64_t>(k));
    const fs::path path = fs::path(out_dir) / ("n" + std::to_string(n) + "_s" + std::to_string(seed + k) + ".txt");
    std::ofstream out = open_out(path.string());
    write_instance(out, inst);
    std::cout << path.string() << '\n';
  }
  return kExitOk;
}

int cmd_train(TrainConfig cfg, const std::optional<double>& theta_lb, const std::string& init,
              const std::string& log_path) {
  cfg.theta_lb = theta_lb;
  cfg.validate();
  PolicyParams start = init.empty() ? PolicyParams::random(cfg.policy, cfg.seed) : load_params(init, cfg.policy);
  std::ofstream log;
  if (!log_path.empty()) log = open_out(log_path);
  train(cfg, std::move(start), log_path.empty() ? nullptr : &log, [](const EpochLog& e) {
    std::fprintf(stderr, "epoch %d mean_reward %.6f loss %.6f %.1fs\n", e.epoch, e.mean_reward, e.loss,
                 e.wall_seconds);
  });
  std::cout << cfg.checkpoint_path << '\n';
  return kExitOk;
}

int cmd_grid(const TrainConfig& cfg, const std::vector<double>& candidates, int validation_size,
             const std::string& scores_path) {
  cfg.validate();
  const GridResult r = theta_grid_search(candidates, cfg, validation_size, &std::cerr);
  std::ostringstream table;
  table << "theta_lb,validation_score\n";
  for (std::size_t k = 0; k < candidates.size(); ++k) table << candidates[k] << ',' << r.scores[k] << '\n';
  if (!scores_path.empty()) open_out(scores_path) << table.str();
  std::cout << table.str() << "best_theta_lb," << r.best_theta_lb << '\n';
  if (!cfg.checkpoint_path.empty()) save_params(cfg.checkpoint_path, r.best_params);
  return kExitOk;
}

int solve_status(const CgTrace& t) { return t.time_limit_hit && !t.converged ? kExitTimeLimit : kExitOk; }

int cmd_solve(const InstancePtr& inst, const CgConfig& cfg, const std::string& policy, const std::string& trace_path) {
  const CgResult r = run_cg(initial_columns(inst), cfg, load_policy(policy));
  if (!trace_path.empty()) {
    std::ofstream out = open_out(trace_path);
    write_trace(out, r.trace);
  }
  const auto& last = r.trace.records.back();
  std::printf("instance %s\nobjective %.10g\niterations %zu\ncolumns %zu\nseconds %.3f\nconverged %d\n",
              inst->name().c_str(), r.solution.objective, r.trace.records.size(), r.pool.size(), last.wall_seconds,
              r.trace.converged ? 1 : 0);
  return solve_status(r.trace);
}

std::vector<double> first_call_reduced_costs(const CgResult& r) {
  std::vector<double> out;
  for (const Column& c : r.pool.columns())
    if (c.iteration == 0) out.push_back(c.reduced_cost_at_birth);
  return out;
}

int cmd_compare(std::vector<InstancePtr> instances, CgConfig cfg, const std::string& policy_path,
                const std::string& out_dir) {
  const auto policy = load_policy(policy_path);
  if (!policy) throw InputError("compare needs --policy");
  FigureInputs fig;
  std::vector<ComparisonRecord> records;
  int status = kExitOk;
  for (const InstancePtr& inst : instances) {
    cfg.pricer = PricerKind::kNeural;
    const CgResult neural = run_cg(initial_columns(inst), cfg, policy);
    cfg.pricer = PricerKind::kExact;
    const CgResult exact = run_cg(initial_columns(inst), cfg);
    if (solve_status(neural.trace) != kExitOk || solve_status(exact.trace) != kExitOk) status = kExitTimeLimit;
    ComparisonRecord rec = compare_traces(inst->name(), neural.trace, exact.trace);
    std::fprintf(stderr, "%s neural %.6f exact %.6f t_neural %.3f t_exact %.3f\n", inst->name().c_str(),
                 rec.obj_neural, rec.obj_exact, rec.t_neural, rec.t_exact);
    records.push_back(rec);
    fig.neural_traces.push_back(neural.trace);
    fig.exact_traces.push_back(exact.trace);
    if (fig.first_pp_neural.empty() && fig.first_pp_exact.empty()) {
      fig.first_pp_neural = first_call_reduced_costs(neural);
      fig.first_pp_exact = first_call_reduced_costs(exact);
    }
  }
  fig.report = summarize(std::move(records));
  if (!out_dir.empty()) emit_figures(out_dir, fig);
  const ComparisonReport& rep = fig.report;
  std::printf("K %zu\nobj_gap %.6f\nt_speedup %.6f\nJ_less %d\n", rep.records.size(), rep.obj_gap, rep.t_speedup,
              rep.j_less);
  std::printf("mean_iterations neural %.2f exact %.2f\nmean_seconds_per_iteration neural %.6f exact %.6f\n",
              rep.mean_iterations_neural, rep.mean_iterations_exact, rep.mean_time_per_iteration_neural,
              rep.mean_time_per_iteration_exact);
  return status;
}

// Sidecar lines: name,value. Blank lines and '#' comments are skipped.
std::map<std::string, double> read_reference(const std::string& path) {
  std::ifstream in = open_in(path);
  std::map<std::string, double> ref;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(lineno, "expected name,value");
    try {
      ref[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    } catch (const std::logic_error&) {
      throw ParseError(lineno, "non-numeric reference value");
    }
  }
  return ref;
}

int cmd_solomon_validate(const std::vector<std::string>& files, int customers, const std::string& reference,
                         CgConfig cfg, const std::string& out_path) {
  const auto ref = read_reference(reference);
  cfg.pricer = PricerKind::kExact;
  std::ostringstream table;
  table << "instance,objective,reference,gap,seconds,converged\n";
  double gap_sum = 0.0, time_sum = 0.0;
  int status = kExitOk;
  for (const std::string& f : files) {
    const InstancePtr inst = load_instance(f, true, customers);
    const auto it = ref.find(inst->name());
    if (it == ref.end()) throw InputError("no reference value for instance '" + inst->name() + "'");
    if (it->second == 0.0) throw InputError("reference value for '" + inst->name() + "' is zero");
    const CgResult r = run_cg(initial_columns(inst), cfg);
    const double gap = (it->second - r.solution.objective) / it->second;
    const double secs = r.trace.records.back().wall_seconds;
    if (solve_status(r.trace) != kExitOk) status = kExitTimeLimit;
    gap_sum += gap;
    time_sum += secs;
    table << inst->name() << ',' << r.solution.objective << ',' << it->second << ',' << gap << ',' << secs << ','
          << r.trace.converged << '\n';
  }
  if (!out_path.empty()) open_out(out_path) << table.str();
  std::cout << table.str();
  std::printf("mean_gap %.6f\nmean_seconds %.3f\n", gap_sum / files.size(), time_sum / files.size());
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Column generation for the CVRPTW root node with exact or learned pricing"};
  app.require_subcommand(1);

  int gen_n = 20, gen_count = 1;
  double gen_capacity = 0.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out = ".";
  auto* gen = app.add_subcommand("gen", "write random instances");
  gen->add_option("--n", gen_n, "customers")->capture_default_str();
  gen->add_option("--capacity", gen_capacity, "vehicle capacity, 0 picks the size default")->capture_default_str();
  gen->add_option("--count", gen_count, "instances to write")->capture_default_str();
  gen->add_option("--seed", gen_seed, "seed of the first instance; later ones add their index")->capture_default_str();
  gen->add_option("--out-dir", gen_out, "output directory")->capture_default_str();

  TrainConfig train_cfg;
  std::optional<double> train_theta_lb;
  std::string train_init, train_log;
  auto* tr = app.add_subcommand("train", "train a pricing policy");
  add_train_flags(tr, train_cfg);
  tr->add_option("--theta", train_cfg.theta, "fixed dual scale")->capture_default_str();
  tr->add_option("--theta-lb", train_theta_lb, "draw the dual scale from [theta-lb, 1.1] per instance");
  tr->add_option("--checkpoint", train_cfg.checkpoint_path, "checkpoint path")->required();
  tr->add_option("--init", train_init, "start from this checkpoint");
  tr->add_option("--log", train_log, "per-epoch CSV log");

  TrainConfig grid_cfg;
  std::vector<double> grid_candidates;
  int grid_validation = 50;
  std::string grid_scores;
  auto* grid = app.add_subcommand("grid-theta", "pick the dual-scale lower bound on a validation set");
  add_train_flags(grid, grid_cfg);
  grid->add_option("--candidates", grid_candidates, "lower bounds to try; values >= 1.1 mean a fixed scale")
      ->required()
      ->delimiter(',');
  grid->add_option("--validation-size", grid_validation, "validation pricing problems")->capture_default_str();
  grid->add_option("--checkpoint", grid_cfg.checkpoint_path, "write the winning policy here");
  grid->add_option("--scores", grid_scores, "write per-candidate scores as CSV");

  CgConfig solve_cfg;
  std::string solve_pricer = "exact", solve_decode = "greedy", solve_instance, solve_policy, solve_trace;
  bool solve_solomon = false;
  int solve_customers = 100;
  auto* solve = app.add_subcommand("solve", "solve the root-node LP of one instance");
  add_cg_flags(solve, solve_cfg, solve_pricer, solve_decode);
  solve->add_option("--instance", solve_instance, "instance file")->required();
  solve->add_flag("--solomon", solve_solomon, "the instance is in Solomon format");
  solve->add_option("--customers", solve_customers, "customers expected in a Solomon file")->capture_default_str();
  solve->add_option("--policy", solve_policy, "policy checkpoint for neural or hybrid pricing");
  solve->add_option("--trace", solve_trace, "write the iteration trace as CSV");

  CgConfig cmp_cfg;
  std::string cmp_pricer = "exact", cmp_decode = "greedy", cmp_policy, cmp_out;
  std::vector<std::string> cmp_files;
  int cmp_count = 10, cmp_n = 20;
  double cmp_capacity = 0.0;
  auto* cmp = app.add_subcommand("compare", "compare neural and exact pricing on a set of instances");
  add_cg_flags(cmp, cmp_cfg, cmp_pricer, cmp_decode);
  cmp->add_option("--instances", cmp_files, "instance files; random instances are generated when omitted");
  cmp->add_option("--count", cmp_count, "random instances to generate")->capture_default_str();
  cmp->add_option("--n", cmp_n, "customers per random instance")->capture_default_str();
  cmp->add_option("--capacity", cmp_capacity, "vehicle capacity, 0 picks the size default")->capture_default_str();
  cmp->add_option("--policy", cmp_policy, "policy checkpoint")->required();
  cmp->add_option("--out-dir", cmp_out, "write records and figure CSVs here");

  CgConfig sv_cfg;
  std::string sv_pricer = "exact", sv_decode = "greedy", sv_reference, sv_out;
  std::vector<std::string> sv_files;
  int sv_customers = 100;
  auto* sv = app.add_subcommand("solomon-validate", "gap of the exact root LP to reference optima");
  add_cg_flags(sv, sv_cfg, sv_pricer, sv_decode);
  sv->add_option("--instances", sv_files, "Solomon files")->required();
  sv->add_option("--customers", sv_customers, "customers per file")->capture_default_str();
  sv->add_option("--reference", sv_reference, "CSV of name,optimum")->required();
  sv->add_option("--out", sv_out, "write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInvalidInput;
  }

  try {
    if (*gen) return cmd_gen(gen_n, gen_capacity, gen_count, gen_seed, gen_out);
    if (*tr) return cmd_train(train_cfg, train_theta_lb, train_init, train_log);
    if (*grid) return cmd_grid(grid_cfg, grid_candidates, grid_validation, grid_scores);
    if (*solve) {
      finish_cg_config(solve_cfg, solve_pricer, solve_decode);
      return cmd_solve(load_instance(solve_instance, solve_solomon, solve_customers), solve_cfg, solve_policy,
                       solve_trace);
    }
    if (*cmp) {
      finish_cg_config(cmp_cfg, cmp_pricer, cmp_decode);
      std::vector<InstancePtr> instances;
      for (const auto& f : cmp_files) instances.push_back(load_instance(f, false, 0));
      if (instances.empty()) {
        const double q = cmp_capacity > 0.0 ? cmp_capacity : default_capacity(cmp_n);
        for (int k = 0; k < cmp_count; ++k)
          instances.push_back(std::make_shared<const VrptwInstance>(
              generate_instance(cmp_n, q, cmp_cfg.seed + static_cast<std::uint64_t>(k))));
      }
      return cmd_compare(std::move(instances), cmp_cfg, cmp_policy, cmp_out);
    }
    if (*sv) {
      finish_cg_config(sv_cfg, sv_pricer, sv_decode);
      return cmd_solomon_validate(sv_files, sv_customers, sv_reference, sv_cfg, sv_out);
    }
  } catch (const InfeasibleMaster& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInfeasibleMaster;
  } catch (const UnroutableCustomers& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInfeasibleMaster;
  } catch (const IterationCapExceeded& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitTimeLimit;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalidInput;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalidInput;
  } catch (const CheckpointError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalidInput;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitInvalidInput;
}
