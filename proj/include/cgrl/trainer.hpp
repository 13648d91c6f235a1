#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgrl/policy.hpp"

namespace cgrl {

struct TrainConfig {
  int epochs = 20;
  int instances_per_epoch = 1000;
  int batch_size = 64;
  double lr = 1e-4;
  int n = 20;
  double capacity = 0.0;  // 0 = default_capacity(n)
  // Training duals: theta fixed, or drawn from [theta_lb, 1.1] per instance.
  double theta = 1.1;
  std::optional<double> theta_lb;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;     // epochs between checkpoints, 0 = final only
  std::string checkpoint_path;  // empty = no checkpoint files
  PolicyConfig policy;

  void validate() const;
  double effective_capacity() const { return capacity > 0.0 ? capacity : default_capacity(n); }
};

struct EpochLog {
  int epoch = 0;
  double mean_reward = 0.0;
  double loss = 0.0;  // mean surrogate over the epoch's batches
  double wall_seconds = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Adaptive-moment optimizer holding first and second moments per tensor.
class Adam {
 public:
  explicit Adam(const PolicyParams& params, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(PolicyParams& params);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<ad::Mat> m_, v_;
};

// Rewards minus their mean.
std::vector<double> shared_baseline_advantages(const std::vector<double>& rewards);

struct SurrogateSample {
  std::vector<std::vector<int>> routes;
  std::vector<double> rewards;
  double loss = 0.0;
};

// Sampled forced-start rollout on one instance; records
// loss = -scale * sum_i (r_i - mean r) log p_i on `tape`. With `replay` the
// given routes are scored instead of sampled.
SurrogateSample reinforce_surrogate(ad::Tape& tape, PolicyParams& params, const PricingInstance& pp,
                                    std::uint64_t seed, double scale,
                                    const std::vector<std::vector<int>>* replay = nullptr,
                                    ad::Var* loss_out = nullptr);

// Instance, duals and sampling seed for training sample `index` of `epoch`.
PricingInstance training_instance(const TrainConfig& cfg, int epoch, int index, std::uint64_t* rollout_seed);

struct TrainResult {
  PolicyParams params;
  std::vector<EpochLog> log;
};

// `log_csv`, when given, receives a header and one row per epoch.
TrainResult train(const TrainConfig& cfg, PolicyParams init, std::ostream* log_csv = nullptr,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// Fixed validation pricing problems: theta = 1.1, seeds derived from `seed`.
std::vector<PricingInstance> validation_set(int n, double capacity, int count, std::uint64_t seed);

// Mean over the set of the best greedy trajectory reduced cost.
double validation_score(PolicyParams& params, const std::vector<PricingInstance>& set);

struct GridResult {
  double best_theta_lb = 1.1;
  std::vector<double> scores;  // per candidate, same order
  PolicyParams best_params;
};

// One model per candidate lower bound (1.1 means theta fixed at 1.1); the
// lowest validation score wins, ties to the earlier candidate.
GridResult theta_grid_search(const std::vector<double>& candidates, const TrainConfig& base,
                             int validation_size = 50, std::ostream* log = nullptr);

}  // namespace cgrl
