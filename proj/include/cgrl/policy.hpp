#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cgrl/autodiff.hpp"
#include "cgrl/instance.hpp"

namespace cgrl {

struct PolicyConfig {
  int d_h = 128;
  int layers = 6;
  int heads = 8;
  int ff = 512;
  double clip = 10.0;
  int features = kStaticFeatures;

  void validate() const;
  bool operator==(const PolicyConfig&) const = default;
};

class PolicyParams {
 public:
  PolicyParams() = default;
  // Every tensor at its declared shape, filled with zeros (norm gains at 1).
  explicit PolicyParams(const PolicyConfig& cfg);
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases.
  static PolicyParams random(const PolicyConfig& cfg, std::uint64_t seed);

  const PolicyConfig& config() const { return cfg_; }
  std::vector<ad::Parameter>& tensors() { return tensors_; }
  const std::vector<ad::Parameter>& tensors() const { return tensors_; }
  ad::Parameter& at(const std::string& name);
  const ad::Parameter& at(const std::string& name) const;
  std::size_t num_scalars() const;
  void zero_grad();
  bool all_finite() const;

 private:
  void add(const std::string& name, int rows, int cols);

  PolicyConfig cfg_;
  std::vector<ad::Parameter> tensors_;
  std::map<std::string, std::size_t> index_;
};

bool operator==(const PolicyParams& a, const PolicyParams& b);

// Node embeddings and everything the decoder reuses across steps.
struct Encoding {
  ad::Var nodes;        // (n+1) x d_h
  ad::Var graph;        // 1 x d_h, mean of the node embeddings
  ad::Var graph_query;  // graph embedding projected into the query space
  ad::Var last_query;   // per-node projection of the last-node context
  std::vector<ad::Var> keys;    // one (n+1) x d_h/heads block per head
  std::vector<ad::Var> values;
  ad::Var pointer_keys;  // (n+1) x d_h
};

Encoding encode(ad::Tape& tape, PolicyParams& params, const FeatureBlock& block);

// Dynamic state of one trajectory.
struct DecoderState {
  double time = 0.0;  // departure time from `last`, waiting and service included
  double load = 0.0;
  int last = 0;
  int step = 0;
  std::vector<char> visited;  // by node id
  bool done = false;

  static DecoderState start(const VrptwInstance& inst);
  // Applies a move to node `j` (0 returns to the depot and finishes).
  void advance(const VrptwInstance& inst, int j);
};

// Allowed moves: unvisited customers reachable within capacity, their window
// and a return by the horizon; the depot once the path is nonempty.
std::vector<char> feasible_moves(const VrptwInstance& inst, const DecoderState& s);

// Clipped pointer logits for every state (rows) over every node (columns).
ad::Var decode_logits(ad::Tape& tape, PolicyParams& params, const Encoding& enc,
                      const VrptwInstance& inst, const std::vector<DecoderState>& states,
                      const ad::Mask& mask);

// Probability rows of the masked softmax; masked entries are exactly zero.
ad::Mat decode_step(ad::Tape& tape, PolicyParams& params, const Encoding& enc,
                    const VrptwInstance& inst, const std::vector<DecoderState>& states);

enum class DecodeMode { kGreedy, kSample };

struct RolloutOptions {
  DecodeMode mode = DecodeMode::kGreedy;
  std::uint64_t seed = 0;
  // Forced first customers, one trajectory each; empty means 1..n.
  std::vector<int> first_nodes;
  // When set, replays these routes instead of choosing actions.
  const std::vector<std::vector<int>>* replay = nullptr;
};

struct Trajectory {
  std::vector<int> route;  // customers only
  double reward = 0.0;     // sum of scaled negated prices along the closed route
  double reduced_cost = 0.0;
};

struct RolloutResult {
  std::vector<Trajectory> trajectories;
  // Column of per-trajectory log-probabilities over the chosen actions after
  // the forced first one.
  ad::Var log_prob;
};

RolloutResult rollout(ad::Tape& tape, PolicyParams& params, const PricingInstance& pp,
                      const RolloutOptions& opts);

}  // namespace cgrl
