#include "cgrl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cgrl/checkpoint.hpp"
#include "text_util.hpp"

namespace cgrl {

void TrainConfig::validate() const {
  if (epochs <= 0 || instances_per_epoch <= 0 || batch_size <= 0 || n < 2)
    throw std::invalid_argument("TrainConfig: epochs, instances, batch size must be positive and n >= 2");
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: step size must be positive");
  if (theta_lb && !(*theta_lb >= 0.0 && *theta_lb <= 1.1))
    throw std::invalid_argument("TrainConfig: theta lower bound must lie in [0, 1.1]");
  if (!(theta >= 0.0 && theta <= 1.1)) throw std::invalid_argument("TrainConfig: theta must lie in [0, 1.1]");
  if (checkpoint_every < 0) throw std::invalid_argument("TrainConfig: checkpoint cadence must be >= 0");
  policy.validate();
}

Adam::Adam(const PolicyParams& params, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& t : params.tensors()) {
    m_.push_back(ad::Mat::Zero(t.value.rows(), t.value.cols()));
    v_.push_back(ad::Mat::Zero(t.value.rows(), t.value.cols()));
  }
}

void Adam::step(PolicyParams& params) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto& ts = params.tensors();
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const auto& g = ts[k].grad.array();
    m_[k].array() = beta1_ * m_[k].array() + (1.0 - beta1_) * g;
    v_[k].array() = beta2_ * v_[k].array() + (1.0 - beta2_) * g * g;
    ts[k].value.array() -= lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
  }
}

std::vector<double> shared_baseline_advantages(const std::vector<double>& rewards) {
  if (rewards.empty()) return {};
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
  std::vector<double> adv(rewards.size());
  std::transform(rewards.begin(), rewards.end(), adv.begin(), [mean](double r) { return r - mean; });
  return adv;
}

SurrogateSample reinforce_surrogate(ad::Tape& tape, PolicyParams& params, const PricingInstance& pp,
                                    std::uint64_t seed, double scale,
                                    const std::vector<std::vector<int>>* replay, ad::Var* loss_out) {
  RolloutOptions o;
  o.mode = DecodeMode::kSample;
  o.seed = seed;
  o.replay = replay;
  const RolloutResult r = rollout(tape, params, pp, o);
  SurrogateSample s;
  for (const auto& tr : r.trajectories) {
    s.routes.push_back(tr.route);
    s.rewards.push_back(tr.reward);
  }
  std::vector<double> w = shared_baseline_advantages(s.rewards);
  for (double& x : w) x *= -scale;
  const ad::Var loss = tape.weighted_sum(r.log_prob, w);
  s.loss = tape.value(loss)(0, 0);
  if (loss_out != nullptr) *loss_out = loss;
  return s;
}

PricingInstance training_instance(const TrainConfig& cfg, int epoch, int index, std::uint64_t* rollout_seed) {
  std::uint64_t h = detail::splitmix64(cfg.seed);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(epoch));
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(index));
  auto inst = std::make_shared<const VrptwInstance>(generate_instance(cfg.n, cfg.effective_capacity(), h));
  DualSamplerConfig ds = cfg.theta_lb ? DualSamplerConfig::interval(*cfg.theta_lb, detail::splitmix64(h + 1))
                                      : DualSamplerConfig::constant(cfg.theta, detail::splitmix64(h + 1));
  if (rollout_seed != nullptr) *rollout_seed = detail::splitmix64(h + 2);
  return PricingInstance(inst, sample_duals(*inst, ds));
}

namespace {

void write_checkpoint(const TrainConfig& cfg, const PolicyParams& params, int epoch, bool final) {
  if (cfg.checkpoint_path.empty()) return;
  if (final) {
    save_params(cfg.checkpoint_path, params);
  } else {
    save_params(cfg.checkpoint_path + ".epoch" + std::to_string(epoch), params);
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, PolicyParams init, std::ostream* log_csv,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  if (!(init.config() == cfg.policy)) throw std::invalid_argument("train: initial params do not match the policy config");
  TrainResult out{std::move(init), {}};
  PolicyParams& params = out.params;
  Adam adam(params, cfg.lr);
  const auto t0 = std::chrono::steady_clock::now();
  if (log_csv != nullptr) *log_csv << "epoch,mean_reward,loss,wall_seconds\n";

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double reward_sum = 0.0, loss_sum = 0.0;
    std::size_t reward_count = 0;
    int batches = 0;
    for (int start = 0; start < cfg.instances_per_epoch; start += cfg.batch_size) {
      const int size = std::min(cfg.batch_size, cfg.instances_per_epoch - start);
      params.zero_grad();
      double batch_loss = 0.0;
      for (int b = 0; b < size; ++b) {
        std::uint64_t rollout_seed = 0;
        const PricingInstance pp = training_instance(cfg, epoch, start + b, &rollout_seed);
        ad::Tape tape;
        ad::Var loss;
        const double scale = 1.0 / (static_cast<double>(size) * static_cast<double>(cfg.n));
        const SurrogateSample s = reinforce_surrogate(tape, params, pp, rollout_seed, scale, nullptr, &loss);
        tape.backward(loss);
        batch_loss += s.loss;
        reward_sum += std::accumulate(s.rewards.begin(), s.rewards.end(), 0.0);
        reward_count += s.rewards.size();
      }
      bool finite = std::isfinite(batch_loss);
      for (const auto& t : params.tensors()) finite = finite && t.grad.allFinite();
      if (!finite) {
        std::ostringstream msg;
        msg << "non-finite loss or gradient in epoch " << epoch << ", batch starting at instance " << start
            << " (training seed " << cfg.seed << ")";
        throw TrainingDiverged(msg.str());
      }
      adam.step(params);
      loss_sum += batch_loss;
      ++batches;
    }
    EpochLog e;
    e.epoch = epoch;
    e.mean_reward = reward_sum / static_cast<double>(std::max<std::size_t>(1, reward_count));
    e.loss = loss_sum / batches;
    e.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.log.push_back(e);
    if (log_csv != nullptr) {
      *log_csv << e.epoch << ',' << detail::fmt_double(e.mean_reward) << ',' << detail::fmt_double(e.loss) << ','
               << detail::fmt_double(e.wall_seconds) << '\n';
      log_csv->flush();
    }
    if (on_epoch) on_epoch(e);
    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 && epoch != cfg.epochs)
      write_checkpoint(cfg, params, epoch, false);
  }
  write_checkpoint(cfg, params, cfg.epochs, true);
  return out;
}

std::vector<PricingInstance> validation_set(int n, double capacity, int count, std::uint64_t seed) {
  std::vector<PricingInstance> set;
  for (int k = 0; k < count; ++k) {
    const std::uint64_t h = detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(k)));
    auto inst = std::make_shared<const VrptwInstance>(generate_instance(n, capacity, h));
    set.emplace_back(inst, sample_duals(*inst, DualSamplerConfig::constant(1.1, detail::splitmix64(h + 1))));
  }
  return set;
}

double validation_score(PolicyParams& params, const std::vector<PricingInstance>& set) {
  if (set.empty()) return 0.0;
  double total = 0.0;
  for (const auto& pp : set) {
    ad::Tape tape(false);
    const RolloutResult r = rollout(tape, params, pp, RolloutOptions{});
    double best = 0.0;
    for (const auto& tr : r.trajectories) best = std::min(best, tr.reduced_cost);
    total += best;
  }
  return total / static_cast<double>(set.size());
}

GridResult theta_grid_search(const std::vector<double>& candidates, const TrainConfig& base, int validation_size,
                             std::ostream* log) {
  if (candidates.empty()) throw std::invalid_argument("theta_grid_search: no candidates");
  for (double c : candidates)
    if (!(c >= 0.0 && c <= 1.1)) throw std::invalid_argument("theta_grid_search: candidates must lie in [0, 1.1]");
  const auto set = validation_set(base.n, base.effective_capacity(), validation_size, base.seed ^ 0x5eedULL);
  GridResult out;
  double best_score = 0.0;
  if (log != nullptr) *log << "theta_lb,score\n";
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    TrainConfig cfg = base;
    cfg.checkpoint_path.clear();
    if (candidates[k] >= 1.1) {
      cfg.theta_lb.reset();
      cfg.theta = 1.1;
    } else {
      cfg.theta_lb = candidates[k];
    }
    TrainResult r = train(cfg, PolicyParams::random(cfg.policy, cfg.seed));
    const double score = validation_score(r.params, set);
    out.scores.push_back(score);
    if (log != nullptr) *log << detail::fmt_double(candidates[k]) << ',' << detail::fmt_double(score) << '\n';
    if (k == 0 || score < best_score) {
      best_score = score;
      out.best_theta_lb = candidates[k];
      out.best_params = std::move(r.params);
    }
  }
  return out;
}

}  // namespace cgrl
