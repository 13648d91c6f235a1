#include "cgrl/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "cgrl/checkpoint.hpp"
#include "oracles/gradcheck.hpp"

namespace cgrl {
namespace {

PolicyConfig tiny_policy() {
  PolicyConfig c;
  c.d_h = 16;
  c.layers = 2;
  c.heads = 4;
  c.ff = 32;
  return c;
}

TrainConfig tiny_train() {
  TrainConfig c;
  c.epochs = 2;
  c.instances_per_epoch = 5;
  c.batch_size = 2;
  c.n = 6;
  c.lr = 1e-3;
  c.seed = 3;
  c.policy = tiny_policy();
  return c;
}

PricingInstance make_pp(int n, std::uint64_t seed) {
  auto inst = std::make_shared<const VrptwInstance>(generate_instance(n, default_capacity(n), seed));
  return PricingInstance(inst, sample_duals(*inst, DualSamplerConfig::constant(1.1, seed)));
}

TEST(AdvantageTest, MeanCentered) {
  const auto adv = shared_baseline_advantages({3, 1, 2});
  EXPECT_EQ(adv, (std::vector<double>{1, -1, 0}));
  const auto single = shared_baseline_advantages({0.7});
  EXPECT_EQ(single, std::vector<double>{0.0});
  const auto many = shared_baseline_advantages({0.1, -0.3, 0.25, 0.9, -1.2});
  EXPECT_NEAR(std::accumulate(many.begin(), many.end(), 0.0), 0.0, 1e-9);
}

TEST(SurrogateTest, SingleTrajectoryHasZeroGradient) {
  PolicyParams p = PolicyParams::random(tiny_policy(), 1);
  const PricingInstance pp = make_pp(6, 2);
  std::vector<std::vector<int>> one;
  {
    ad::Tape t(false);
    one.push_back(reinforce_surrogate(t, p, pp, 4, 1.0).routes.front());
  }
  p.zero_grad();
  ad::Tape tape;
  ad::Var loss;
  const auto s = reinforce_surrogate(tape, p, pp, 4, 1.0, &one, &loss);
  tape.backward(loss);
  EXPECT_EQ(s.loss, 0.0);
  for (const auto& t : p.tensors()) EXPECT_EQ(t.grad.cwiseAbs().maxCoeff(), 0.0) << t.name;
}

TEST(SurrogateTest, GradientMatchesFiniteDifferences) {
  PolicyParams p = PolicyParams::random(tiny_policy(), 5);
  const PricingInstance pp = make_pp(6, 7);
  const auto samples = oracle::reinforce_gradient_check(p, pp, 11, 120);
  ASSERT_GE(samples.size(), 100u);
  for (const auto& s : samples)
    EXPECT_LE(s.rel_error, 1e-4) << s.tensor << "[" << s.index << "] analytic " << s.analytic << " numeric " << s.numeric;
}

TEST(AdamTest, FirstStepMovesBySignedStepSize) {
  PolicyParams p = PolicyParams::random(tiny_policy(), 2);
  const PolicyParams before = p;
  for (auto& t : p.tensors()) t.grad.setConstant(0.5);
  p.tensors()[0].grad(0, 0) = -2.0;
  Adam adam(p, 0.01);
  adam.step(p);
  EXPECT_NEAR(p.tensors()[0].value(0, 0) - before.tensors()[0].value(0, 0), 0.01, 1e-9);
  EXPECT_NEAR(p.tensors()[1].value(0, 0) - before.tensors()[1].value(0, 0), -0.01, 1e-9);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(TrainTest, DeterministicWithPartialBatch) {
  const TrainConfig cfg = tiny_train();
  std::stringstream log_a, log_b;
  const TrainResult a = train(cfg, PolicyParams::random(cfg.policy, 1), &log_a);
  const TrainResult b = train(cfg, PolicyParams::random(cfg.policy, 1), &log_b);
  EXPECT_TRUE(a.params == b.params);
  EXPECT_FALSE(a.params == PolicyParams::random(cfg.policy, 1));
  std::stringstream ca, cb;
  save_params(ca, a.params);
  save_params(cb, b.params);
  EXPECT_EQ(ca.str(), cb.str());
  ASSERT_EQ(a.log.size(), 2u);
  for (const auto& e : a.log) {
    EXPECT_TRUE(std::isfinite(e.loss));
    EXPECT_TRUE(std::isfinite(e.mean_reward));
  }
  std::string header;
  std::getline(log_a, header);
  EXPECT_EQ(header, "epoch,mean_reward,loss,wall_seconds");
}

TEST(TrainTest, RejectsBadConfig) {
  TrainConfig cfg = tiny_train();
  cfg.batch_size = 0;
  EXPECT_THROW(train(cfg, PolicyParams::random(cfg.policy, 1)), std::invalid_argument);
  cfg = tiny_train();
  EXPECT_THROW(train(cfg, PolicyParams::random(PolicyConfig{}, 1)), std::invalid_argument);
}

TEST(TrainTest, InstancesArePureFunctionsOfSeeds) {
  const TrainConfig cfg = tiny_train();
  std::uint64_t s1 = 0, s2 = 0;
  const auto a = training_instance(cfg, 1, 3, &s1);
  const auto b = training_instance(cfg, 1, 3, &s2);
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  EXPECT_EQ(s1, s2);
  EXPECT_NE(fingerprint(a), fingerprint(training_instance(cfg, 2, 3, nullptr)));
}

TEST(GridSearchTest, SingleCandidateAndDeterministicWinner) {
  TrainConfig cfg = tiny_train();
  cfg.epochs = 1;
  const GridResult one = theta_grid_search({0.6}, cfg, 5);
  EXPECT_EQ(one.best_theta_lb, 0.6);
  ASSERT_EQ(one.scores.size(), 1u);
  const GridResult a = theta_grid_search({0.35, 1.1}, cfg, 5);
  const GridResult b = theta_grid_search({0.35, 1.1}, cfg, 5);
  EXPECT_EQ(a.best_theta_lb, b.best_theta_lb);
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_THROW(theta_grid_search({}, cfg, 5), std::invalid_argument);
}

}  // namespace
}  // namespace cgrl
