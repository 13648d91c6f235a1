#include "cgrl/policy.hpp"

#include <cstring>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <zlib.h>

#include "cgrl/checkpoint.hpp"
#include "cgrl/errors.hpp"
#include "cgrl/route.hpp"

namespace cgrl {
namespace {

using ad::Mat;
using ad::Tape;
using ad::Var;

// Recorded on the first build; guards against silent architecture changes.
constexpr double kGoldenEmbeddingSum = 92.52564118666568;

PolicyConfig small_config() {
  PolicyConfig c;
  c.d_h = 16;
  c.layers = 2;
  c.heads = 4;
  c.ff = 32;
  return c;
}

PricingInstance make_pp(int n, std::uint64_t seed, double theta = 1.1) {
  auto inst = std::make_shared<const VrptwInstance>(generate_instance(n, n <= 20 ? 30.0 : 40.0, seed));
  return PricingInstance(inst, sample_duals(*inst, DualSamplerConfig::constant(theta, seed)));
}

Mat random_mat(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = g(rng);
  return m;
}

// Central differences of a scalar tape function against its backward pass.
void expect_gradients(const std::function<Var(Tape&, std::vector<ad::Parameter>&)>& f,
                      std::vector<ad::Parameter>& params) {
  for (auto& p : params) p.grad.setZero();
  Tape tape;
  tape.backward(f(tape, params));
  const double h = 1e-6;
  for (auto& p : params) {
    for (Eigen::Index k = 0; k < p.value.size(); ++k) {
      const double keep = p.value.data()[k];
      p.value.data()[k] = keep + h;
      Tape up(false);
      const double fu = up.value(f(up, params))(0, 0);
      p.value.data()[k] = keep - h;
      Tape down(false);
      const double fd = down.value(f(down, params))(0, 0);
      p.value.data()[k] = keep;
      EXPECT_NEAR(p.grad.data()[k], (fu - fd) / (2 * h), 1e-6) << p.name << "[" << k << "]";
    }
  }
}

TEST(AutodiffTest, DenseOps) {
  std::mt19937_64 rng(1);
  std::vector<ad::Parameter> ps;
  ps.emplace_back("a", random_mat(4, 3, rng));
  ps.emplace_back("b", random_mat(3, 5, rng));
  ps.emplace_back("row", random_mat(1, 5, rng));
  ps.emplace_back("c", random_mat(2, 5, rng));
  expect_gradients(
      [](Tape& t, std::vector<ad::Parameter>& p) {
        Var x = t.matmul(t.param(p[0]), t.param(p[1]));
        x = t.add_row(x, t.param(p[2]));
        x = t.mul_row(t.tanh_clip(x, 2.0), t.param(p[2]));
        x = t.instance_norm(t.relu(t.add(x, t.scale(x, 0.5))));
        Var y = t.matmul_bt(x, t.param(p[3]));  // 4 x 2
        y = t.concat_cols({y, t.slice_cols(x, 1, 2), t.broadcast_row(t.mean_rows(x), 4)});
        y = t.softmax(t.gather_rows(y, {3, 0, 0, 2}));
        Var col = t.slice_cols(y, 0, 1);
        return t.weighted_sum(t.scatter_rows(col, {2, 0, 1, 3}, 5), {0.3, -1.0, 2.0, 0.5, 1.5});
      },
      ps);
}

TEST(AutodiffTest, MaskedSoftmaxAndPick) {
  std::mt19937_64 rng(2);
  std::vector<ad::Parameter> ps;
  ps.emplace_back("x", random_mat(3, 4, rng));
  ad::Mask m(3, 4);
  m << true, false, true, true,
       false, true, false, false,
       true, true, true, false;
  expect_gradients(
      [&m](Tape& t, std::vector<ad::Parameter>& p) {
        Var x = t.param(p[0]);
        Var s = t.softmax(x, &m);
        Var lp = t.log_softmax_pick(t.add(x, s), m, {2, 1, 0});
        return t.weighted_sum(lp, {1.0, -2.0, 0.7});
      },
      ps);
  Tape t(false);
  const Mat& s = t.value(t.softmax(t.constant(ps[0].value), &m));
  EXPECT_EQ(s(0, 1), 0.0);
  EXPECT_EQ(s(1, 1), 1.0);
  EXPECT_NEAR(s.row(2).sum(), 1.0, 1e-15);
}

TEST(AutodiffTest, FullyMaskedRowIsAnError) {
  Tape t(false);
  ad::Mask m = ad::Mask::Constant(1, 3, false);
  EXPECT_THROW(t.softmax(t.constant(Mat::Zero(1, 3)), &m), std::logic_error);
}

TEST(PolicyParamsTest, ShapesAndCounts) {
  const PolicyConfig c;
  const PolicyParams p(c);
  const std::size_t d = 128, ff = 512;
  const std::size_t per_layer = 4 * d * d + d + 2 * d + d * ff + ff + ff * d + d + 2 * d;
  const std::size_t expected = 7 * d + d + 6 * per_layer + 6 * d * d + 2 * d + d;
  EXPECT_EQ(p.num_scalars(), expected);
  PolicyConfig bad = c;
  bad.heads = 3;
  EXPECT_THROW(PolicyParams{bad}, std::invalid_argument);
}

TEST(EncodeTest, ZeroWeightsGiveBiasEmbeddings) {
  PolicyConfig c = small_config();
  c.layers = 0;
  PolicyParams p(c);
  std::mt19937_64 rng(3);
  p.at("embed.b").value = random_mat(1, c.d_h, rng);
  const PricingInstance pp = make_pp(6, 1);
  Tape t(false);
  const Encoding e = encode(t, p, pp.features().block);
  const Mat& h = t.value(e.nodes);
  for (Eigen::Index r = 0; r < h.rows(); ++r) EXPECT_EQ(h.row(r), p.at("embed.b").value.row(0));
}

TEST(EncodeTest, PermutationEquivariant) {
  PolicyParams p = PolicyParams::random(small_config(), 4);
  const PricingInstance pp = make_pp(7, 2);
  const FeatureBlock& block = pp.features().block;
  std::vector<int> perm(8);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin() + 1, perm.end(), std::mt19937_64(5));
  FeatureBlock permuted(block.rows(), kStaticFeatures);
  for (int r = 0; r < 8; ++r) permuted.row(r) = block.row(perm[static_cast<std::size_t>(r)]);
  Tape t(false);
  const Mat a = t.value(encode(t, p, block).nodes);
  const Mat b = t.value(encode(t, p, permuted).nodes);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 16; ++c) EXPECT_NEAR(b(r, c), a(perm[static_cast<std::size_t>(r)], c), 1e-12);
}

TEST(EncodeTest, IdenticalRowsIdenticalEmbeddings) {
  PolicyParams p = PolicyParams::random(small_config(), 4);
  const PricingInstance pp = make_pp(5, 3);
  FeatureBlock block = pp.features().block;
  block.row(3) = block.row(2);
  Tape t(false);
  const Mat h = t.value(encode(t, p, block).nodes);
  EXPECT_EQ(h.row(2), h.row(3));
}

TEST(EncodeTest, RejectsNonFinite) {
  PolicyParams p = PolicyParams::random(small_config(), 4);
  const PricingInstance pp = make_pp(5, 3);
  FeatureBlock block = pp.features().block;
  block(1, 2) = std::numeric_limits<double>::quiet_NaN();
  Tape t(false);
  EXPECT_THROW(encode(t, p, block), std::invalid_argument);
}

TEST(EncodeTest, GoldenChecksum) {
  PolicyParams p = PolicyParams::random(small_config(), 11);
  const PricingInstance pp = make_pp(6, 11);
  Tape t(false);
  const double sum = t.value(encode(t, p, pp.features().block).nodes).cwiseAbs().sum();
  std::stringstream buf;
  save_params(buf, p);
  PolicyParams q = load_params(buf);
  Tape u(false);
  EXPECT_EQ(u.value(encode(u, q, pp.features().block).nodes).cwiseAbs().sum(), sum);
  EXPECT_NEAR(sum, kGoldenEmbeddingSum, 1e-9);
}

TEST(DecodeStepTest, SingleAllowedMoveHasProbabilityOne) {
  PolicyParams p = PolicyParams::random(small_config(), 6);
  const PricingInstance pp = make_pp(6, 4);
  const VrptwInstance& inst = pp.base();
  DecoderState s = DecoderState::start(inst);
  s.advance(inst, 1);
  for (int j = 2; j <= 6; ++j) s.visited[static_cast<std::size_t>(j)] = 1;
  Tape t(false);
  const Encoding e = encode(t, p, pp.features().block);
  const Mat probs = decode_step(t, p, e, inst, {s});
  EXPECT_EQ(probs(0, 0), 1.0);
  EXPECT_EQ(probs.row(0).sum(), 1.0);
}

TEST(DecodeStepTest, ZeroPointerWeightsAreUniform) {
  PolicyParams p = PolicyParams::random(small_config(), 7);
  p.at("dec.Wp").value.setZero();
  const PricingInstance pp = make_pp(8, 5);
  const VrptwInstance& inst = pp.base();
  Tape t(false);
  const Encoding e = encode(t, p, pp.features().block);
  for (int first = 1; first <= 8; ++first) {
    DecoderState s = DecoderState::start(inst);
    if (!feasible_moves(inst, s)[static_cast<std::size_t>(first)]) continue;
    s.advance(inst, first);
    const auto ok = feasible_moves(inst, s);
    const double allowed = static_cast<double>(std::count(ok.begin(), ok.end(), 1));
    const Mat probs = decode_step(t, p, e, inst, {s});
    for (int j = 0; j <= 8; ++j) EXPECT_NEAR(probs(0, j), ok[static_cast<std::size_t>(j)] ? 1.0 / allowed : 0.0, 1e-15);
  }
}

TEST(DecodeStepTest, RandomStatesNormalizeAndMask) {
  PolicyParams p = PolicyParams::random(small_config(), 8);
  const PricingInstance pp = make_pp(10, 6);
  const VrptwInstance& inst = pp.base();
  Tape t(false);
  const Encoding e = encode(t, p, pp.features().block);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    DecoderState s = DecoderState::start(inst);
    for (;;) {
      auto ok = feasible_moves(inst, s);
      std::vector<int> moves;
      for (int j = 1; j <= 10; ++j)
        if (ok[static_cast<std::size_t>(j)]) moves.push_back(j);
      if (moves.empty() || rng() % 3 == 0) break;
      s.advance(inst, moves[rng() % moves.size()]);
    }
    if (s.last == 0) continue;
    const auto ok = feasible_moves(inst, s);
    const Mat probs = decode_step(t, p, e, inst, {s});
    EXPECT_NEAR(probs.row(0).sum(), 1.0, 1e-6);
    for (int j = 0; j <= 10; ++j)
      if (!ok[static_cast<std::size_t>(j)]) EXPECT_EQ(probs(0, j), 0.0);
  }
}

TEST(DecodeStepTest, EmptyPathWithNoReachableCustomerIsAnError) {
  PolicyParams p = PolicyParams::random(small_config(), 8);
  const PricingInstance pp = make_pp(5, 6);
  DecoderState s = DecoderState::start(pp.base());
  std::fill(s.visited.begin() + 1, s.visited.end(), 1);
  Tape t(false);
  const Encoding e = encode(t, p, pp.features().block);
  EXPECT_THROW(decode_step(t, p, e, pp.base(), {s}), std::logic_error);
}

TEST(RolloutTest, RoutesAreFeasibleAndRewardsConsistent) {
  PolicyParams p = PolicyParams::random(small_config(), 10);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PricingInstance pp = make_pp(12, 100 + seed);
    const Matrix reward = scale_prices(pp.prices());
    Tape t(false);
    RolloutOptions o;
    o.mode = seed % 2 == 0 ? DecodeMode::kGreedy : DecodeMode::kSample;
    o.seed = seed;
    const RolloutResult r = rollout(t, p, pp, o);
    ASSERT_EQ(r.trajectories.size(), 12u);
    for (std::size_t i = 0; i < 12; ++i) {
      const auto& tr = r.trajectories[i];
      EXPECT_TRUE(check_route(tr.route, pp.base()).feasible());
      if (!tr.route.empty()) {
        EXPECT_EQ(tr.route.front(), static_cast<int>(i) + 1);
        EXPECT_NEAR(tr.reward, -tr.reduced_cost / pp.prices().cwiseAbs().maxCoeff(), 1e-12);
      } else {
        EXPECT_EQ(tr.reward, 0.0);
      }
      EXPECT_TRUE(std::isfinite(t.value(r.log_prob)(static_cast<Eigen::Index>(i), 0)));
      EXPECT_LE(t.value(r.log_prob)(static_cast<Eigen::Index>(i), 0), 0.0);
    }
  }
}

TEST(RolloutTest, SamplingIsReproducible) {
  PolicyParams p = PolicyParams::random(small_config(), 12);
  const PricingInstance pp = make_pp(15, 21);
  RolloutOptions o;
  o.mode = DecodeMode::kSample;
  o.seed = 99;
  Tape a(false), b(false);
  const auto ra = rollout(a, p, pp, o);
  const auto rb = rollout(b, p, pp, o);
  for (std::size_t i = 0; i < ra.trajectories.size(); ++i) {
    EXPECT_EQ(ra.trajectories[i].route, rb.trajectories[i].route);
    EXPECT_EQ(ra.trajectories[i].reward, rb.trajectories[i].reward);
  }
  EXPECT_EQ(a.value(ra.log_prob), b.value(rb.log_prob));
}

TEST(RolloutTest, InfeasibleFirstCustomerGivesEmptyRoute) {
  Matrix t(3, 3);
  t << 0, 1, 20,
       1, 0, 20,
       20, 20, 0;
  std::vector<Node> nodes(3);
  nodes[0] = {0, 0, 0, 0, 0, 0, 50};
  nodes[1] = {1, 0, 0, 1, 0, 0, 50};
  nodes[2] = {2, 0, 0, 1, 0, 0, 5};
  auto inst = std::make_shared<const VrptwInstance>("late", nodes, 10.0, t, CoordinateFrame::kRaw);
  const PricingInstance pp(inst, {0.0, 3.0, 30.0});
  PolicyParams params = PolicyParams::random(small_config(), 1);
  Tape tape(false);
  const RolloutResult r = rollout(tape, params, pp, RolloutOptions{});
  EXPECT_EQ(r.trajectories[0].route, std::vector<int>{1});
  EXPECT_TRUE(r.trajectories[1].route.empty());
  EXPECT_EQ(r.trajectories[1].reward, 0.0);
  EXPECT_EQ(tape.value(r.log_prob)(1, 0), 0.0);
}

TEST(RolloutTest, MayStopWithUnvisitedCustomers) {
  // Every customer is reachable alone, but no second visit fits its window.
  const int n = 5;
  std::vector<Node> nodes(n + 1);
  nodes[0] = {0, 0.5, 0.5, 0, 0, 0, 18};
  for (int j = 1; j <= n; ++j) {
    const double angle = 2.0 * M_PI * j / n;
    nodes[static_cast<std::size_t>(j)] = {j, 0.5 + 0.4 * std::cos(angle), 0.5 + 0.4 * std::sin(angle), 1, 0.3, 0, 0.45};
  }
  auto inst = std::make_shared<const VrptwInstance>("star", nodes, 30.0, CoordinateFrame::kUnitSquare);
  const PricingInstance pp(inst, {0.0, 1.0, 1.0, 1.0, 1.0, 1.0});
  PolicyParams params = PolicyParams::random(small_config(), 2);
  Tape tape(false);
  RolloutOptions o;
  o.mode = DecodeMode::kSample;
  const RolloutResult r = rollout(tape, params, pp, o);
  for (int i = 0; i < n; ++i) EXPECT_EQ(r.trajectories[static_cast<std::size_t>(i)].route, std::vector<int>{i + 1});
}

TEST(RolloutTest, ReplayReproducesLogProbabilities) {
  PolicyParams p = PolicyParams::random(small_config(), 13);
  const PricingInstance pp = make_pp(9, 31);
  RolloutOptions o;
  o.mode = DecodeMode::kSample;
  o.seed = 5;
  Tape a(false);
  const RolloutResult ra = rollout(a, p, pp, o);
  std::vector<std::vector<int>> routes;
  for (const auto& tr : ra.trajectories) routes.push_back(tr.route);
  RolloutOptions replay;
  replay.replay = &routes;
  Tape b(false);
  const RolloutResult rb = rollout(b, p, pp, replay);
  EXPECT_EQ(a.value(ra.log_prob), b.value(rb.log_prob));
  std::vector<std::vector<int>> bad = routes;
  bad[0].push_back(bad[0].front());
  replay.replay = &bad;
  Tape c(false);
  EXPECT_THROW(rollout(c, p, pp, replay), std::invalid_argument);
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  const PolicyParams p = PolicyParams::random(small_config(), 14);
  std::stringstream buf;
  save_params(buf, p);
  const PolicyParams q = load_params(buf, small_config());
  EXPECT_TRUE(p == q);
}

TEST(CheckpointTest, TruncatedFileFailsChecksum) {
  const PolicyParams p = PolicyParams::random(small_config(), 15);
  std::stringstream buf;
  save_params(buf, p);
  std::string bytes = buf.str();
  bytes.resize(bytes.size() - 100);
  std::stringstream cut(bytes);
  try {
    load_params(cut);
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
  }
}

TEST(CheckpointTest, ShapeMismatchNamesField) {
  const PolicyParams p = PolicyParams::random(small_config(), 16);
  std::stringstream buf;
  save_params(buf, p);
  PolicyConfig runtime = small_config();
  runtime.d_h = 32;
  try {
    load_params(buf, runtime);
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("d_h"), std::string::npos);
  }
}

TEST(CheckpointTest, VersionMismatch) {
  const PolicyParams p = PolicyParams::random(small_config(), 17);
  std::stringstream buf;
  save_params(buf, p);
  std::string bytes = buf.str();
  bytes[8] = 9;  // version field follows the 8-byte magic
  const auto body = bytes.size() - 4;
  const auto sum = static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(body)));
  std::memcpy(bytes.data() + body, &sum, 4);
  std::stringstream bumped(bytes);
  try {
    load_params(bumped);
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

}  // namespace
}  // namespace cgrl
