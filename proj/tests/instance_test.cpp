#include "cgrl/instance.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cgrl/errors.hpp"

namespace cgrl {
namespace {

TEST(GenerateInstanceTest, DistributionBounds) {
  const VrptwInstance inst = generate_instance(20, 30.0, 7);
  ASSERT_EQ(inst.num_nodes(), 21);
  EXPECT_EQ(inst.capacity(), 30.0);
  const Node& depot = inst.node(0);
  EXPECT_EQ(depot.tw_open, 0.0);
  EXPECT_EQ(depot.tw_close, 18.0);
  EXPECT_EQ(depot.demand, 0.0);
  EXPECT_EQ(depot.service, 0.0);
  for (int i = 1; i <= 20; ++i) {
    const Node& v = inst.node(i);
    EXPECT_GE(v.demand, 1.0);
    EXPECT_LE(v.demand, 10.0);
    EXPECT_EQ(v.demand, std::floor(v.demand));
    EXPECT_GE(v.service, 0.2);
    EXPECT_LE(v.service, 0.5);
    EXPECT_EQ(v.tw_open, std::floor(v.tw_open));
    EXPECT_GE(v.tw_open, 0.0);
    EXPECT_LE(v.tw_open, 16.0);
    EXPECT_GE(v.tw_close - v.tw_open, std::min(2.0, 18.0 - v.tw_open));
    EXPECT_LE(v.tw_close, 18.0);
    EXPECT_GE(v.x, 0.0);
    EXPECT_LT(v.x, 1.0);
    EXPECT_GE(v.y, 0.0);
    EXPECT_LT(v.y, 1.0);
  }
}

TEST(GenerateInstanceTest, SmallestInstanceHasZeroDiagonal) {
  const VrptwInstance inst = generate_instance(2, 30.0, 0);
  EXPECT_EQ(inst.num_nodes(), 3);
  EXPECT_EQ(inst.travel(0, 0), 0.0);
  EXPECT_EQ(inst.travel(1, 2), inst.travel(2, 1));
}

TEST(GenerateInstanceTest, SameSeedSameBytes) {
  const VrptwInstance a = generate_instance(20, 30.0, 7);
  const VrptwInstance b = generate_instance(20, 30.0, 7);
  EXPECT_TRUE(a.travel_matrix() == b.travel_matrix());
  std::ostringstream sa, sb;
  write_instance(sa, a);
  write_instance(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  const VrptwInstance c = generate_instance(20, 30.0, 8);
  EXPECT_FALSE(a.travel_matrix() == c.travel_matrix());
}

TEST(GenerateInstanceTest, RejectsTooFewCustomers) {
  EXPECT_THROW(generate_instance(1, 30.0, 0), std::invalid_argument);
  EXPECT_THROW(generate_instance(5, 0.0, 0), std::invalid_argument);
}

TEST(GenerateInstanceTest, TravelIsEuclidean) {
  const VrptwInstance inst = generate_instance(10, 30.0, 3);
  for (int i = 0; i < inst.num_nodes(); ++i)
    for (int j = 0; j < inst.num_nodes(); ++j)
      EXPECT_DOUBLE_EQ(inst.travel(i, j), std::hypot(inst.node(i).x - inst.node(j).x,
                                                     inst.node(i).y - inst.node(j).y));
}

TEST(SampleDualsTest, PositiveCountInRange) {
  const VrptwInstance inst = generate_instance(20, 30.0, 7);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto duals = sample_duals(inst, DualSamplerConfig::constant(1.1, seed));
    ASSERT_EQ(duals.size(), 21u);
    EXPECT_EQ(duals[0], 0.0);
    const auto positive = std::count_if(duals.begin() + 1, duals.end(), [](double d) { return d > 0.0; });
    EXPECT_GE(positive, 10);
    EXPECT_LE(positive, 20);
  }
}

TEST(SampleDualsTest, ZeroThetaGivesZeroDuals) {
  const VrptwInstance inst = generate_instance(8, 30.0, 1);
  const auto duals = sample_duals(inst, DualSamplerConfig::constant(0.0, 4));
  for (double d : duals) EXPECT_EQ(d, 0.0);
}

TEST(SampleDualsTest, BoundedByScaledColumnMaximum) {
  const VrptwInstance inst = generate_instance(6, 30.0, 11);
  // Column maxima recomputed from coordinates, not from the travel matrix.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto duals = sample_duals(inst, DualSamplerConfig::constant(1.1, seed));
    for (int j = 1; j <= 6; ++j) {
      double t_max = 0.0;
      for (int i = 0; i <= 6; ++i)
        t_max = std::max(t_max, std::hypot(inst.node(i).x - inst.node(j).x, inst.node(i).y - inst.node(j).y));
      EXPECT_LE(duals[static_cast<std::size_t>(j)], 1.1 * t_max + 1e-15);
      EXPECT_GE(duals[static_cast<std::size_t>(j)], 0.0);
    }
  }
}

TEST(SampleDualsTest, IntervalThetaIsReproducible) {
  const VrptwInstance inst = generate_instance(12, 30.0, 2);
  const auto a = sample_duals(inst, DualSamplerConfig::interval(0.2, 9));
  const auto b = sample_duals(inst, DualSamplerConfig::interval(0.2, 9));
  EXPECT_EQ(a, b);
  EXPECT_THROW(sample_duals(inst, DualSamplerConfig::constant(1.5, 9)), std::invalid_argument);
}

TEST(SampleDualsTest, AtLeastHalfPositiveProperty) {
  for (int n : {2, 3, 7, 20, 35}) {
    const VrptwInstance inst = generate_instance(n, 40.0, static_cast<std::uint64_t>(n));
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto duals = sample_duals(inst, DualSamplerConfig::constant(0.5, seed));
      const auto positive = std::count_if(duals.begin() + 1, duals.end(), [](double d) { return d > 0.0; });
      EXPECT_GE(positive, (n + 1) / 2);
    }
  }
}

TEST(PricingInstanceTest, PricesAreTravelMinusHeadDual) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = std::make_shared<const VrptwInstance>(generate_instance(2 + trial % 9, 30.0, rng()));
    const auto duals = sample_duals(*inst, DualSamplerConfig::constant(1.1, rng()));
    const PricingInstance pp(inst, duals);
    for (int i = 0; i < inst->num_nodes(); ++i)
      for (int j = 0; j < inst->num_nodes(); ++j)
        if (i != j) EXPECT_EQ(pp.price(i, j), inst->travel(i, j) - duals[static_cast<std::size_t>(j)]);
  }
}

TEST(PricingInstanceTest, DepotDualMustBeZero) {
  auto inst = std::make_shared<const VrptwInstance>(generate_instance(3, 30.0, 1));
  EXPECT_THROW(PricingInstance(inst, {1.0, 0.0, 0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(PricingInstance(inst, {0.0, 0.0}), std::invalid_argument);
}

TEST(NormalizeTest, BoundaryScaling) {
  std::vector<Node> nodes(3);
  nodes[0] = {0, 0.5, 0.5, 0.0, 0.0, 0.0, 18.0};
  nodes[1] = {1, 0.1, 0.2, 10.0, 0.3, 4.0, 9.0};
  nodes[2] = {2, 0.9, 0.7, 5.0, 0.2, 0.0, 18.0};
  const VrptwInstance inst("tiny", nodes, 30.0, CoordinateFrame::kUnitSquare);
  const ScaledFeatures f = normalize(inst, {0.0, 3.6, 0.0});
  EXPECT_DOUBLE_EQ(f.block(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(f.block(0, 3), 1.0);
  EXPECT_DOUBLE_EQ(f.block(1, 4), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(f.block(1, 6), 0.2);
  EXPECT_DOUBLE_EQ(f.block(1, 5), 0.3 / 18.0);
  EXPECT_DOUBLE_EQ(f.block(1, 0), 0.1);  // unit frame is left untouched
  EXPECT_DOUBLE_EQ(f.travel(1, 2), inst.travel(1, 2) / 18.0);
}

TEST(NormalizeTest, PreservesOrderingWithinFeatureFamilies) {
  const VrptwInstance inst = generate_instance(15, 40.0, 21);
  const auto duals = sample_duals(inst, DualSamplerConfig::constant(1.1, 3));
  const ScaledFeatures f = normalize(inst, duals);
  auto raw = [&](int i, int k) {
    const Node& v = inst.node(i);
    const double vals[] = {v.x, v.y, v.tw_open, v.tw_close, v.demand, v.service,
                           duals[static_cast<std::size_t>(i)]};
    return vals[k];
  };
  for (int k = 0; k < kStaticFeatures; ++k)
    for (int i = 0; i < inst.num_nodes(); ++i)
      for (int j = 0; j < inst.num_nodes(); ++j)
        if (raw(i, k) < raw(j, k)) EXPECT_LT(f.block(i, k), f.block(j, k)) << "feature " << k;
}

TEST(ScalePricesTest, DirectFormula) {
  Matrix p(1, 2);
  p << -4.0, 2.0;
  const Matrix r = scale_prices(p);
  EXPECT_DOUBLE_EQ(r(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(r(0, 1), -0.5);

  Matrix single(1, 1);
  single << 3.0;
  EXPECT_DOUBLE_EQ(scale_prices(single)(0, 0), -1.0);

  const Matrix zeros = Matrix::Zero(3, 3);
  EXPECT_TRUE(scale_prices(zeros).isZero(0.0));
}

TEST(ScalePricesTest, BoundedAndAttainsExtreme) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix p(4, 5);
    for (Eigen::Index k = 0; k < p.size(); ++k) p.data()[k] = u(rng);
    const Matrix r = scale_prices(p);
    EXPECT_LE(r.maxCoeff(), 1.0);
    EXPECT_GE(r.minCoeff(), -1.0);
    EXPECT_DOUBLE_EQ(r.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(NativeFormatTest, RoundTripsGeneratedAndExplicitMatrices) {
  const VrptwInstance inst = generate_instance(9, 30.0, 4);
  std::stringstream ss;
  write_instance(ss, inst);
  const VrptwInstance back = read_instance(ss);
  EXPECT_TRUE(back.travel_matrix() == inst.travel_matrix());
  std::ostringstream again;
  write_instance(again, back);
  EXPECT_EQ(again.str(), ss.str());

  Matrix t(3, 3);
  t << 0, 1, 2, 1, 0, 3, 2, 3, 0;
  std::vector<Node> nodes(3);
  nodes[0] = {0, 0, 0, 0, 0, 0, 10};
  nodes[1] = {1, 1, 0, 1, 0, 0, 10};
  nodes[2] = {2, 0, 1, 1, 0, 0, 10};
  const VrptwInstance custom("m", nodes, 5.0, t, CoordinateFrame::kRaw);
  std::stringstream cs;
  write_instance(cs, custom);
  EXPECT_TRUE(read_instance(cs).travel_matrix() == t);
}

TEST(NativeFormatTest, RejectsWrongVersionAndShortTables) {
  std::istringstream bad_version("cgrl-instance v9\n");
  EXPECT_THROW(read_instance(bad_version), ParseError);
  std::istringstream short_table(
      "cgrl-instance v1\nname x\ncustomers 2\ncapacity 10\nframe unit\nnodes\n0 0 0 0 0 0 18\n");
  try {
    read_instance(short_table);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7);
  }
}

TEST(VrptwInstanceTest, RejectsInconsistentData) {
  std::vector<Node> nodes(2);
  nodes[0] = {0, 0, 0, 0, 0, 0, 10};
  nodes[1] = {1, 1, 1, 1, 0, 5, 4};
  EXPECT_THROW(VrptwInstance("x", nodes, 10.0, CoordinateFrame::kRaw), InvalidInstance);
  nodes[1].tw_close = 12;
  EXPECT_THROW(VrptwInstance("x", nodes, 10.0, CoordinateFrame::kRaw), InvalidInstance);
  nodes[1].tw_close = 8;
  Matrix asym(2, 2);
  asym << 0, 1, 2, 0;
  EXPECT_THROW(VrptwInstance("x", nodes, 10.0, asym, CoordinateFrame::kRaw), InvalidInstance);
}

TEST(FingerprintTest, DistinguishesDuals) {
  auto inst = std::make_shared<const VrptwInstance>(generate_instance(6, 30.0, 1));
  const PricingInstance a(inst, sample_duals(*inst, DualSamplerConfig::constant(1.1, 1)));
  const PricingInstance b(inst, sample_duals(*inst, DualSamplerConfig::constant(1.1, 1)));
  const PricingInstance c(inst, sample_duals(*inst, DualSamplerConfig::constant(1.1, 2)));
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  EXPECT_NE(fingerprint(a), fingerprint(c));
}

}  // namespace
}  // namespace cgrl
