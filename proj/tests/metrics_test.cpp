#include "cgrl/metrics.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cgrl/errors.hpp"

namespace cgrl {
namespace {

CgTrace trace(const std::vector<std::pair<double, double>>& obj_time) {
  CgTrace t;
  int it = 0;
  for (const auto& [obj, time] : obj_time) {
    IterationRecord r;
    r.iteration = it++;
    r.objective = obj;
    r.wall_seconds = time;
    t.records.push_back(r);
  }
  t.converged = true;
  return t;
}

ComparisonRecord objectives(double neural, double exact) {
  ComparisonRecord r;
  r.obj_neural = neural;
  r.obj_exact = exact;
  return r;
}

TEST(ObjGapTest, HandValues) {
  EXPECT_DOUBLE_EQ(compute_obj_gap({objectives(105, 100)}), 0.05);
  EXPECT_EQ(compute_obj_gap({objectives(100, 100)}), 0.0);
  EXPECT_DOUBLE_EQ(compute_obj_gap({objectives(110, 100), objectives(98, 100)}), 0.04);
  EXPECT_THROW(compute_obj_gap({objectives(1, 0)}), std::invalid_argument);
  EXPECT_THROW(compute_obj_gap({}), std::invalid_argument);
}

TEST(SpeedupTest, ExactReachesNeuralObjectiveLater) {
  // Neural ends at 10 after 2 s; exact first reaches 10 at 6 s and ends lower.
  const CgTrace neural = trace({{20, 0.5}, {10, 2}});
  const CgTrace exact = trace({{20, 0.5}, {15, 3}, {10, 6}, {9, 8}});
  const ComparisonRecord r = compare_traces("a", neural, exact);
  EXPECT_EQ(r.t_neural, 2.0);
  EXPECT_EQ(r.t_exact, 6.0);
  EXPECT_FALSE(r.neural_wins);
  EXPECT_EQ(compute_t_speedup({r}), 3.0);
}

TEST(SpeedupTest, IdenticalTracesGiveOne) {
  const CgTrace t = trace({{20, 1}, {12, 2}, {11, 4}});
  int j = -1;
  EXPECT_EQ(compute_t_speedup({{t, t}}, &j), 1.0);
  EXPECT_EQ(j, 0);
}

TEST(SpeedupTest, NeuralWinsUsesNeuralCrossing) {
  // Exact stalls at 10 after 9 s; neural passes 10 at 3 s and ends at 8.
  const CgTrace neural = trace({{20, 1}, {10, 3}, {8, 5}});
  const CgTrace exact = trace({{20, 1}, {14, 4}, {10, 9}});
  const ComparisonRecord r = compare_traces("b", neural, exact);
  EXPECT_TRUE(r.neural_wins);
  EXPECT_EQ(r.t_neural, 3.0);
  EXPECT_EQ(r.t_exact, 9.0);
  int j = 0;
  EXPECT_EQ(compute_t_speedup({{neural, exact}}, &j), 3.0);
  EXPECT_EQ(j, 1);
}

TEST(SpeedupTest, AveragesOverInstances) {
  ComparisonRecord a, b;
  a.t_exact = 6;
  a.t_neural = 2;
  b.t_exact = 1;
  b.t_neural = 1;
  EXPECT_EQ(compute_t_speedup({a, b}), 2.0);
  EXPECT_THROW(compute_t_speedup(std::vector<ComparisonRecord>{}), std::invalid_argument);
  EXPECT_THROW(compare_traces("x", CgTrace{}, trace({{1, 1}})), std::invalid_argument);
}

TEST(ReportTest, AggregatesMatchRecomputation) {
  std::vector<ComparisonRecord> recs;
  for (int k = 0; k < 5; ++k) {
    ComparisonRecord r;
    r.instance = "i" + std::to_string(k);
    r.obj_neural = 100 + 3 * k;
    r.obj_exact = 100 + k;
    r.t_neural = 1 + k;
    r.t_exact = 2 + 3 * k;
    r.neural_wins = k == 4;
    r.iterations_neural = 5 + k;
    r.iterations_exact = 10 + k;
    r.time_per_iteration_neural = 0.1 * k;
    r.time_per_iteration_exact = 0.2 * k;
    recs.push_back(r);
  }
  const ComparisonReport rep = summarize(recs);
  double gap = 0, speed = 0, itn = 0, tpe = 0;
  for (const auto& r : recs) {
    gap += (r.obj_neural - r.obj_exact) / r.obj_exact;
    speed += r.t_exact / r.t_neural;
    itn += r.iterations_neural;
    tpe += r.time_per_iteration_exact;
  }
  EXPECT_EQ(rep.obj_gap, gap / 5);
  EXPECT_EQ(rep.t_speedup, speed / 5);
  EXPECT_EQ(rep.mean_iterations_neural, itn / 5);
  EXPECT_EQ(rep.mean_time_per_iteration_exact, tpe / 5);
  EXPECT_EQ(rep.j_less, 1);
}

TEST(CsvTest, RecordsRoundTrip) {
  ComparisonRecord r;
  r.instance = "inst-7";
  r.obj_neural = 1.0 / 3.0;
  r.obj_exact = 0.1 + 0.2;
  r.t_neural = 1e-7;
  r.t_exact = 123.456;
  r.neural_wins = true;
  r.iterations_neural = 3;
  r.iterations_exact = 17;
  r.time_per_iteration_neural = 2.0 / 7.0;
  r.time_per_iteration_exact = 5e300;
  std::stringstream buf;
  write_records(buf, {r, r});
  const auto back = read_records(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], r);
  std::stringstream bad("instance,oops\n");
  EXPECT_THROW(read_records(bad), ParseError);
}

TEST(CsvTest, HistogramAndConvergenceRoundTrip) {
  const auto bins = histogram({0.1, 0.2, 0.25, 0.9, 1.0 / 3.0});
  std::stringstream hb;
  write_histogram(hb, bins);
  EXPECT_EQ(read_histogram(hb), bins);
  const auto curve = convergence_curve("neural", {trace({{12, 1}, {10, 2}}), trace({{30, 1}})}, {10.0, 29.0});
  std::stringstream cb;
  write_convergence(cb, curve);
  EXPECT_EQ(read_convergence(cb), curve);
}

TEST(HistogramTest, CountsSumToSampleSize) {
  const auto two = histogram({0.05, -0.01});
  std::size_t total = 0;
  for (const auto& b : two) total += b.count;
  EXPECT_EQ(total, 2u);
  EXPECT_EQ(two.front().lo, -0.01);
  EXPECT_EQ(two.back().hi, 0.05);
  EXPECT_TRUE(histogram({}).empty());
  const auto flat = histogram({2.0, 2.0, 2.0});
  ASSERT_EQ(flat.size(), 1u);
  EXPECT_EQ(flat[0].count, 3u);
}

TEST(ConvergenceTest, CarriesFinalObjectiveForward) {
  const auto curve = convergence_curve("exact", {trace({{12, 1}, {10, 2}}), trace({{30, 1}})}, {10.0, 30.0});
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_DOUBLE_EQ(curve[0].mean_gap, 0.1);
  EXPECT_DOUBLE_EQ(curve[1].mean_gap, 0.0);
  EXPECT_EQ(curve[1].ci_low, 0.0);
  EXPECT_GT(curve[0].ci_high, curve[0].mean_gap);
}

TEST(EmitFiguresTest, EmptyReportWritesHeaders) {
  const auto dir = std::filesystem::temp_directory_path() / "cgrl_figures_empty";
  std::filesystem::remove_all(dir);
  emit_figures(dir.string(), FigureInputs{});
  for (const char* name : {"obj_gap_hist.csv", "t_speedup_hist.csv", "convergence.csv", "first_pp_reduced_costs.csv",
                           "records.csv"}) {
    std::ifstream f(dir / name);
    ASSERT_TRUE(f) << name;
    std::string header, extra;
    std::getline(f, header);
    EXPECT_FALSE(header.empty());
    EXPECT_FALSE(std::getline(f, extra)) << name;
  }
}

TEST(EmitFiguresTest, TwoInstanceHistogramsSumToTwo) {
  const auto dir = std::filesystem::temp_directory_path() / "cgrl_figures_two";
  std::filesystem::remove_all(dir);
  FigureInputs in;
  in.neural_traces = {trace({{20, 1}, {11, 2}}), trace({{30, 1}, {29, 3}})};
  in.exact_traces = {trace({{20, 1}, {10, 4}}), trace({{30, 1}, {29, 2}})};
  in.report = summarize({compare_traces("a", in.neural_traces[0], in.exact_traces[0]),
                         compare_traces("b", in.neural_traces[1], in.exact_traces[1])});
  in.first_pp_neural = {-0.5, -0.25};
  in.first_pp_exact = {-0.75};
  emit_figures(dir.string(), in);
  for (const char* name : {"obj_gap_hist.csv", "t_speedup_hist.csv"}) {
    std::ifstream f(dir / name);
    std::size_t total = 0;
    for (const auto& b : read_histogram(f)) total += b.count;
    EXPECT_EQ(total, 2u) << name;
  }
  std::ifstream rf(dir / "records.csv");
  EXPECT_EQ(read_records(rf), in.report.records);
  std::ifstream cf(dir / "convergence.csv");
  EXPECT_EQ(read_convergence(cf).size(), 4u);
}

}  // namespace
}  // namespace cgrl
