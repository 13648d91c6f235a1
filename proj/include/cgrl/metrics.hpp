#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cgrl/cg.hpp"

namespace cgrl {

// Times below this are treated as equal to it when forming ratios.
inline constexpr double kMinMeasurableSeconds = 1e-6;

struct ComparisonRecord {
  std::string instance;
  double obj_neural = 0.0;
  double obj_exact = 0.0;
  // Crossing times entering the speed-up ratio.
  double t_neural = 0.0;
  double t_exact = 0.0;
  bool neural_wins = false;  // the neural run ends with the strictly better objective
  int iterations_neural = 0;
  int iterations_exact = 0;
  double time_per_iteration_neural = 0.0;
  double time_per_iteration_exact = 0.0;

  bool operator==(const ComparisonRecord&) const = default;
};

struct ComparisonReport {
  std::vector<ComparisonRecord> records;
  double obj_gap = 0.0;
  double t_speedup = 0.0;
  int j_less = 0;
  double mean_iterations_neural = 0.0;
  double mean_iterations_exact = 0.0;
  double mean_time_per_iteration_neural = 0.0;
  double mean_time_per_iteration_exact = 0.0;
};

// First wall time at which the trace objective is at or below `threshold`
// (relative tolerance 1e-9). Throws on an empty trace or if never reached.
double first_crossing(const CgTrace& trace, double threshold);

// Both runs are timed to the worse of the two final objectives. When the
// neural run finishes strictly better, the instance counts toward J(<).
ComparisonRecord compare_traces(const std::string& instance, const CgTrace& neural, const CgTrace& exact);

// Mean of (obj_neural - obj_exact) / obj_exact; positive means the neural run is worse.
double compute_obj_gap(const std::vector<ComparisonRecord>& records);
// Mean of t_exact / t_neural.
double compute_t_speedup(const std::vector<ComparisonRecord>& records);
double compute_t_speedup(const std::vector<std::pair<CgTrace, CgTrace>>& neural_exact, int* j_less = nullptr);

ComparisonReport summarize(std::vector<ComparisonRecord> records);

void write_records(std::ostream& out, const std::vector<ComparisonRecord>& records);
std::vector<ComparisonRecord> read_records(std::istream& in);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  bool operator==(const HistogramBin&) const = default;
};

// Equal-width bins over [min, max]; the last bin is closed.
std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins = 10);
void write_histogram(std::ostream& out, const std::vector<HistogramBin>& bins);
std::vector<HistogramBin> read_histogram(std::istream& in);

struct ConvergencePoint {
  std::string method;
  int iteration = 0;
  double mean_gap = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool operator==(const ConvergencePoint&) const = default;
};

// Gap of each trace's objective at iteration k to the instance's reference
// objective, averaged over instances with a normal 95% band. Short traces
// carry their final objective forward.
std::vector<ConvergencePoint> convergence_curve(const std::string& method, const std::vector<CgTrace>& traces,
                                                const std::vector<double>& reference);
void write_convergence(std::ostream& out, const std::vector<ConvergencePoint>& points);
std::vector<ConvergencePoint> read_convergence(std::istream& in);

struct FigureInputs {
  ComparisonReport report;
  std::vector<CgTrace> neural_traces;
  std::vector<CgTrace> exact_traces;
  std::vector<double> first_pp_neural;  // reduced costs of the columns from the first pricing call
  std::vector<double> first_pp_exact;
};

// Writes obj_gap_hist.csv, t_speedup_hist.csv, convergence.csv,
// first_pp_reduced_costs.csv and records.csv into `dir`.
void emit_figures(const std::string& dir, const FigureInputs& in);

}  // namespace cgrl
