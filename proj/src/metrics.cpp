#include "cgrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "cgrl/errors.hpp"
#include "text_util.hpp"

namespace cgrl {

namespace {

bool at_or_below(double value, double threshold) {
  return value <= threshold + 1e-9 * std::max(1.0, std::abs(threshold));
}

double total_seconds(const CgTrace& t) {
  const auto& last = t.records.back();
  return last.wall_seconds + last.pricing_seconds;
}

void require_nonempty(const CgTrace& t, const char* which) {
  if (t.records.empty()) throw std::invalid_argument(std::string("empty ") + which + " trace");
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<std::vector<std::string>> read_csv(std::istream& in, const std::string& header, std::size_t fields) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  int lineno = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != header) throw ParseError(lineno, "expected header '" + header + "'");
      seen_header = true;
      continue;
    }
    auto f = detail::split(line, ',');
    if (f.size() != fields) throw ParseError(lineno, "expected " + std::to_string(fields) + " fields");
    rows.push_back(std::move(f));
  }
  if (!seen_header) throw ParseError(lineno, "missing header '" + header + "'");
  return rows;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters in '" + s + "'");
  return v;
}

template <typename F>
auto parse_field(int row, F&& f) {
  try {
    return f();
  } catch (const std::logic_error& e) {
    throw ParseError(row + 2, e.what());
  }
}

constexpr const char* kRecordHeader =
    "instance,obj_neural,obj_exact,t_neural,t_exact,neural_wins,iterations_neural,iterations_exact,"
    "time_per_iteration_neural,time_per_iteration_exact";
constexpr const char* kHistogramHeader = "bin_lo,bin_hi,count";
constexpr const char* kConvergenceHeader = "method,iteration,mean_gap,ci_low,ci_high";

}  // namespace

double first_crossing(const CgTrace& trace, double threshold) {
  require_nonempty(trace, "");
  for (const auto& r : trace.records)
    if (at_or_below(r.objective, threshold)) return r.wall_seconds;
  throw std::invalid_argument("trace never reaches objective " + detail::fmt_double(threshold));
}

ComparisonRecord compare_traces(const std::string& instance, const CgTrace& neural, const CgTrace& exact) {
  require_nonempty(neural, "neural");
  require_nonempty(exact, "exact");
  ComparisonRecord r;
  r.instance = instance;
  r.obj_neural = neural.records.back().objective;
  r.obj_exact = exact.records.back().objective;
  r.neural_wins = !at_or_below(r.obj_exact, r.obj_neural);
  const double threshold = std::max(r.obj_neural, r.obj_exact);
  r.t_neural = first_crossing(neural, threshold);
  r.t_exact = first_crossing(exact, threshold);
  r.iterations_neural = static_cast<int>(neural.records.size());
  r.iterations_exact = static_cast<int>(exact.records.size());
  r.time_per_iteration_neural = total_seconds(neural) / r.iterations_neural;
  r.time_per_iteration_exact = total_seconds(exact) / r.iterations_exact;
  return r;
}

double compute_obj_gap(const std::vector<ComparisonRecord>& records) {
  if (records.empty()) throw std::invalid_argument("compute_obj_gap: no records");
  double sum = 0.0;
  for (const auto& r : records) {
    if (r.obj_exact == 0.0) throw std::invalid_argument("compute_obj_gap: zero reference objective for " + r.instance);
    sum += (r.obj_neural - r.obj_exact) / r.obj_exact;
  }
  return sum / static_cast<double>(records.size());
}

double compute_t_speedup(const std::vector<ComparisonRecord>& records) {
  if (records.empty()) throw std::invalid_argument("compute_t_speedup: no records");
  double sum = 0.0;
  for (const auto& r : records)
    sum += std::max(r.t_exact, kMinMeasurableSeconds) / std::max(r.t_neural, kMinMeasurableSeconds);
  return sum / static_cast<double>(records.size());
}

double compute_t_speedup(const std::vector<std::pair<CgTrace, CgTrace>>& neural_exact, int* j_less) {
  std::vector<ComparisonRecord> records;
  for (std::size_t k = 0; k < neural_exact.size(); ++k)
    records.push_back(compare_traces(std::to_string(k), neural_exact[k].first, neural_exact[k].second));
  if (j_less != nullptr)
    *j_less = static_cast<int>(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.neural_wins; }));
  return compute_t_speedup(records);
}

ComparisonReport summarize(std::vector<ComparisonRecord> records) {
  ComparisonReport rep;
  rep.records = std::move(records);
  if (rep.records.empty()) return rep;
  rep.obj_gap = compute_obj_gap(rep.records);
  rep.t_speedup = compute_t_speedup(rep.records);
  std::vector<double> itn, ite, tpn, tpe;
  for (const auto& r : rep.records) {
    rep.j_less += r.neural_wins ? 1 : 0;
    itn.push_back(r.iterations_neural);
    ite.push_back(r.iterations_exact);
    tpn.push_back(r.time_per_iteration_neural);
    tpe.push_back(r.time_per_iteration_exact);
  }
  rep.mean_iterations_neural = mean(itn);
  rep.mean_iterations_exact = mean(ite);
  rep.mean_time_per_iteration_neural = mean(tpn);
  rep.mean_time_per_iteration_exact = mean(tpe);
  return rep;
}

void write_records(std::ostream& out, const std::vector<ComparisonRecord>& records) {
  out << kRecordHeader << '\n';
  for (const auto& r : records) {
    if (r.instance.find_first_of(",\n") != std::string::npos)
      throw std::invalid_argument("instance name may not contain commas or newlines: " + r.instance);
    out << r.instance << ',' << detail::fmt_double(r.obj_neural) << ',' << detail::fmt_double(r.obj_exact) << ','
        << detail::fmt_double(r.t_neural) << ',' << detail::fmt_double(r.t_exact) << ',' << (r.neural_wins ? 1 : 0)
        << ',' << r.iterations_neural << ',' << r.iterations_exact << ','
        << detail::fmt_double(r.time_per_iteration_neural) << ',' << detail::fmt_double(r.time_per_iteration_exact)
        << '\n';
  }
}

std::vector<ComparisonRecord> read_records(std::istream& in) {
  std::vector<ComparisonRecord> out;
  const auto rows = read_csv(in, kRecordHeader, 10);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& f = rows[k];
    out.push_back(parse_field(static_cast<int>(k), [&] {
      ComparisonRecord r;
      r.instance = f[0];
      r.obj_neural = to_double(f[1]);
      r.obj_exact = to_double(f[2]);
      r.t_neural = to_double(f[3]);
      r.t_exact = to_double(f[4]);
      if (f[5] != "0" && f[5] != "1") throw std::invalid_argument("neural_wins must be 0 or 1");
      r.neural_wins = f[5] == "1";
      r.iterations_neural = std::stoi(f[6]);
      r.iterations_exact = std::stoi(f[7]);
      r.time_per_iteration_neural = to_double(f[8]);
      r.time_per_iteration_exact = to_double(f[9]);
      return r;
    }));
  }
  return out;
}

std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins) {
  if (bins <= 0) throw std::invalid_argument("histogram: bin count must be positive");
  if (values.empty()) return {};
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (lo == hi) return {HistogramBin{lo, hi, values.size()}};
  const double width = (hi - lo) / bins;
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    out[static_cast<std::size_t>(b)].lo = lo + b * width;
    out[static_cast<std::size_t>(b)].hi = b + 1 == bins ? hi : lo + (b + 1) * width;
  }
  for (double v : values) {
    const int b = std::min(bins - 1, static_cast<int>(std::floor((v - lo) / width)));
    ++out[static_cast<std::size_t>(b)].count;
  }
  return out;
}

void write_histogram(std::ostream& out, const std::vector<HistogramBin>& bins) {
  out << kHistogramHeader << '\n';
  for (const auto& b : bins) out << detail::fmt_double(b.lo) << ',' << detail::fmt_double(b.hi) << ',' << b.count << '\n';
}

std::vector<HistogramBin> read_histogram(std::istream& in) {
  std::vector<HistogramBin> out;
  const auto rows = read_csv(in, kHistogramHeader, 3);
  for (std::size_t k = 0; k < rows.size(); ++k)
    out.push_back(parse_field(static_cast<int>(k), [&] {
      return HistogramBin{to_double(rows[k][0]), to_double(rows[k][1]), std::stoull(rows[k][2])};
    }));
  return out;
}

std::vector<ConvergencePoint> convergence_curve(const std::string& method, const std::vector<CgTrace>& traces,
                                                const std::vector<double>& reference) {
  if (traces.size() != reference.size()) throw std::invalid_argument("convergence_curve: one reference per trace");
  std::size_t longest = 0;
  for (const auto& t : traces) {
    require_nonempty(t, "convergence");
    longest = std::max(longest, t.records.size());
  }
  std::vector<ConvergencePoint> out;
  const double k = static_cast<double>(traces.size());
  for (std::size_t it = 0; it < longest; ++it) {
    std::vector<double> gaps;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const auto& recs = traces[i].records;
      const double obj = recs[std::min(it, recs.size() - 1)].objective;
      if (reference[i] == 0.0) throw std::invalid_argument("convergence_curve: zero reference objective");
      gaps.push_back((obj - reference[i]) / reference[i]);
    }
    const double m = mean(gaps);
    double var = 0.0;
    for (double g : gaps) var += (g - m) * (g - m);
    const double sd = gaps.size() > 1 ? std::sqrt(var / (k - 1.0)) : 0.0;
    const double half = 1.96 * sd / std::sqrt(k);
    out.push_back({method, static_cast<int>(it), m, m - half, m + half});
  }
  return out;
}

void write_convergence(std::ostream& out, const std::vector<ConvergencePoint>& points) {
  out << kConvergenceHeader << '\n';
  for (const auto& p : points)
    out << p.method << ',' << p.iteration << ',' << detail::fmt_double(p.mean_gap) << ','
        << detail::fmt_double(p.ci_low) << ',' << detail::fmt_double(p.ci_high) << '\n';
}

std::vector<ConvergencePoint> read_convergence(std::istream& in) {
  std::vector<ConvergencePoint> out;
  const auto rows = read_csv(in, kConvergenceHeader, 5);
  for (std::size_t k = 0; k < rows.size(); ++k)
    out.push_back(parse_field(static_cast<int>(k), [&] {
      const auto& f = rows[k];
      return ConvergencePoint{f[0], std::stoi(f[1]), to_double(f[2]), to_double(f[3]), to_double(f[4])};
    }));
  return out;
}

void emit_figures(const std::string& dir, const FigureInputs& in) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(std::filesystem::path(dir) / name);
    if (!f) throw std::runtime_error("cannot write " + (std::filesystem::path(dir) / name).string());
    return f;
  };
  std::vector<double> gaps, speedups;
  for (const auto& r : in.report.records) {
    gaps.push_back((r.obj_neural - r.obj_exact) / r.obj_exact);
    speedups.push_back(std::max(r.t_exact, kMinMeasurableSeconds) / std::max(r.t_neural, kMinMeasurableSeconds));
  }
  {
    auto f = open("obj_gap_hist.csv");
    write_histogram(f, histogram(gaps));
  }
  {
    auto f = open("t_speedup_hist.csv");
    write_histogram(f, histogram(speedups));
  }
  {
    std::vector<double> ref;
    for (const auto& r : in.report.records) ref.push_back(r.obj_exact);
    std::vector<ConvergencePoint> points;
    if (in.neural_traces.size() == ref.size() && in.exact_traces.size() == ref.size()) {
      points = convergence_curve("neural", in.neural_traces, ref);
      const auto exact = convergence_curve("exact", in.exact_traces, ref);
      points.insert(points.end(), exact.begin(), exact.end());
    }
    auto f = open("convergence.csv");
    write_convergence(f, points);
  }
  {
    auto f = open("first_pp_reduced_costs.csv");
    f << "method,reduced_cost\n";
    for (double v : in.first_pp_neural) f << "neural," << detail::fmt_double(v) << '\n';
    for (double v : in.first_pp_exact) f << "exact," << detail::fmt_double(v) << '\n';
  }
  {
    auto f = open("records.csv");
    write_records(f, in.report.records);
  }
}

}  // namespace cgrl
