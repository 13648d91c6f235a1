#include "cgrl/column.hpp"

#include <string>

#include "cgrl/errors.hpp"
#include "text_util.hpp"

namespace cgrl {

Column make_column(const VrptwInstance& inst, std::vector<int> seq,
                   double reduced_cost_at_birth, int iteration) {
  const RouteCheck check = check_route(seq, inst);
  if (!check.feasible()) {
    throw RouteInfeasible(check.violation,
                          "infeasible route: " + to_string(check.violation) +
                              " violated at position " + std::to_string(check.position));
  }
  Column col;
  col.coverage.assign(static_cast<std::size_t>(inst.num_customers()), 0);
  for (int j : seq) col.coverage[static_cast<std::size_t>(j - 1)] = 1;
  col.nodes = std::move(seq);
  col.cost = check.cost;
  col.reduced_cost_at_birth = reduced_cost_at_birth;
  col.iteration = iteration;
  return col;
}

double reduced_cost(const Column& col, std::span<const double> node_duals) {
  double rc = col.cost;
  for (int j : col.nodes) rc -= node_duals[static_cast<std::size_t>(j)];
  return rc;
}

double path_price(std::span<const int> seq, const PricingInstance& pp) {
  double total = 0.0;
  int prev = 0;
  for (int j : seq) {
    total += pp.price(prev, j);
    prev = j;
  }
  return total + pp.price(prev, 0);
}

ColumnPool::ColumnPool(InstancePtr inst) : inst_(std::move(inst)) {}

std::size_t ColumnPool::add_columns(std::vector<Column> cols, std::size_t cap) {
  for (const Column& c : cols) {
    // Re-derive cost and coverage so only simulator-checked routes enter.
    const Column fresh = make_column(*inst_, c.nodes);
    if (fresh.coverage != c.coverage)
      throw std::invalid_argument("column coverage does not match its visit sequence");
  }
  std::size_t added = 0;
  for (Column& c : cols) {
    if (cap != 0 && added >= cap) break;
    if (index_.count(c.nodes)) continue;
    c.cost = check_route(c.nodes, *inst_).cost;
    index_.emplace(c.nodes, columns_.size());
    columns_.push_back(std::move(c));
    ++added;
  }
  return added;
}

std::vector<int> ColumnPool::uncovered() const {
  std::vector<int> count(static_cast<std::size_t>(inst_->num_nodes()), 0);
  for (const Column& c : columns_)
    for (int j : c.nodes) ++count[static_cast<std::size_t>(j)];
  std::vector<int> out;
  for (int j = 1; j < inst_->num_nodes(); ++j)
    if (count[static_cast<std::size_t>(j)] == 0) out.push_back(j);
  return out;
}

void write_pool(std::ostream& out, const ColumnPool& pool) {
  out << "cgrl-pool v1\n";
  out << "instance " << pool.instance().name() << '\n';
  out << "columns " << pool.size() << '\n';
  for (const Column& c : pool.columns()) {
    out << detail::fmt_double(c.cost) << ' ' << detail::fmt_double(c.reduced_cost_at_birth)
        << ' ' << c.iteration << ' ' << c.nodes.size();
    for (int j : c.nodes) out << ' ' << j;
    out << '\n';
  }
}

ColumnPool read_pool(std::istream& in, InstancePtr inst) {
  std::string line;
  int no = 0;
  auto next = [&]() {
    while (std::getline(in, line)) {
      ++no;
      auto toks = detail::split_ws(line);
      if (!toks.empty()) return toks;
    }
    throw ParseError(no, "unexpected end of pool file");
  };
  auto toks = next();
  if (toks.size() != 2 || toks[0] != "cgrl-pool" || toks[1] != "v1")
    throw ParseError(no, "missing 'cgrl-pool v1' header");
  toks = next();
  if (toks.size() != 2 || toks[0] != "instance") throw ParseError(no, "expected instance line");
  if (toks[1] != inst->name())
    throw ParseError(no, "pool was written for instance '" + toks[1] + "'");
  toks = next();
  if (toks.size() != 2 || toks[0] != "columns") throw ParseError(no, "expected column count");
  const long count = std::stol(toks[1]);

  ColumnPool pool(inst);
  std::vector<Column> cols;
  for (long k = 0; k < count; ++k) {
    toks = next();
    try {
      if (toks.size() < 4) throw std::invalid_argument("short row");
      const double rc = std::stod(toks[1]);
      const int iteration = std::stoi(toks[2]);
      const std::size_t len = std::stoul(toks[3]);
      if (toks.size() != 4 + len) throw std::invalid_argument("length mismatch");
      std::vector<int> seq;
      for (std::size_t i = 0; i < len; ++i) seq.push_back(std::stoi(toks[4 + i]));
      cols.push_back(make_column(*inst, std::move(seq), rc, iteration));
    } catch (const std::exception& e) {
      throw ParseError(no, std::string("bad column row: ") + e.what());
    }
  }
  pool.add_columns(std::move(cols));
  return pool;
}

}  // namespace cgrl
