#include "cgrl/route.hpp"

#include <algorithm>

namespace cgrl {

std::string to_string(Violation v) {
  switch (v) {
    case Violation::kNone: return "none";
    case Violation::kRepeatedCustomer: return "repeated customer";
    case Violation::kCapacity: return "capacity";
    case Violation::kTimeWindow: return "time window";
    case Violation::kReturn: return "return to depot after horizon";
  }
  return "unknown";
}

RouteCheck check_route(std::span<const int> seq, const VrptwInstance& inst) {
  RouteCheck out;
  std::vector<bool> seen(static_cast<std::size_t>(inst.num_nodes()), false);
  int prev = 0;
  double depart = 0.0;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const int j = seq[k];
    if (j <= 0 || j >= inst.num_nodes())
      throw UnknownNode("check_route: node " + std::to_string(j) + " is not a customer");
    auto fail = [&](Violation v) {
      out.violation = v;
      out.position = static_cast<int>(k);
      return out;
    };
    if (seen[static_cast<std::size_t>(j)]) return fail(Violation::kRepeatedCustomer);
    seen[static_cast<std::size_t>(j)] = true;

    const Node& v = inst.node(j);
    out.load += v.demand;
    if (out.load > inst.capacity()) return fail(Violation::kCapacity);

    const double arrival = depart + inst.travel(prev, j);
    out.cost += inst.travel(prev, j);
    if (arrival > v.tw_close) return fail(Violation::kTimeWindow);
    const double start = std::max(v.tw_open, arrival);
    out.service_start.push_back(start);
    depart = start + v.service;
    prev = j;
  }
  out.return_time = depart + inst.travel(prev, 0);
  out.cost += inst.travel(prev, 0);
  if (out.return_time > inst.horizon()) {
    out.violation = Violation::kReturn;
    out.position = static_cast<int>(seq.size());
  }
  return out;
}

}  // namespace cgrl
