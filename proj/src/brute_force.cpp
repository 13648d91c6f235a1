#include <stdexcept>
#include <string>
#include <vector>

#include "cgrl/pulse.hpp"
#include "cgrl/route.hpp"

namespace cgrl {

BruteForceResult brute_force_price(const PricingInstance& pp, int max_customers) {
  const VrptwInstance& inst = pp.base();
  if (inst.num_customers() > max_customers)
    throw std::invalid_argument("brute_force_price: " + std::to_string(inst.num_customers()) +
                                " customers exceed the enumeration cap of " +
                                std::to_string(max_customers));
  BruteForceResult out;
  out.feasible_routes = 1;  // 0 -> 0
  std::vector<int> seq;
  std::vector<bool> used(static_cast<std::size_t>(inst.num_nodes()), false);

  auto visit = [&](auto&& self) -> void {
    for (int j = 1; j < inst.num_nodes(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      seq.push_back(j);
      const RouteCheck check = check_route(seq, inst);
      // Interior violations doom every extension; a late return does not.
      if (check.feasible() || check.violation == Violation::kReturn) {
        if (check.feasible()) {
          ++out.feasible_routes;
          const double rc = path_price(seq, pp);
          if (rc < out.reduced_cost) {
            out.reduced_cost = rc;
            out.route = seq;
          }
        }
        used[static_cast<std::size_t>(j)] = true;
        self(self);
        used[static_cast<std::size_t>(j)] = false;
      }
      seq.pop_back();
    }
  };
  visit(visit);
  return out;
}

}  // namespace cgrl
