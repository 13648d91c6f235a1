#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgrl/instance.hpp"

namespace cgrl {

enum class Violation {
  kNone,
  kRepeatedCustomer,
  kCapacity,
  kTimeWindow,  // arrival after a customer's window closes
  kReturn,      // back at the depot after the horizon
};

std::string to_string(Violation v);

struct RouteCheck {
  Violation violation = Violation::kNone;
  int position = -1;  // index in the visit sequence of the first violation
  std::vector<double> service_start;  // r_j per visited customer, waiting included
  double return_time = 0.0;
  double load = 0.0;
  double cost = 0.0;

  bool feasible() const { return violation == Violation::kNone; }
};

class UnknownNode : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Simulates depot -> seq... -> depot with r_j = max(a_j, r_i + s_i + t_ij).
// `seq` holds customers only; an empty sequence is the trivial 0 -> 0 route.
// Simulation stops at the first violation.
RouteCheck check_route(std::span<const int> seq, const VrptwInstance& inst);

}  // namespace cgrl
