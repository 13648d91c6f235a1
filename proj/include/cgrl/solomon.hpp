#pragma once

#include <istream>
#include <string>

#include "cgrl/instance.hpp"

namespace cgrl {

// Reads the classic Solomon layout: a name line, a VEHICLE section with
// NUMBER/CAPACITY, and a CUSTOMER table (id, x, y, demand, ready, due,
// service). Travel times are Euclidean distances of the raw coordinates.
// Throws ParseError naming the offending line when the header is malformed
// or the table holds fewer than `expected_customers` rows.
VrptwInstance parse_solomon(std::istream& in, int expected_customers = 100);

}  // namespace cgrl
