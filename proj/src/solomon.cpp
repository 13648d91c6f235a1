#include "cgrl/solomon.hpp"

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "cgrl/errors.hpp"
#include "text_util.hpp"

namespace cgrl {
namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

double number(const std::string& tok, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos == tok.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError(line, "not a number: '" + tok + "'");
}

}  // namespace

VrptwInstance parse_solomon(std::istream& in, int expected_customers) {
  std::vector<std::pair<int, std::vector<std::string>>> lines;
  {
    std::string raw;
    int no = 0;
    while (std::getline(in, raw)) {
      ++no;
      auto toks = detail::split_ws(raw);
      if (!toks.empty()) lines.emplace_back(no, std::move(toks));
    }
  }
  const int last_line = lines.empty() ? 0 : lines.back().first;
  std::size_t k = 0;
  auto need = [&](const char* what) -> const std::pair<int, std::vector<std::string>>& {
    if (k >= lines.size())
      throw ParseError(last_line, std::string("unexpected end of file, expected ") + what);
    return lines[k++];
  };

  const std::string name = need("instance name").second.front();

  const auto& vehicle = need("VEHICLE section");
  if (upper(vehicle.second.front()) != "VEHICLE")
    throw ParseError(vehicle.first, "expected VEHICLE section");
  const auto& vhead = need("NUMBER CAPACITY header");
  if (vhead.second.size() < 2 || upper(vhead.second[0]) != "NUMBER" ||
      upper(vhead.second[1]) != "CAPACITY")
    throw ParseError(vhead.first, "expected 'NUMBER CAPACITY' header");
  const auto& vrow = need("vehicle row");
  if (vrow.second.size() != 2) throw ParseError(vrow.first, "vehicle row needs number and capacity");
  const double capacity = number(vrow.second[1], vrow.first);

  const auto& cust = need("CUSTOMER section");
  if (upper(cust.second.front()) != "CUSTOMER")
    throw ParseError(cust.first, "expected CUSTOMER section");
  const auto& chead = need("customer table header");
  if (upper(chead.second.front()).rfind("CUST", 0) != 0)
    throw ParseError(chead.first, "expected customer table header");

  std::vector<Node> nodes;
  for (int i = 0; i <= expected_customers; ++i) {
    if (k >= lines.size())
      throw ParseError(last_line, "customer table truncated: expected " +
                                      std::to_string(expected_customers + 1) + " rows, found " +
                                      std::to_string(i));
    const auto& row = lines[k++];
    if (row.second.size() != 7)
      throw ParseError(row.first, "customer row needs 7 fields, found " +
                                      std::to_string(row.second.size()));
    Node v;
    v.id = static_cast<int>(number(row.second[0], row.first));
    if (v.id != i) throw ParseError(row.first, "customer ids must be consecutive from 0");
    v.x = number(row.second[1], row.first);
    v.y = number(row.second[2], row.first);
    v.demand = number(row.second[3], row.first);
    v.tw_open = number(row.second[4], row.first);
    v.tw_close = number(row.second[5], row.first);
    v.service = number(row.second[6], row.first);
    nodes.push_back(v);
  }
  if (k < lines.size())
    throw ParseError(lines[k].first, "unexpected data after customer table");

  try {
    return VrptwInstance(name, std::move(nodes), capacity, CoordinateFrame::kRaw);
  } catch (const InvalidInstance& e) {
    throw ParseError(last_line, e.what());
  }
}

}  // namespace cgrl
