#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include "cgrl/policy.hpp"

namespace cgrl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary container: magic, version, architecture header, named tensors, and
// a trailing CRC-32 of everything before it.
void save_params(std::ostream& out, const PolicyParams& params);
void save_params(const std::string& path, const PolicyParams& params);

// Throws CheckpointError on truncation, checksum or version mismatch, and on
// any architecture field that differs from `expected`.
PolicyParams load_params(std::istream& in, const std::optional<PolicyConfig>& expected = std::nullopt);
PolicyParams load_params(const std::string& path, const std::optional<PolicyConfig>& expected = std::nullopt);

}  // namespace cgrl
