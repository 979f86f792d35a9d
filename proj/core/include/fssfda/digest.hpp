#pragma once

#include <string>

namespace fssfda {

// Hex SHA-256 of a byte string. Configs are digested after canonicalization
// (sorted keys, resolved includes), so the digest is stable under field
// reordering.
std::string sha256_hex(const std::string& data);

}  // namespace fssfda
