#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <vector>

namespace uqbench {

/// Shortest round-trip decimal representation.
inline std::string format_double(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

/// RFC-style CSV quoting: fields containing commas, quotes, or newlines are
/// wrapped in double quotes with inner quotes doubled.
inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string row;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) row += ',';
    row += csv_escape(fields[i]);
  }
  row += '\n';
  return row;
}

/// FNV-1a 64-bit content hash (manifest fingerprints).
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

inline std::string to_hex(std::uint64_t value) {
  char buffer[17];
  const auto result =
      std::to_chars(buffer, buffer + sizeof(buffer), value, 16);
  return std::string(buffer, result.ptr);
}

}  // namespace uqbench
