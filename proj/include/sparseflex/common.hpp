#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sparseflex {

using index_t = std::int64_t;
using bits_t = std::int64_t;

/// Raised for contract violations: bad parameters, dimension mismatches,
/// malformed input files, unsupported format pairs.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FormatId : std::uint8_t { Dense = 0, COO, CSR, CSC, BSR, RLC, ZVC, CSF };

inline constexpr std::array<FormatId, 8> kAllFormats = {
    FormatId::Dense, FormatId::COO, FormatId::CSR, FormatId::CSC,
    FormatId::BSR,   FormatId::RLC, FormatId::ZVC, FormatId::CSF};

inline constexpr std::string_view to_string(FormatId f) {
  switch (f) {
    case FormatId::Dense: return "Dense";
    case FormatId::COO: return "COO";
    case FormatId::CSR: return "CSR";
    case FormatId::CSC: return "CSC";
    case FormatId::BSR: return "BSR";
    case FormatId::RLC: return "RLC";
    case FormatId::ZVC: return "ZVC";
    case FormatId::CSF: return "CSF";
  }
  return "?";
}

inline FormatId parse_format(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (FormatId f : kAllFormats) {
    std::string cand(to_string(f));
    std::transform(cand.begin(), cand.end(), cand.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (cand == lower) return f;
  }
  throw Error("unknown format '" + std::string(name) + "'");
}

/// Deterministic tie-break order: Dense < ZVC < RLC < CSR < CSC < COO < BSR < CSF.
inline constexpr int tie_order(FormatId f) {
  switch (f) {
    case FormatId::Dense: return 0;
    case FormatId::ZVC: return 1;
    case FormatId::RLC: return 2;
    case FormatId::CSR: return 3;
    case FormatId::CSC: return 4;
    case FormatId::COO: return 5;
    case FormatId::BSR: return 6;
    case FormatId::CSF: return 7;
  }
  return 8;
}

inline constexpr index_t ceil_div(index_t a, index_t b) { return b == 0 ? 0 : (a + b - 1) / b; }

/// Smallest w with 2^w >= x (0 for x <= 1).
inline constexpr int ceil_log2(std::uint64_t x) {
  return x <= 1 ? 0 : static_cast<int>(std::bit_width(x - 1));
}

/// Bits needed to address one of d positions: ceil(log2(max(d, 2))).
inline constexpr int index_bits(index_t d) {
  return ceil_log2(static_cast<std::uint64_t>(std::max<index_t>(d, 2)));
}

/// Bits of a pointer entry that may hold any value in [0, count]: ceil(log2(count + 2)).
inline constexpr int pointer_bits(index_t count) {
  return ceil_log2(static_cast<std::uint64_t>(std::max<index_t>(count, 0) + 2));
}

}  // namespace sparseflex
