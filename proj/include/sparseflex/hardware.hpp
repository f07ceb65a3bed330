#pragma once

#include <charconv>
#include <istream>
#include <sstream>
#include <string>

#include "sparseflex/common.hpp"

namespace sparseflex {

enum class PrefixVariant : std::uint8_t { SerialChain, WorkEfficient, HighlyParallel };

inline constexpr std::string_view to_string(PrefixVariant v) {
  switch (v) {
    case PrefixVariant::SerialChain: return "SerialChain";
    case PrefixVariant::WorkEfficient: return "WorkEfficient";
    case PrefixVariant::HighlyParallel: return "HighlyParallel";
  }
  return "?";
}

inline PrefixVariant parse_prefix_variant(std::string_view s) {
  for (auto v : {PrefixVariant::SerialChain, PrefixVariant::WorkEfficient, PrefixVariant::HighlyParallel})
    if (s == to_string(v)) return v;
  throw Error("unknown prefix variant '" + std::string(s) + "'");
}

/// Accelerator, converter and memory parameters. Energies are relative units.
/// The defaults describe a 2048-PE array with 8-wide vector MACs (16384 MACs),
/// 512-bit input bus, 512 B of buffer per PE and 32-bit data.
struct HardwareConfig {
  index_t n_pe = 2048;
  index_t bus_elems_per_cycle = 16;
  index_t pe_buffer_elems = 128;
  index_t vector_lanes = 8;
  int dtype_bits = 32;
  index_t dram_bits_per_cycle = 256;
  // Port between the conversion unit's memory controller and the scratchpad.
  index_t scratchpad_bits_per_cycle = 512;

  double e_dram_per_bit = 200.0;
  double e_mac = 1.0;
  double e_buf_access = 1.0;
  double e_stream_elem = 1.0;
  double e_conv_op = 1.0;

  index_t div_mod_lanes = 8;
  index_t prefix_width = 32;
  int run_bits = 4;

  index_t sorter_width = 8;
  PrefixVariant prefix_variant = PrefixVariant::HighlyParallel;
  double div_mod_energy_weight = 4.0;
  double mint_energy_scale = 1.0;
  // Metadata element width on bus and in buffers, in bits; 0 means dtype_bits.
  int metadata_bits = 0;
  bool overlap_conversion = true;

  /// Metadata elements cost this many data-element slots.
  double metadata_ratio() const {
    return metadata_bits == 0 ? 1.0 : static_cast<double>(metadata_bits) / static_cast<double>(dtype_bits);
  }

  index_t mem_elems_per_cycle() const { return std::max<index_t>(1, scratchpad_bits_per_cycle / dtype_bits); }

  void check() const {
    auto pos = [](index_t v, const char* name) {
      if (v < 1) throw Error(std::string("hardware config: ") + name + " must be >= 1");
    };
    pos(n_pe, "n_pe");
    pos(bus_elems_per_cycle, "bus_elems_per_cycle");
    pos(pe_buffer_elems, "pe_buffer_elems");
    pos(vector_lanes, "vector_lanes");
    pos(dtype_bits, "dtype_bits");
    pos(dram_bits_per_cycle, "dram_bits_per_cycle");
    pos(scratchpad_bits_per_cycle, "scratchpad_bits_per_cycle");
    pos(div_mod_lanes, "div_mod_lanes");
    pos(prefix_width, "prefix_width");
    pos(run_bits, "run_bits");
    pos(sorter_width, "sorter_width");
    if (run_bits > 62) throw Error("hardware config: run_bits must be <= 62");
    if (metadata_bits < 0) throw Error("hardware config: metadata_bits must be >= 0");
    for (double e : {e_dram_per_bit, e_mac, e_buf_access, e_stream_elem, e_conv_op, div_mod_energy_weight,
                     mint_energy_scale})
      if (!(e >= 0.0)) throw Error("hardware config: energy constants must be >= 0");
  }

  /// Four PEs, a five-element bus and eight-element buffers.
  static HardwareConfig small_example() {
    HardwareConfig hw;
    hw.n_pe = 4;
    hw.bus_elems_per_cycle = 5;
    hw.pe_buffer_elems = 8;
    return hw;
  }

  friend bool operator==(const HardwareConfig&, const HardwareConfig&) = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& text, const std::string& key) {
  T v{};
  const char* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || p != end) throw Error("hardware config: bad value for '" + key + "': " + text);
  return v;
}

inline bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error("hardware config: bad boolean for '" + key + "': " + text);
}

}  // namespace detail

inline void set_field(HardwareConfig& hw, const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "n_pe") hw.n_pe = parse_number<index_t>(value, key);
  else if (key == "bus_elems_per_cycle") hw.bus_elems_per_cycle = parse_number<index_t>(value, key);
  else if (key == "pe_buffer_elems") hw.pe_buffer_elems = parse_number<index_t>(value, key);
  else if (key == "vector_lanes") hw.vector_lanes = parse_number<index_t>(value, key);
  else if (key == "dtype_bits") hw.dtype_bits = parse_number<int>(value, key);
  else if (key == "dram_bits_per_cycle") hw.dram_bits_per_cycle = parse_number<index_t>(value, key);
  else if (key == "scratchpad_bits_per_cycle") hw.scratchpad_bits_per_cycle = parse_number<index_t>(value, key);
  else if (key == "e_dram_per_bit") hw.e_dram_per_bit = parse_number<double>(value, key);
  else if (key == "e_mac") hw.e_mac = parse_number<double>(value, key);
  else if (key == "e_buf_access") hw.e_buf_access = parse_number<double>(value, key);
  else if (key == "e_stream_elem") hw.e_stream_elem = parse_number<double>(value, key);
  else if (key == "e_conv_op") hw.e_conv_op = parse_number<double>(value, key);
  else if (key == "div_mod_lanes") hw.div_mod_lanes = parse_number<index_t>(value, key);
  else if (key == "prefix_width") hw.prefix_width = parse_number<index_t>(value, key);
  else if (key == "run_bits") hw.run_bits = parse_number<int>(value, key);
  else if (key == "sorter_width") hw.sorter_width = parse_number<index_t>(value, key);
  else if (key == "prefix_variant") hw.prefix_variant = parse_prefix_variant(value);
  else if (key == "div_mod_energy_weight") hw.div_mod_energy_weight = parse_number<double>(value, key);
  else if (key == "mint_energy_scale") hw.mint_energy_scale = parse_number<double>(value, key);
  else if (key == "metadata_bits") hw.metadata_bits = parse_number<int>(value, key);
  else if (key == "overlap_conversion") hw.overlap_conversion = detail::parse_bool(value, key);
  else throw Error("hardware config: unknown key '" + key + "'");
}

/// Reads `key = value` lines; '#' starts a comment. Unknown keys are errors.
inline HardwareConfig parse_hardware_config(std::istream& in, HardwareConfig base = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::string t = detail::trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error("hardware config line " + std::to_string(lineno) + ": expected 'key = value'");
    set_field(base, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
  }
  base.check();
  return base;
}

inline HardwareConfig parse_hardware_config(const std::string& text) {
  std::istringstream in(text);
  return parse_hardware_config(in);
}

}  // namespace sparseflex
