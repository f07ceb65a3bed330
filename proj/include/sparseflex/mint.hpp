#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sparseflex/formats.hpp"
#include "sparseflex/hardware.hpp"
#include "sparseflex/profile.hpp"

namespace sparseflex {

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

enum class Block : std::uint8_t {
  PrefixSum,
  ParallelDiv,
  ParallelMod,
  Sorter,
  ClusterCounter,
  Comparators,
  MemController
};

inline constexpr std::string_view to_string(Block b) {
  switch (b) {
    case Block::PrefixSum: return "PrefixSum";
    case Block::ParallelDiv: return "ParallelDiv";
    case Block::ParallelMod: return "ParallelMod";
    case Block::Sorter: return "Sorter";
    case Block::ClusterCounter: return "ClusterCounter";
    case Block::Comparators: return "Comparators";
    case Block::MemController: return "MemController";
  }
  return "?";
}

struct PrefixTiming {
  index_t latency = 0;   // cycles from a batch entering to its sums leaving
  index_t interval = 1;  // cycles between batch issues
  index_t ops_per_element = 1;
};

inline PrefixTiming prefix_timing(PrefixVariant v, index_t width) {
  if (width < 1) throw Error("prefix width must be >= 1");
  const index_t lg = std::max<index_t>(1, ceil_log2(static_cast<std::uint64_t>(width)));
  switch (v) {
    // The offset-adder row keeps one batch per cycle at depth W + 1.
    case PrefixVariant::SerialChain: return {width + 1, 1, 2};
    // Up-sweep then down-sweep over a reduction tree; the tree is busy for the whole batch.
    case PrefixVariant::WorkEfficient: return {2 * lg, 2 * lg, 2};
    case PrefixVariant::HighlyParallel: return {lg, 1, lg};
  }
  return {};
}

/// Cycles to scan n elements in batches of `width`.
inline index_t prefix_cycles(index_t n, PrefixVariant v, index_t width) {
  if (n <= 0) return 0;
  PrefixTiming t = prefix_timing(v, width);
  return (ceil_div(n, width) - 1) * t.interval + t.latency;
}

struct PrefixResult {
  std::vector<index_t> sums;
  index_t cycles = 0;
};

/// Inclusive scan computed batch by batch, carrying the previous batch's last
/// sum through the offset row; every variant yields the same sums.
inline PrefixResult prefix_sum(const std::vector<index_t>& values, PrefixVariant v, index_t width) {
  if (width < 1) throw Error("prefix width must be >= 1");
  PrefixResult r;
  r.sums.resize(values.size());
  index_t offset = 0;
  for (std::size_t base = 0; base < values.size(); base += static_cast<std::size_t>(width)) {
    std::size_t end = std::min(values.size(), base + static_cast<std::size_t>(width));
    index_t run = 0;
    for (std::size_t i = base; i < end; ++i) {
      run += values[i];
      r.sums[i] = offset + run;
    }
    offset = r.sums[end - 1];
  }
  r.cycles = prefix_cycles(static_cast<index_t>(values.size()), v, width);
  return r;
}

// ---------------------------------------------------------------------------
// Plans and costs
// ---------------------------------------------------------------------------

struct Stage {
  Block block;
  index_t elements = 0;
  index_t min_cycles = 0;  // structural lower bound, e.g. serialized cursor updates
  std::string label;
};

struct ConversionLeg {
  FormatId src;
  FormatId dst;
  std::vector<Stage> stages;
};

struct ConversionPlan {
  FormatId src = FormatId::Dense;
  FormatId dst = FormatId::Dense;
  int rank = 2;
  std::vector<ConversionLeg> legs;  // more than one leg when routed through COO

  bool empty() const { return legs.empty(); }
  std::string route() const {
    std::string s(to_string(src));
    for (const auto& l : legs) s += "->" + std::string(to_string(l.dst));
    return s;
  }
};

struct StageCost {
  Block block;
  std::string label;
  index_t elements = 0;
  index_t cycles = 0;
  index_t fill = 0;
  double ops = 0.0;
  double energy = 0.0;
};

struct ConversionCost {
  index_t cycles = 0;
  double energy = 0.0;
  double ops = 0.0;
  std::vector<StageCost> breakdown;
};

inline double block_energy_weight(Block b, const HardwareConfig& hw) {
  return (b == Block::ParallelDiv || b == Block::ParallelMod) ? hw.div_mod_energy_weight : 1.0;
}

inline StageCost stage_cost(const Stage& s, const HardwareConfig& hw) {
  StageCost c{s.block, s.label, s.elements, 0, 0, 0.0, 0.0};
  if (s.elements <= 0) return c;
  double ops_per = 1.0;
  switch (s.block) {
    case Block::PrefixSum: {
      PrefixTiming t = prefix_timing(hw.prefix_variant, hw.prefix_width);
      c.cycles = ceil_div(s.elements, hw.prefix_width) * t.interval;
      c.fill = t.latency - t.interval;
      ops_per = static_cast<double>(t.ops_per_element);
      break;
    }
    case Block::ParallelDiv:
    case Block::ParallelMod:
      c.cycles = ceil_div(s.elements, hw.div_mod_lanes);
      c.fill = 4;
      break;
    case Block::Sorter:
    case Block::ClusterCounter:
    case Block::Comparators:
      c.cycles = ceil_div(s.elements, hw.bus_elems_per_cycle);
      c.fill = 1;
      break;
    case Block::MemController:
      c.cycles = ceil_div(s.elements, hw.mem_elems_per_cycle());
      c.fill = 1;
      break;
  }
  c.cycles = std::max(c.cycles, s.min_cycles);
  c.ops = static_cast<double>(s.elements) * ops_per;
  c.energy = c.ops * block_energy_weight(s.block, hw) * hw.e_conv_op * hw.mint_energy_scale;
  return c;
}

/// Pipelined cost: each leg runs at its bottleneck stage plus the fill
/// latencies of its stages; legs through the COO hub run back to back.
inline ConversionCost conversion_cost(const ConversionPlan& plan, const HardwareConfig& hw) {
  ConversionCost total;
  for (const auto& leg : plan.legs) {
    index_t bottleneck = 0, fills = 0;
    for (const auto& s : leg.stages) {
      StageCost c = stage_cost(s, hw);
      bottleneck = std::max(bottleneck, c.cycles);
      fills += c.fill;
      total.energy += c.energy;
      total.ops += c.ops;
      total.breakdown.push_back(std::move(c));
    }
    total.cycles += bottleneck + fills;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Plan construction from structural statistics
// ---------------------------------------------------------------------------

/// Counts a plan needs; obtainable from a profile or from hypothetical sizes.
struct PlanStats {
  int rank = 2;
  Dims3 dims{0, 0, 1};  // matrices use dims[0] = M, dims[1] = K
  index_t nnz = 0;
  index_t rlc_pairs = 0;
  index_t bsr_blocks = 0;
  index_t block_rows = 2;
  index_t block_cols = 2;
  index_t max_row_nnz = 0;
  index_t max_col_nnz = 0;
  index_t fibers0 = 0;
  index_t fibers1 = 0;
  bool identity_order = true;

  index_t size() const { return dims[0] * dims[1] * (rank == 3 ? dims[2] : 1); }

  static PlanStats of(const MatrixProfile& p) {
    PlanStats s;
    s.dims = {p.rows, p.cols, 1};
    s.nnz = p.nnz();
    s.rlc_pairs = p.counts.rlc_pairs;
    s.bsr_blocks = p.counts.bsr_blocks;
    s.block_rows = p.params.block_rows;
    s.block_cols = p.params.block_cols;
    s.max_row_nnz = p.max_row_nnz;
    s.max_col_nnz = p.max_col_nnz;
    return s;
  }

  static PlanStats of(const TensorProfile& p) {
    PlanStats s;
    s.rank = 3;
    s.dims = p.dims;
    s.nnz = p.nnz();
    s.fibers0 = p.counts.csf_fibers0;
    s.fibers1 = p.counts.csf_fibers1;
    s.identity_order = p.params.mode_order == ModeOrder{0, 1, 2};
    return s;
  }
};

namespace detail {

inline bool has_direct_matrix_leg(FormatId s, FormatId d) {
  using F = FormatId;
  if (s == F::Dense) return d == F::COO || d == F::CSR || d == F::CSC || d == F::ZVC || d == F::RLC;
  if (d == F::Dense) return s == F::COO || s == F::CSR || s == F::CSC || s == F::ZVC || s == F::RLC || s == F::BSR;
  if (s == F::COO) return d == F::CSR || d == F::CSC || d == F::RLC || d == F::ZVC || d == F::BSR;
  if (d == F::COO) return s == F::CSR || s == F::CSC || s == F::ZVC || s == F::BSR || s == F::RLC;
  return (s == F::CSR && (d == F::CSC || d == F::BSR));
}

inline ConversionLeg matrix_leg(FormatId s, FormatId d, const PlanStats& st, const HardwareConfig& hw) {
  using F = FormatId;
  using B = Block;
  const index_t M = st.dims[0], K = st.dims[1], n = M * K, z = st.nnz, p = st.rlc_pairs;
  const index_t mask_words = ceil_div(n, hw.dtype_bits);
  const index_t brows = ceil_div(M, st.block_rows), blk_elems = st.bsr_blocks * st.block_rows * st.block_cols;
  // Scattering through col_ptr cursors serializes updates that hit the same column.
  auto scatter = [&](index_t elems, index_t conflicts, index_t lanes) {
    return Stage{B::MemController, elems, std::max(ceil_div(z, lanes), conflicts), "scatter"};
  };
  ConversionLeg leg{s, d, {}};
  auto& v = leg.stages;
  if (s == F::Dense) {
    v.push_back({B::Comparators, n, 0, "nonzero flags"});
    v.push_back({B::PrefixSum, n, 0, "compaction ranks"});
    if (d == F::ZVC) {
      v.push_back({B::MemController, n + z + mask_words, 0, "read dense, write mask and values"});
      return leg;
    }
    if (d == F::RLC) {
      v.push_back({B::Comparators, z, 0, "gap between positions"});
      v.push_back({B::ParallelDiv, z, 0, "filler count"});
      v.push_back({B::MemController, n + 2 * p, 0, "read dense, write pairs"});
      return leg;
    }
    v.push_back({B::ParallelDiv, z, 0, "row = pos div K"});
    v.push_back({B::ParallelMod, z, 0, "col = pos mod K"});
    if (d == F::COO) v.push_back({B::MemController, n + 3 * z, 0, "read dense, write coo"});
    if (d == F::CSR) {
      v.push_back({B::ClusterCounter, z, 0, "row counts"});
      v.push_back({B::PrefixSum, M + 1, 0, "row_ptr"});
      v.push_back({B::MemController, n + 2 * z + M + 1, 0, "read dense, write csr"});
    }
    if (d == F::CSC) {
      v.push_back({B::Sorter, z, 0, "sort col chunk"});
      v.push_back({B::ClusterCounter, z, 0, "col histogram"});
      v.push_back({B::PrefixSum, K + 1, 0, "col_ptr"});
      v.push_back(scatter(2 * z, st.max_col_nnz, hw.sorter_width));
      v.push_back({B::MemController, n + K + 1, 0, "read dense, write col_ptr"});
    }
    return leg;
  }
  if (d == F::Dense) {
    switch (s) {
      case F::COO: v.push_back({B::MemController, 3 * z + n, 0, "read coo, write dense"}); break;
      case F::CSR:
        v.push_back({B::ClusterCounter, z, 0, "expand row_ptr"});
        v.push_back({B::MemController, M + 1 + 2 * z + n, 0, "read csr, write dense"});
        break;
      case F::CSC:
        v.push_back({B::ClusterCounter, z, 0, "expand col_ptr"});
        v.push_back({B::MemController, K + 1 + 2 * z + n, 0, "read csc, write dense"});
        break;
      case F::ZVC:
        v.push_back({B::PrefixSum, n, 0, "value index from mask"});
        v.push_back({B::MemController, mask_words + z + n, 0, "read zvc, write dense"});
        break;
      case F::RLC:
        v.push_back({B::PrefixSum, p, 0, "positions"});
        v.push_back({B::Comparators, p, 0, "drop fillers"});
        v.push_back({B::MemController, 2 * p + n, 0, "read pairs, write dense"});
        break;
      case F::BSR:
        v.push_back({B::ClusterCounter, st.bsr_blocks, 0, "expand block_row_ptr"});
        v.push_back({B::MemController, brows + 1 + st.bsr_blocks + blk_elems + n, 0, "read bsr, write dense"});
        break;
      default: break;
    }
    return leg;
  }
  if (s == F::COO) {
    switch (d) {
      case F::CSR:
        v.push_back({B::ClusterCounter, z, 0, "row counts"});
        v.push_back({B::PrefixSum, M + 1, 0, "row_ptr"});
        v.push_back({B::MemController, 3 * z + 2 * z + M + 1, 0, "read coo, write csr"});
        break;
      case F::CSC:
        v.push_back({B::Sorter, z, 0, "sort col chunk"});
        v.push_back({B::ClusterCounter, z, 0, "col histogram"});
        v.push_back({B::PrefixSum, K + 1, 0, "col_ptr"});
        v.push_back(scatter(2 * z, st.max_col_nnz, hw.sorter_width));
        v.push_back({B::MemController, 3 * z + K + 1, 0, "read coo, write col_ptr"});
        break;
      case F::RLC:
        v.push_back({B::Comparators, z, 0, "gap between positions"});
        v.push_back({B::ParallelDiv, z, 0, "filler count"});
        v.push_back({B::MemController, 3 * z + 2 * p, 0, "read coo, write pairs"});
        break;
      case F::ZVC:
        v.push_back({B::Comparators, z, 0, "mask positions"});
        v.push_back({B::MemController, 3 * z + z + mask_words, 0, "read coo, write zvc"});
        break;
      case F::BSR:
        v.push_back({B::ParallelDiv, z, 0, "block column"});
        v.push_back({B::Comparators, z, 0, "initialized-block flags"});
        v.push_back({B::ClusterCounter, z, 0, "unique blocks per block row"});
        v.push_back({B::PrefixSum, brows + 1, 0, "block_row_ptr"});
        v.push_back({B::MemController, 3 * z + blk_elems + st.bsr_blocks + brows + 1, 0, "read coo, write bsr"});
        break;
      default: break;
    }
    return leg;
  }
  if (d == F::COO) {
    switch (s) {
      case F::CSR:
        v.push_back({B::ClusterCounter, z, 0, "expand row_ptr"});
        v.push_back({B::MemController, M + 1 + 2 * z + 3 * z, 0, "read csr, write coo"});
        break;
      case F::CSC:
        v.push_back({B::ClusterCounter, z, 0, "expand col_ptr"});
        v.push_back({B::Sorter, z, 0, "sort row chunk"});
        v.push_back({B::ClusterCounter, z, 0, "row histogram"});
        v.push_back({B::PrefixSum, M + 1, 0, "row cursors"});
        v.push_back(scatter(3 * z, st.max_row_nnz, hw.sorter_width));
        v.push_back({B::MemController, K + 1 + 2 * z, 0, "read csc"});
        break;
      case F::ZVC:
        v.push_back({B::PrefixSum, n, 0, "positions from mask"});
        v.push_back({B::ParallelDiv, z, 0, "row = pos div K"});
        v.push_back({B::ParallelMod, z, 0, "col = pos mod K"});
        v.push_back({B::MemController, mask_words + z + 3 * z, 0, "read zvc, write coo"});
        break;
      case F::RLC:
        v.push_back({B::Comparators, p, 0, "offset runs by one"});
        v.push_back({B::PrefixSum, p, 0, "linear positions"});
        v.push_back({B::ParallelDiv, p, 0, "row = pos div K"});
        v.push_back({B::ParallelMod, p, 0, "col = pos mod K"});
        v.push_back({B::MemController, 2 * p + 3 * z, 0, "read pairs, write coo"});
        break;
      case F::BSR:
        v.push_back({B::ClusterCounter, st.bsr_blocks, 0, "expand block_row_ptr"});
        v.push_back({B::Comparators, blk_elems, 0, "nonzero flags"});
        v.push_back({B::PrefixSum, blk_elems, 0, "compaction ranks"});
        v.push_back({B::ParallelDiv, z, 0, "offset div C"});
        v.push_back({B::ParallelMod, z, 0, "offset mod C"});
        v.push_back({B::MemController, brows + 1 + st.bsr_blocks + blk_elems + 3 * z, 0, "read bsr, write coo"});
        break;
      default: break;
    }
    return leg;
  }
  if (s == F::CSR && d == F::CSC) {
    v.push_back({B::MemController, z, 0, "read col_ids chunks"});
    if (hw.sorter_width > 1) {
      v.push_back({B::Sorter, z, 0, "sort chunk"});
      v.push_back({B::ClusterCounter, z, 0, "count chunk values"});
    }
    v.push_back({B::PrefixSum, K + 1, 0, "exclusive col_ptr"});
    v.push_back({B::Comparators, z, 0, "row_id from row_ptr walk"});
    v.push_back(scatter(2 * z, st.max_col_nnz, hw.sorter_width));
    v.push_back({B::MemController, M + 1 + z + K + 1, 0, "read row_ptr and values, write col_ptr"});
    return leg;
  }
  if (s == F::CSR && d == F::BSR) {
    v.push_back({B::ParallelMod, z, 0, "block column offset"});
    v.push_back({B::Comparators, z, 0, "initialized-block flags"});
    v.push_back({B::ClusterCounter, z, 0, "unique blocks per block row"});
    v.push_back({B::PrefixSum, brows + 1, 0, "block_row_ptr"});
    v.push_back({B::MemController, M + 1 + 2 * z + blk_elems + st.bsr_blocks + brows + 1, 0, "read csr, write bsr"});
    return leg;
  }
  throw Error("no direct conversion " + std::string(to_string(s)) + "->" + std::string(to_string(d)));
}

inline bool has_direct_tensor_leg(FormatId s, FormatId d) {
  using F = FormatId;
  if (s == F::Dense) return d == F::COO || d == F::CSF || d == F::ZVC;
  if (s == F::COO) return d == F::CSF || d == F::Dense;
  if (s == F::CSF) return d == F::COO;
  if (s == F::ZVC) return d == F::Dense || d == F::COO;
  return false;
}

inline ConversionLeg tensor_leg(FormatId s, FormatId d, const PlanStats& st, const HardwareConfig& hw) {
  using F = FormatId;
  using B = Block;
  const index_t n = st.size(), z = st.nnz, f0 = st.fibers0, f1 = st.fibers1;
  const index_t mask_words = ceil_div(n, hw.dtype_bits);
  const index_t csf_elems = 2 * z + 2 * f0 + 2 * f1 + 2;
  ConversionLeg leg{s, d, {}};
  auto& v = leg.stages;
  if (s == F::Dense) {
    v.push_back({B::Comparators, n, 0, "nonzero flags"});
    v.push_back({B::PrefixSum, n, 0, "compaction ranks"});
    if (d == F::ZVC) {
      v.push_back({B::MemController, n + z + mask_words, 0, "read dense, write zvc"});
      return leg;
    }
    v.push_back({B::ParallelDiv, 2 * z, 0, "coordinates div dims"});
    v.push_back({B::ParallelMod, 2 * z, 0, "coordinates mod dims"});
    if (d == F::COO) {
      v.push_back({B::MemController, n + 4 * z, 0, "read dense, write coo"});
    } else {
      v.push_back({B::Comparators, 3 * z, 0, "coordinate changes"});
      v.push_back({B::PrefixSum, f0 + f1 + 2, 0, "ptr arrays"});
      v.push_back({B::MemController, n + csf_elems, 0, "read dense, write csf"});
    }
    return leg;
  }
  if (s == F::COO && d == F::CSF) {
    if (!st.identity_order) v.push_back({B::Sorter, z, 0, "reorder modes"});
    v.push_back({B::Comparators, 3 * z, 0, "coordinate changes"});
    v.push_back({B::PrefixSum, f0 + f1 + 2, 0, "ptr arrays"});
    v.push_back({B::MemController, 4 * z + csf_elems, 0, "read coo, write csf"});
    return leg;
  }
  if (s == F::COO && d == F::Dense) {
    v.push_back({B::MemController, 4 * z + n, 0, "read coo, write dense"});
    return leg;
  }
  if (s == F::CSF && d == F::COO) {
    v.push_back({B::ClusterCounter, f1 + z, 0, "expand ptr arrays"});
    if (!st.identity_order) v.push_back({B::Sorter, z, 0, "reorder modes"});
    v.push_back({B::MemController, csf_elems + 4 * z, 0, "read csf, write coo"});
    return leg;
  }
  if (s == F::ZVC) {
    v.push_back({B::PrefixSum, n, 0, "positions from mask"});
    if (d == F::COO) {
      v.push_back({B::ParallelDiv, 2 * z, 0, "coordinates div dims"});
      v.push_back({B::ParallelMod, 2 * z, 0, "coordinates mod dims"});
      v.push_back({B::MemController, mask_words + z + 4 * z, 0, "read zvc, write coo"});
    } else {
      v.push_back({B::MemController, mask_words + z + n, 0, "read zvc, write dense"});
    }
    return leg;
  }
  throw Error("no direct tensor conversion " + std::string(to_string(s)) + "->" + std::string(to_string(d)));
}

}  // namespace detail

/// Builds the building-block plan for src -> dst, routing through COO when no
/// direct path exists. X -> X yields an empty plan.
inline ConversionPlan plan_conversion(FormatId src, FormatId dst, const PlanStats& st, const HardwareConfig& hw) {
  ConversionPlan plan{src, dst, st.rank, {}};
  if (src == dst) return plan;
  if (st.rank == 2) {
    if (!is_matrix_format(src) || !is_matrix_format(dst))
      throw Error("unsupported matrix conversion " + std::string(to_string(src)) + "->" + std::string(to_string(dst)));
    if (detail::has_direct_matrix_leg(src, dst)) {
      plan.legs.push_back(detail::matrix_leg(src, dst, st, hw));
    } else {
      plan.legs.push_back(detail::matrix_leg(src, FormatId::COO, st, hw));
      plan.legs.push_back(detail::matrix_leg(FormatId::COO, dst, st, hw));
    }
    return plan;
  }
  auto tensor_ok = [](FormatId f) { return is_tensor_format(f) || f == FormatId::ZVC; };
  if (!tensor_ok(src) || !tensor_ok(dst) || (dst == FormatId::ZVC && src != FormatId::Dense))
    throw Error("unsupported tensor conversion " + std::string(to_string(src)) + "->" + std::string(to_string(dst)));
  if (detail::has_direct_tensor_leg(src, dst)) {
    plan.legs.push_back(detail::tensor_leg(src, dst, st, hw));
  } else {
    plan.legs.push_back(detail::tensor_leg(src, FormatId::COO, st, hw));
    plan.legs.push_back(detail::tensor_leg(FormatId::COO, dst, st, hw));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Functional conversions
// ---------------------------------------------------------------------------

template <class T>
struct Converted {
  T value;
  ConversionPlan plan;
  ConversionCost cost;
};

namespace detail {

inline FormatParams params_for(const HardwareConfig& hw, FormatParams p) {
  p.run_bits = hw.run_bits;
  return p;
}

template <class T>
Converted<T> finish(T value, FormatId src, FormatId dst, const PlanStats& st, const HardwareConfig& hw) {
  ConversionPlan plan = plan_conversion(src, dst, st, hw);
  ConversionCost cost = conversion_cost(plan, hw);
  return {std::move(value), std::move(plan), std::move(cost)};
}

}  // namespace detail

/// Histogram, exclusive scan, cursor scatter, then cursors shifted back.
inline Converted<CscMatrix> convert_csr_to_csc(const CsrMatrix& a, const HardwareConfig& hw) {
  require_valid(a);
  const index_t M = a.rows, K = a.cols, z = a.nnz();
  const auto chunk = static_cast<std::size_t>(hw.sorter_width);
  // Read col_ids in chunks, sort, count clusters, accumulate.
  std::vector<index_t> counts(static_cast<std::size_t>(K) + 1, 0);
  std::vector<index_t> buf;
  for (std::size_t base = 0; base < a.col_ids.size(); base += chunk) {
    buf.assign(a.col_ids.begin() + static_cast<std::ptrdiff_t>(base),
               a.col_ids.begin() + static_cast<std::ptrdiff_t>(std::min(a.col_ids.size(), base + chunk)));
    std::sort(buf.begin(), buf.end());
    for (std::size_t i = 0; i < buf.size();) {
      std::size_t j = i;
      while (j < buf.size() && buf[j] == buf[i]) ++j;
      counts[static_cast<std::size_t>(buf[i]) + 1] += static_cast<index_t>(j - i);
      i = j;
    }
  }
  // Prefix sum over the shifted histogram gives each column's start.
  std::vector<index_t> col_ptr = prefix_sum(counts, hw.prefix_variant, hw.prefix_width).sums;
  // Scatter; cursors post-increment, row_id from the row_ptr walk.
  CscMatrix out{M, K, {}, std::vector<index_t>(static_cast<std::size_t>(z)), std::vector<double>(static_cast<std::size_t>(z))};
  index_t row = 0;
  for (index_t p = 0; p < z; ++p) {
    while (a.row_ptr[row + 1] <= p) ++row;
    index_t dst = col_ptr[static_cast<std::size_t>(a.col_ids[p])]++;
    out.row_ids[dst] = row;
    out.values[dst] = a.values[p];
  }
  // Every cursor now sits at the next column's start; shift back one slot.
  for (index_t j = K; j > 0; --j) col_ptr[j] = col_ptr[j - 1];
  col_ptr[0] = 0;
  out.col_ptr = std::move(col_ptr);
  auto prof = MatrixProfile::from_coo(coo_from_csr(a), detail::params_for(hw, {}));
  return detail::finish(std::move(out), FormatId::CSR, FormatId::CSC, PlanStats::of(prof), hw);
}

/// Offset runs, scan to linear positions, divide and mod by K, drop fillers.
inline Converted<CooMatrix> convert_rlc_to_coo(const RlcMatrix& a, const HardwareConfig& hw) {
  require_valid(a);
  std::vector<index_t> runs(a.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) runs[i] = a.pairs[i].run + (i == 0 ? 0 : 1);
  std::vector<index_t> pos = prefix_sum(runs, hw.prefix_variant, hw.prefix_width).sums;
  CooMatrix out{a.rows, a.cols, {}, {}, {}};
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (a.pairs[i].value == 0.0) continue;
    out.row_ids.push_back(pos[i] / a.cols);
    out.col_ids.push_back(pos[i] % a.cols);
    out.values.push_back(a.pairs[i].value);
  }
  FormatParams p;
  p.run_bits = a.run_bits;
  auto prof = MatrixProfile::from_coo(out, p);
  prof.counts.rlc_pairs = static_cast<index_t>(a.pairs.size());
  return detail::finish(std::move(out), FormatId::RLC, FormatId::COO, PlanStats::of(prof), hw);
}

/// Walks one row block at a time, tracking initialized blocks with flags.
inline Converted<BsrMatrix> convert_csr_to_bsr(const CsrMatrix& a, index_t R, index_t C, const HardwareConfig& hw) {
  require_valid(a);
  if (R < 1 || C < 1) throw Error("BSR block dims must be >= 1");
  BsrMatrix out{a.rows, a.cols, R, C, {}, {}, {}};
  const index_t brows = ceil_div(a.rows, R), bcols = ceil_div(a.cols, C);
  std::vector<index_t> slot(static_cast<std::size_t>(bcols), -1);  // initialized-block flags
  std::vector<index_t> per_row{0};
  for (index_t br = 0; br < brows; ++br) {
    std::vector<index_t> found;
    for (index_t i = br * R; i < std::min(a.rows, (br + 1) * R); ++i)
      for (index_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
        index_t bc = a.col_ids[p] / C;
        if (slot[static_cast<std::size_t>(bc)] < 0) {
          slot[static_cast<std::size_t>(bc)] = 0;
          found.push_back(bc);
        }
      }
    std::sort(found.begin(), found.end());
    const index_t base = out.num_blocks();
    for (std::size_t t = 0; t < found.size(); ++t) {
      slot[static_cast<std::size_t>(found[t])] = base + static_cast<index_t>(t);
      out.block_col_ids.push_back(found[t]);
    }
    out.block_values.resize(static_cast<std::size_t>(out.num_blocks() * R * C), 0.0);
    for (index_t i = br * R; i < std::min(a.rows, (br + 1) * R); ++i)
      for (index_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
        index_t blk = slot[static_cast<std::size_t>(a.col_ids[p] / C)];
        out.block_values[static_cast<std::size_t>(blk * R * C + (i % R) * C + a.col_ids[p] % C)] = a.values[p];
      }
    for (index_t bc : found) slot[static_cast<std::size_t>(bc)] = -1;
    per_row.push_back(static_cast<index_t>(found.size()));
  }
  out.block_row_ptr = prefix_sum(per_row, hw.prefix_variant, hw.prefix_width).sums;
  FormatParams p;
  p.block_rows = R;
  p.block_cols = C;
  auto prof = MatrixProfile::from_coo(coo_from_csr(a), detail::params_for(hw, p));
  return detail::finish(std::move(out), FormatId::CSR, FormatId::BSR, PlanStats::of(prof), hw);
}

/// Flag scan, ranks, coordinates by div/mod, then the tree by comparing
/// consecutive coordinates and scanning child counts into ptr arrays.
inline Converted<CsfTensor3> convert_dense_to_csf(const DenseTensor3& a, ModeOrder order, const HardwareConfig& hw) {
  require_valid(a);
  detail::check_params(FormatId::CSF, FormatParams{2, 2, 4, order});
  const Dims3& d = a.dims;
  const index_t n = d[0] * d[1] * d[2];
  const index_t e1 = d[order[1]], e2 = d[order[2]];
  // Stream in the declared linearization: order[2] fastest, order[0] slowest.
  std::vector<index_t> flags(static_cast<std::size_t>(n));
  std::vector<double> stream(static_cast<std::size_t>(n));
  for (index_t lin = 0; lin < n; ++lin) {
    std::array<index_t, 3> c{};
    c[order[2]] = lin % e2;
    c[order[1]] = (lin / e2) % e1;
    c[order[0]] = lin / (e1 * e2);
    stream[lin] = a.at(c[0], c[1], c[2]);
    flags[lin] = stream[lin] != 0.0;
  }
  std::vector<index_t> ranks = prefix_sum(flags, hw.prefix_variant, hw.prefix_width).sums;
  const index_t z = n == 0 ? 0 : ranks.back();
  std::vector<index_t> lin_of(static_cast<std::size_t>(z));
  for (index_t lin = 0; lin < n; ++lin)
    if (flags[lin]) lin_of[ranks[lin] - 1] = lin;
  CsfTensor3 out{d, order, {}, {}, {}, {}, {}, {}};
  std::vector<index_t> kids0, kids1;  // child counts, scanned into ptrs below
  index_t prev0 = -1, prev1 = -1;
  for (index_t r = 0; r < z; ++r) {
    index_t lin = lin_of[r];
    index_t x = lin / (e1 * e2), y = (lin / e2) % e1, w = lin % e2;
    bool new0 = x != prev0, new1 = new0 || y != prev1;
    if (new0) {
      out.idx0.push_back(x);
      kids0.push_back(0);
    }
    if (new1) {
      out.idx1.push_back(y);
      kids1.push_back(0);
      ++kids0.back();
    }
    out.idx2.push_back(w);
    out.values.push_back(stream[lin]);
    ++kids1.back();
    prev0 = x;
    prev1 = y;
  }
  kids0.insert(kids0.begin(), 0);
  kids1.insert(kids1.begin(), 0);
  out.ptr0 = prefix_sum(kids0, hw.prefix_variant, hw.prefix_width).sums;
  out.ptr1 = prefix_sum(kids1, hw.prefix_variant, hw.prefix_width).sums;
  FormatParams p;
  p.mode_order = order;
  TensorProfile prof = TensorProfile::from_coo(coo_from_csf(out), p);
  return detail::finish(std::move(out), FormatId::Dense, FormatId::CSF, PlanStats::of(prof), hw);
}

/// Dense -> COO through nonzero flags, compaction ranks and div/mod by K.
inline CooMatrix dense_to_coo_blocks(const DenseMatrix& a, const HardwareConfig& hw) {
  std::vector<index_t> flags(a.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) flags[i] = a.values[i] != 0.0;
  std::vector<index_t> ranks = prefix_sum(flags, hw.prefix_variant, hw.prefix_width).sums;
  const index_t z = ranks.empty() ? 0 : ranks.back();
  CooMatrix out{a.rows, a.cols, std::vector<index_t>(static_cast<std::size_t>(z)),
                std::vector<index_t>(static_cast<std::size_t>(z)), std::vector<double>(static_cast<std::size_t>(z))};
  for (std::size_t lin = 0; lin < flags.size(); ++lin)
    if (flags[lin]) {
      auto r = static_cast<std::size_t>(ranks[lin] - 1);
      out.row_ids[r] = static_cast<index_t>(lin) / a.cols;
      out.col_ids[r] = static_cast<index_t>(lin) % a.cols;
      out.values[r] = a.values[lin];
    }
  return out;
}

/// Generic converter: direct building-block path when one exists, otherwise
/// through COO. The result always equals the reference encoding of src.
inline Converted<FormattedMatrix> convert(const FormattedMatrix& src, FormatId dst, const HardwareConfig& hw,
                                          FormatParams params = {}) {
  require_valid(src);
  params = detail::params_for(hw, params);
  detail::check_params(dst, params);
  const FormatId s = format_of(src);
  if (!is_matrix_format(dst)) throw Error("format " + std::string(to_string(dst)) + " is not a matrix format");
  if (s == dst) {
    bool same = true;
    if (const auto* r = std::get_if<RlcMatrix>(&src)) same = r->run_bits == params.run_bits;
    if (const auto* b = std::get_if<BsrMatrix>(&src))
      same = b->block_rows == params.block_rows && b->block_cols == params.block_cols;
    if (same) return {src, ConversionPlan{s, dst, 2, {}}, {}};
  }
  if (s == FormatId::CSR && dst == FormatId::CSC) {
    auto r = convert_csr_to_csc(std::get<CsrMatrix>(src), hw);
    return {std::move(r.value), std::move(r.plan), std::move(r.cost)};
  }
  if (s == FormatId::CSR && dst == FormatId::BSR) {
    auto r = convert_csr_to_bsr(std::get<CsrMatrix>(src), params.block_rows, params.block_cols, hw);
    return {std::move(r.value), std::move(r.plan), std::move(r.cost)};
  }
  CooMatrix hub;
  if (const auto* r = std::get_if<RlcMatrix>(&src)) hub = convert_rlc_to_coo(*r, hw).value;
  else if (const auto* d = std::get_if<DenseMatrix>(&src)) hub = dense_to_coo_blocks(*d, hw);
  else hub = to_coo(src);
  MatrixProfile prof = MatrixProfile::from_coo(hub, params);
  if (const auto* r = std::get_if<RlcMatrix>(&src)) prof.counts.rlc_pairs = static_cast<index_t>(r->pairs.size());
  if (const auto* b = std::get_if<BsrMatrix>(&src)) {
    prof.counts.bsr_blocks = b->num_blocks();
    prof.params.block_rows = b->block_rows;
    prof.params.block_cols = b->block_cols;
  }
  PlanStats st = PlanStats::of(prof);
  FormattedMatrix value = from_coo(hub, dst, params);
  if (dst == FormatId::BSR) st.bsr_blocks = std::get<BsrMatrix>(value).num_blocks();
  if (dst == FormatId::RLC) st.rlc_pairs = static_cast<index_t>(std::get<RlcMatrix>(value).pairs.size());
  ConversionPlan plan = plan_conversion(s, dst, st, hw);
  ConversionCost cost = conversion_cost(plan, hw);
  return {std::move(value), std::move(plan), std::move(cost)};
}

inline Converted<FormattedTensor3> convert(const FormattedTensor3& src, FormatId dst, const HardwareConfig& hw,
                                           FormatParams params = {}) {
  require_valid(src);
  detail::check_params(dst, params);
  if (!is_tensor_format(dst))
    throw Error("format " + std::string(to_string(dst)) + " is not supported for 3-D tensors");
  const FormatId s = format_of(src);
  if (s == dst) {
    const auto* c = std::get_if<CsfTensor3>(&src);
    if (!c || c->mode_order == params.mode_order) return {src, ConversionPlan{s, dst, 3, {}}, {}};
  }
  if (s == FormatId::Dense && dst == FormatId::CSF) {
    auto r = convert_dense_to_csf(std::get<DenseTensor3>(src), params.mode_order, hw);
    return {std::move(r.value), std::move(r.plan), std::move(r.cost)};
  }
  CooTensor3 hub = to_coo(src);
  FormattedTensor3 value = from_coo(hub, dst, params);
  FormatParams p = params;
  if (const auto* c = std::get_if<CsfTensor3>(&src)) p.mode_order = c->mode_order;
  PlanStats st = PlanStats::of(TensorProfile::from_coo(hub, dst == FormatId::CSF ? params : p));
  ConversionPlan plan = plan_conversion(s, dst, st, hw);
  ConversionCost cost = conversion_cost(plan, hw);
  return {std::move(value), std::move(plan), std::move(cost)};
}

}  // namespace sparseflex
