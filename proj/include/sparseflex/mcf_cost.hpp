#pragma once

#include <cmath>
#include <unordered_set>
#include <vector>

#include "sparseflex/formats.hpp"
#include "sparseflex/hardware.hpp"

namespace sparseflex {

struct StorageBreakdown {
  bits_t data_bits = 0;
  bits_t metadata_bits = 0;

  bits_t total_bits() const { return data_bits + metadata_bits; }
  double metadata_fraction() const {
    bits_t t = total_bits();
    return t == 0 ? 0.0 : static_cast<double>(metadata_bits) / static_cast<double>(t);
  }
  friend bool operator==(const StorageBreakdown&, const StorageBreakdown&) = default;
};

/// Instance-dependent counts. A negative entry means "unknown": the cost
/// model then substitutes its expectation under uniform-random placement.
struct StructureCounts {
  index_t rlc_pairs = -1;
  index_t bsr_blocks = -1;
  index_t csf_fibers0 = -1;  // |idx0|
  index_t csf_fibers1 = -1;  // |idx1|
};

// ---------------------------------------------------------------------------
// Expectations under uniform-random placement
// ---------------------------------------------------------------------------

/// 1 - (1 - p)^n, accurate for tiny p.
inline double prob_any(double p, double n) {
  if (p >= 1.0) return n > 0 ? 1.0 : 0.0;
  return -std::expm1(n * std::log1p(-p));
}

inline index_t expected_rlc_pairs(double size, index_t nnz, int run_bits) {
  if (nnz <= 0 || size <= 0) return 0;
  double p = std::min(1.0, static_cast<double>(nnz) / size);
  if (p >= 1.0) return nnz;
  // Gap lengths are geometric; a gap g costs floor(g / 2^r) extra filler pairs.
  double qL = std::exp(std::ldexp(1.0, run_bits) * std::log1p(-p));
  double fillers_per_nnz = qL / (1.0 - qL);
  return static_cast<index_t>(std::llround(static_cast<double>(nnz) * (1.0 + fillers_per_nnz)));
}

inline index_t expected_bsr_blocks(index_t M, index_t K, index_t nnz, index_t R, index_t C) {
  if (nnz <= 0) return 0;
  double p = std::min(1.0, static_cast<double>(nnz) / (static_cast<double>(M) * static_cast<double>(K)));
  double blocks = static_cast<double>(ceil_div(M, R)) * static_cast<double>(ceil_div(K, C));
  return std::min<index_t>(nnz, static_cast<index_t>(std::llround(blocks * prob_any(p, static_cast<double>(R * C)))));
}

/// Expected number of distinct level-0 and level-1 nodes of a CSF tree.
inline std::pair<index_t, index_t> expected_csf_fibers(const Dims3& dims, index_t nnz, ModeOrder order) {
  if (nnz <= 0) return {0, 0};
  double size = static_cast<double>(dims[0]) * static_cast<double>(dims[1]) * static_cast<double>(dims[2]);
  double p = std::min(1.0, static_cast<double>(nnz) / size);
  double d0 = static_cast<double>(dims[order[0]]), d1 = static_cast<double>(dims[order[1]]),
         d2 = static_cast<double>(dims[order[2]]);
  auto f1 = static_cast<index_t>(std::llround(d0 * d1 * prob_any(p, d2)));
  auto f0 = static_cast<index_t>(std::llround(d0 * prob_any(p, d1 * d2)));
  f1 = std::clamp<index_t>(f1, 1, nnz);
  f0 = std::clamp<index_t>(f0, 1, f1);
  return {f0, f1};
}

// ---------------------------------------------------------------------------
// Storage formulas
// ---------------------------------------------------------------------------

inline StorageBreakdown matrix_storage_bits(FormatId f, index_t M, index_t K, index_t nnz, int b,
                                            const FormatParams& params = {}, const StructureCounts& counts = {}) {
  if (nnz < 0 || static_cast<double>(nnz) > static_cast<double>(M) * static_cast<double>(K))
    throw Error("nnz out of range for the given dims");
  const bits_t data = nnz * b;
  switch (f) {
    case FormatId::Dense: return {M * K * b, 0};
    case FormatId::COO: return {data, nnz * (index_bits(M) + index_bits(K))};
    case FormatId::CSR: return {data, nnz * index_bits(K) + (M + 1) * pointer_bits(nnz)};
    case FormatId::CSC: return {data, nnz * index_bits(M) + (K + 1) * pointer_bits(nnz)};
    case FormatId::ZVC: return {data, M * K};
    case FormatId::RLC: {
      index_t pairs = counts.rlc_pairs >= 0
                          ? counts.rlc_pairs
                          : expected_rlc_pairs(static_cast<double>(M) * static_cast<double>(K), nnz, params.run_bits);
      return {pairs * b, pairs * params.run_bits};
    }
    case FormatId::BSR: {
      const index_t R = params.block_rows, C = params.block_cols;
      index_t nblk = counts.bsr_blocks >= 0 ? counts.bsr_blocks : expected_bsr_blocks(M, K, nnz, R, C);
      return {nblk * R * C * b,
              nblk * index_bits(ceil_div(K, C)) + (ceil_div(M, R) + 1) * pointer_bits(nblk)};
    }
    case FormatId::CSF: break;
  }
  throw Error("CSF is not a matrix format");
}

inline StorageBreakdown tensor_storage_bits(FormatId f, const Dims3& d, index_t nnz, int b,
                                            const FormatParams& params = {}, const StructureCounts& counts = {}) {
  const index_t size = d[0] * d[1] * d[2];
  if (nnz < 0 || nnz > size) throw Error("nnz out of range for the given dims");
  const bits_t data = nnz * b;
  switch (f) {
    case FormatId::Dense: return {size * b, 0};
    case FormatId::COO: return {data, nnz * (index_bits(d[0]) + index_bits(d[1]) + index_bits(d[2]))};
    case FormatId::ZVC: return {data, size};
    case FormatId::CSF: {
      auto [f0, f1] = (counts.csf_fibers0 >= 0 && counts.csf_fibers1 >= 0)
                          ? std::pair{counts.csf_fibers0, counts.csf_fibers1}
                          : expected_csf_fibers(d, nnz, params.mode_order);
      const auto& o = params.mode_order;
      bits_t idx = f0 * index_bits(d[o[0]]) + f1 * index_bits(d[o[1]]) + nnz * index_bits(d[o[2]]);
      bits_t ptr = (f0 + 1) * pointer_bits(f1) + (f1 + 1) * pointer_bits(nnz);
      return {data, idx + ptr};
    }
    default: break;
  }
  throw Error("format " + std::string(to_string(f)) + " has no 3-D tensor storage model");
}

// ---------------------------------------------------------------------------
// Exact counts from instances
// ---------------------------------------------------------------------------

/// Counts of a canonical COO instance for the given encoder parameters.
inline StructureCounts structure_counts(const CooMatrix& c, const FormatParams& p) {
  StructureCounts s;
  struct Linear {
    const CooMatrix& c;
    struct It {
      const CooMatrix* c;
      std::size_t e;
      index_t operator*() const { return c->row_ids[e] * c->cols + c->col_ids[e]; }
      It& operator++() { ++e; return *this; }
      bool operator!=(const It& o) const { return e != o.e; }
    };
    It begin() const { return {&c, 0}; }
    It end() const { return {&c, c.values.size()}; }
  };
  s.rlc_pairs = rlc_pair_count(Linear{c}, p.run_bits);
  std::unordered_set<index_t> blocks;
  const index_t bcols = ceil_div(c.cols, p.block_cols);
  for (std::size_t e = 0; e < c.values.size(); ++e)
    blocks.insert((c.row_ids[e] / p.block_rows) * bcols + c.col_ids[e] / p.block_cols);
  s.bsr_blocks = static_cast<index_t>(blocks.size());
  return s;
}

inline StructureCounts structure_counts(const CooTensor3& coo, ModeOrder order) {
  CooTensor3 c = canonicalize(coo, order);
  StructureCounts s;
  s.csf_fibers0 = s.csf_fibers1 = 0;
  const auto& a = c.coords[order[0]];
  const auto& b = c.coords[order[1]];
  for (std::size_t e = 0; e < c.values.size(); ++e) {
    bool new0 = e == 0 || a[e] != a[e - 1];
    s.csf_fibers0 += new0;
    s.csf_fibers1 += new0 || b[e] != b[e - 1];
  }
  return s;
}

/// Exact storage of a concrete encoding (RLC fillers and BSR padding included).
inline StorageBreakdown storage_bits(const FormattedMatrix& m, int dtype_bits) {
  auto [M, K] = shape_of(m);
  FormatParams p;
  StructureCounts counts;
  index_t nnz = 0;
  if (const auto* r = std::get_if<RlcMatrix>(&m)) {
    p.run_bits = r->run_bits;
    counts.rlc_pairs = static_cast<index_t>(r->pairs.size());
    nnz = nnz_density(m).nnz;
  } else if (const auto* b = std::get_if<BsrMatrix>(&m)) {
    p.block_rows = b->block_rows;
    p.block_cols = b->block_cols;
    counts.bsr_blocks = b->num_blocks();
    nnz = nnz_density(m).nnz;
  } else {
    nnz = nnz_density(m).nnz;
  }
  return matrix_storage_bits(format_of(m), M, K, nnz, dtype_bits, p, counts);
}

inline StorageBreakdown storage_bits(const FormattedTensor3& t, int dtype_bits) {
  FormatParams p;
  StructureCounts counts;
  if (const auto* c = std::get_if<CsfTensor3>(&t)) {
    p.mode_order = c->mode_order;
    counts.csf_fibers0 = static_cast<index_t>(c->idx0.size());
    counts.csf_fibers1 = static_cast<index_t>(c->idx1.size());
  }
  return tensor_storage_bits(format_of(t), shape_of(t), nnz_density(t).nnz, dtype_bits, p, counts);
}

// ---------------------------------------------------------------------------
// DRAM transfer and ranking
// ---------------------------------------------------------------------------

struct DramCost {
  double energy = 0.0;
  index_t cycles = 0;
};

inline DramCost dram_cost(bits_t bits, const HardwareConfig& hw) {
  return {static_cast<double>(bits) * hw.e_dram_per_bit, ceil_div(bits, hw.dram_bits_per_cycle)};
}

struct RankedFormat {
  FormatId format;
  StorageBreakdown storage;
};

inline constexpr std::array<FormatId, 6> kMatrixMcfCandidates = {FormatId::Dense, FormatId::ZVC, FormatId::RLC,
                                                                 FormatId::CSR,   FormatId::CSC, FormatId::COO};

inline void sort_ranking(std::vector<RankedFormat>& r) {
  std::stable_sort(r.begin(), r.end(), [](const RankedFormat& a, const RankedFormat& b) {
    if (a.storage.total_bits() != b.storage.total_bits()) return a.storage.total_bits() < b.storage.total_bits();
    return tie_order(a.format) < tie_order(b.format);
  });
}

/// Ranks MCF candidates for a hypothetical uniform-random (dims, nnz).
/// RLC uses its expected pair count at hw.run_bits.
inline std::vector<RankedFormat> rank_mcf(index_t M, index_t K, index_t nnz, const HardwareConfig& hw) {
  FormatParams p;
  p.run_bits = hw.run_bits;
  std::vector<RankedFormat> r;
  for (FormatId f : kMatrixMcfCandidates) r.push_back({f, matrix_storage_bits(f, M, K, nnz, hw.dtype_bits, p)});
  sort_ranking(r);
  return r;
}

/// Ranks MCF candidates for a concrete instance (exact RLC pair count).
inline std::vector<RankedFormat> rank_mcf(const CooMatrix& c, const HardwareConfig& hw) {
  FormatParams p;
  p.run_bits = hw.run_bits;
  StructureCounts counts = structure_counts(c, p);
  std::vector<RankedFormat> r;
  for (FormatId f : kMatrixMcfCandidates)
    r.push_back({f, matrix_storage_bits(f, c.rows, c.cols, c.nnz(), hw.dtype_bits, p, counts)});
  sort_ranking(r);
  return r;
}

}  // namespace sparseflex
