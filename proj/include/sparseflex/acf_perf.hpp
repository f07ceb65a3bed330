#pragma once

#include <cmath>
#include <vector>

#include "sparseflex/formats.hpp"
#include "sparseflex/hardware.hpp"
#include "sparseflex/profile.hpp"

namespace sparseflex {

/// How a streamed ACF rides the bus: s shared metadata slots per cycle,
/// m metadata slots per element, and whether a group spans a whole line
/// (row or fiber) or a single element.
struct StreamDescriptor {
  FormatId acf;
  int shared_meta = 0;
  int elem_meta = 0;
  bool singleton_groups = false;
  bool includes_zeros = false;
};

inline StreamDescriptor stream_descriptor(FormatId acf, int rank = 2) {
  if (rank == 3) {
    switch (acf) {
      case FormatId::Dense: return {acf, 2, 0, false, true};
      case FormatId::COO: return {acf, 0, 3, true, false};
      case FormatId::CSF: return {acf, 2, 1, false, false};
      default: break;
    }
    throw Error("format " + std::string(to_string(acf)) + " cannot be streamed as a tensor");
  }
  switch (acf) {
    case FormatId::Dense: return {acf, 1, 0, false, true};
    case FormatId::CSR: return {acf, 1, 1, false, false};
    // Consecutive CSC elements carry different row ids, so each needs its own cycle.
    case FormatId::CSC: return {acf, 1, 1, true, false};
    case FormatId::COO: return {acf, 0, 2, true, false};
    default: break;
  }
  throw Error("format " + std::string(to_string(acf)) + " cannot be streamed");
}

/// Largest n with n * (1 + m) + s <= bus (metadata scaled by the width ratio).
inline index_t elements_per_cycle(const StreamDescriptor& d, const HardwareConfig& hw) {
  const double r = hw.metadata_ratio();
  const double room = static_cast<double>(hw.bus_elems_per_cycle) - d.shared_meta * r;
  const auto n = static_cast<index_t>(std::floor(room / (1.0 + d.elem_meta * r) + 1e-9));
  if (n < 1) throw Error("bus too narrow for one " + std::string(to_string(d.acf)) + " element plus metadata");
  return n;
}

inline void require_stationary(FormatId acf) {
  if (acf != FormatId::Dense && acf != FormatId::CSC && acf != FormatId::COO)
    throw Error("format " + std::string(to_string(acf)) + " cannot be held stationary");
}

struct PerfReport {
  index_t load_cycles = 0;
  index_t stream_cycles = 0;
  index_t total_cycles = 0;
  double useful_macs = 0.0;
  double executed_macs = 0.0;
  double pe_utilization = 0.0;
  double buffer_metadata_elems = 0.0;
  double buffer_data_elems = 0.0;
  index_t k_tiles = 0;
  index_t col_tiles = 0;
  double streamed_elems = 0.0;
  double loaded_elems = 0.0;
  double flushes = 0.0;
  index_t write_back_cycles = 0;
  double energy = 0.0;
};

/// Streamed operand: a pattern whose columns are the contraction index.
/// Lines are cut into groups every `segment` contraction positions.
struct StreamedView {
  const MatrixProfile* pattern;
  StreamDescriptor desc;
  index_t segment;
};

/// Stationary operand K x N. A null pattern means fully dense.
struct StationaryView {
  index_t rows;
  index_t cols;
  FormatId acf;
  const MatrixProfile* pattern;
};

namespace detail {

/// Cuts the contraction range so that no PE's buffer overflows. Dense slices
/// hold a fixed width; sparse slices grow greedily until some column is full.
inline std::vector<index_t> slice_bounds(const StationaryView& B, const HardwareConfig& hw) {
  std::vector<index_t> bounds{0};
  if (B.rows == 0) return bounds;
  if (B.acf == FormatId::Dense || B.pattern == nullptr) {
    for (index_t k = hw.pe_buffer_elems; k < B.rows; k += hw.pe_buffer_elems) bounds.push_back(k);
    bounds.push_back(B.rows);
    return bounds;
  }
  const auto cap = static_cast<index_t>(
      std::floor(static_cast<double>(hw.pe_buffer_elems) / (1.0 + hw.metadata_ratio()) + 1e-9));
  if (cap < 1) throw Error("PE buffer too small for one stationary element plus its index");
  const MatrixProfile& P = *B.pattern;
  std::vector<index_t> count(static_cast<std::size_t>(P.cols), 0);
  std::vector<index_t> touched;
  for (index_t k = 0; k < P.rows; ++k) {
    bool full = false;
    for (index_t q = P.row_ptr[k]; q < P.row_ptr[k + 1]; ++q)
      full = full || count[static_cast<std::size_t>(P.col_ids[q])] + 1 > cap;
    if (full) {
      bounds.push_back(k);
      for (index_t j : touched) count[static_cast<std::size_t>(j)] = 0;
      touched.clear();
    }
    for (index_t q = P.row_ptr[k]; q < P.row_ptr[k + 1]; ++q) {
      auto j = static_cast<std::size_t>(P.col_ids[q]);
      if (count[j]++ == 0) touched.push_back(P.col_ids[q]);
    }
  }
  bounds.push_back(P.rows);
  return bounds;
}

}  // namespace detail

/// Weight-stationary simulation: B's columns are pinned one per PE (in
/// tiles of n_pe columns, contraction cut into buffer-sized slices) while A
/// streams once per column tile. Streaming bounds time; MACs overlap it.
inline PerfReport simulate_ws(const StreamedView& A, const StationaryView& B, const HardwareConfig& hw) {
  hw.check();
  require_stationary(B.acf);
  const MatrixProfile& P = *A.pattern;
  if (P.cols != B.rows) throw Error("dimension mismatch: streamed contraction != stationary rows");
  const double ratio = hw.metadata_ratio();
  const index_t n_fit = elements_per_cycle(A.desc, hw);
  const bool b_dense = B.acf == FormatId::Dense || B.pattern == nullptr;

  PerfReport r;
  const std::vector<index_t> bounds = detail::slice_bounds(B, hw);
  const index_t slices = static_cast<index_t>(bounds.size()) - 1;
  std::vector<index_t> slice_of(static_cast<std::size_t>(B.rows));
  for (index_t s = 0; s < slices; ++s)
    for (index_t k = bounds[s]; k < bounds[s + 1]; ++k) slice_of[static_cast<std::size_t>(k)] = s;
  r.k_tiles = slices;
  r.col_tiles = ceil_div(B.cols, hw.n_pe);

  // Streamed side, per slice: cycles, bus slots and output-register changes.
  std::vector<double> cycles(static_cast<std::size_t>(slices), 0.0), slots(cycles), flush(cycles);
  const double s_meta = A.desc.shared_meta * ratio, e_cost = 1.0 + A.desc.elem_meta * ratio;
  auto add_group = [&](index_t s, index_t len) {
    if (len <= 0) return;
    index_t c = A.desc.singleton_groups ? len : ceil_div(len, n_fit);
    cycles[s] += static_cast<double>(c);
    slots[s] += static_cast<double>(len) * e_cost + static_cast<double>(c) * s_meta;
    flush[s] += A.desc.acf == FormatId::CSC ? static_cast<double>(len) : 1.0;
  };
  if (A.desc.includes_zeros) {
    // Every line streams every position, one group per segment piece.
    for (index_t s = 0; s < slices; ++s)
      for (index_t lo = bounds[s]; lo < bounds[s + 1];) {
        index_t hi = std::min(bounds[s + 1], (lo / A.segment + 1) * A.segment);
        for (index_t i = 0; i < P.rows; ++i) add_group(s, hi - lo);
        lo = hi;
      }
  } else {
    for (index_t i = 0; i < P.rows; ++i) {
      index_t run = 0, cur_s = -1, cur_seg = -1;
      for (index_t p = P.row_ptr[i]; p < P.row_ptr[i + 1]; ++p) {
        index_t k = P.col_ids[p], s = slice_of[static_cast<std::size_t>(k)], seg = k / A.segment;
        if (s != cur_s || seg != cur_seg) {
          add_group(cur_s, run);
          run = 0;
          cur_s = s;
          cur_seg = seg;
        }
        ++run;
      }
      add_group(cur_s, run);
    }
  }

  // Stationary side: elements loaded per (tile, slice).
  std::vector<double> load(static_cast<std::size_t>(r.col_tiles * slices), 0.0);
  for (index_t t = 0; t < r.col_tiles; ++t) {
    const index_t active = std::min(hw.n_pe, B.cols - t * hw.n_pe);
    for (index_t s = 0; s < slices; ++s) {
      const index_t width = bounds[s + 1] - bounds[s];
      if (b_dense) {
        load[static_cast<std::size_t>(t * slices + s)] = static_cast<double>(width * active);
        r.buffer_data_elems = std::max(r.buffer_data_elems, static_cast<double>(width));
      }
      r.stream_cycles += static_cast<index_t>(cycles[s]);
      r.streamed_elems += slots[s];
      r.flushes += flush[s] * static_cast<double>(active);
    }
  }
  if (!b_dense) {
    const MatrixProfile& Q = *B.pattern;
    std::vector<index_t> per_col_slice(static_cast<std::size_t>(Q.cols), 0);
    index_t cur = -1;
    std::vector<index_t> touched;
    auto close = [&]() {
      for (index_t j : touched) {
        double d = static_cast<double>(per_col_slice[static_cast<std::size_t>(j)]);
        r.buffer_data_elems = std::max(r.buffer_data_elems, d);
        r.buffer_metadata_elems = std::max(r.buffer_metadata_elems, d * ratio);
        per_col_slice[static_cast<std::size_t>(j)] = 0;
      }
      touched.clear();
    };
    for (index_t k = 0; k < Q.rows; ++k) {
      index_t s = slice_of[static_cast<std::size_t>(k)];
      if (s != cur) {
        close();
        cur = s;
      }
      for (index_t q = Q.row_ptr[k]; q < Q.row_ptr[k + 1]; ++q) {
        index_t j = Q.col_ids[q];
        load[static_cast<std::size_t>((j / hw.n_pe) * slices + s)] += 1.0 + ratio;
        if (per_col_slice[static_cast<std::size_t>(j)]++ == 0) touched.push_back(j);
      }
    }
    close();
  }
  for (double e : load) {
    r.load_cycles += static_cast<index_t>(std::ceil(e / static_cast<double>(hw.bus_elems_per_cycle) - 1e-9));
    r.loaded_elems += e;
  }
  r.total_cycles = r.load_cycles + r.stream_cycles;

  // MAC accounting per contraction index.
  std::vector<index_t> a_col(static_cast<std::size_t>(P.cols), 0);
  for (index_t k : P.col_ids) ++a_col[static_cast<std::size_t>(k)];
  for (index_t k = 0; k < B.rows; ++k) {
    const double b_row = B.pattern ? static_cast<double>(B.pattern->row_nnz(k)) : static_cast<double>(B.cols);
    const double a_n = static_cast<double>(a_col[static_cast<std::size_t>(k)]);
    r.useful_macs += a_n * b_row;
    r.executed_macs += (A.desc.includes_zeros ? static_cast<double>(P.rows) : a_n) *
                       (b_dense ? static_cast<double>(B.cols) : b_row);
  }
  r.pe_utilization = r.total_cycles == 0 ? 0.0
                                         : r.useful_macs / (static_cast<double>(hw.n_pe) *
                                                            static_cast<double>(hw.vector_lanes) *
                                                            static_cast<double>(r.total_cycles));
  r.write_back_cycles = P.rows * B.cols;
  r.energy = r.useful_macs * hw.e_mac + (r.streamed_elems + r.loaded_elems) * hw.e_stream_elem +
             (r.executed_macs + r.flushes) * hw.e_buf_access;
  return r;
}

/// Matrix product A (M x K, streamed) times B (K x N, stationary).
inline PerfReport simulate_ws(const MatrixProfile& A, const MatrixProfile& B, FormatId acf_a, FormatId acf_b,
                              const HardwareConfig& hw) {
  if (A.cols != B.rows) throw Error("dimension mismatch: A.cols != B.rows");
  StreamedView sa{&A, stream_descriptor(acf_a), std::max<index_t>(A.cols, 1)};
  StationaryView sb{B.rows, B.cols, acf_b, &B};
  require_stationary(acf_b);
  return simulate_ws(sa, sb, hw);
}

inline PerfReport simulate_ws(const FormattedMatrix& A, const FormattedMatrix& B, FormatId acf_a, FormatId acf_b,
                              const HardwareConfig& hw) {
  auto pa = MatrixProfile::from_coo(to_coo(A), {}, false);
  auto pb = MatrixProfile::from_coo(to_coo(B), {}, false);
  return simulate_ws(pa, pb, acf_a, acf_b, hw);
}

/// Cycles to stream all of A once (a single slice spanning the full contraction).
inline index_t pack_stream(const MatrixProfile& A, FormatId acf, const HardwareConfig& hw) {
  const StreamDescriptor d = stream_descriptor(acf);
  const index_t n = elements_per_cycle(d, hw);
  if (d.includes_zeros) return A.rows * ceil_div(A.cols, n);
  if (d.singleton_groups) return A.nnz();
  index_t c = 0;
  for (index_t i = 0; i < A.rows; ++i) c += ceil_div(A.row_nnz(i), n);
  return c;
}

inline index_t pack_stream(const FormattedMatrix& A, FormatId acf, const HardwareConfig& hw) {
  return pack_stream(MatrixProfile::from_coo(to_coo(A), {}, false), acf, hw);
}

struct Footprint {
  std::vector<double> occupancy;  // buffer slots per column of B
  index_t k_tiles = 0;
  index_t col_tiles = 0;
};

/// Buffer demand if each column of B were held whole: Dense keeps K slots
/// (zeros included), CSC and COO keep a value and a row index per nonzero.
inline Footprint stationary_footprint(const MatrixProfile& B, FormatId acf, const HardwareConfig& hw) {
  require_stationary(acf);
  Footprint f;
  f.occupancy.resize(static_cast<std::size_t>(B.cols));
  for (index_t j = 0; j < B.cols; ++j) {
    double occ = acf == FormatId::Dense ? static_cast<double>(B.rows)
                                        : static_cast<double>(B.col_nnz[static_cast<std::size_t>(j)]) *
                                              (1.0 + hw.metadata_ratio());
    f.occupancy[static_cast<std::size_t>(j)] = occ;
    f.k_tiles = std::max<index_t>(
        f.k_tiles, static_cast<index_t>(std::ceil(occ / static_cast<double>(hw.pe_buffer_elems) - 1e-9)));
  }
  f.col_tiles = ceil_div(B.cols, hw.n_pe);
  return f;
}

inline Footprint stationary_footprint(const FormattedMatrix& B, FormatId acf, const HardwareConfig& hw) {
  return stationary_footprint(MatrixProfile::from_coo(to_coo(B), {}, false), acf, hw);
}

// ---------------------------------------------------------------------------
// Tensor kernels lowered to streamed-matrix form against dense factors
// ---------------------------------------------------------------------------

/// SpTTM: fibers (i, j) stream along k against a dense D2 x F factor.
inline PerfReport simulate_spttm(const TensorProfile& A, FormatId acf, index_t F, const HardwareConfig& hw) {
  const Dims3& d = A.dims;
  CooMatrix m{d[0] * d[1], d[2], std::vector<index_t>(static_cast<std::size_t>(A.nnz())), A.coords[2],
              std::vector<double>(static_cast<std::size_t>(A.nnz()), 1.0)};
  for (index_t e = 0; e < A.nnz(); ++e) m.row_ids[e] = A.coords[0][e] * d[1] + A.coords[1][e];
  MatrixProfile P = MatrixProfile::from_coo(m, {}, false);
  StreamedView sa{&P, stream_descriptor(acf, 3), std::max<index_t>(d[2], 1)};
  return simulate_ws(sa, StationaryView{d[2], F, FormatId::Dense, nullptr}, hw);
}

/// MTTKRP: slices i stream along (j, k) against the stationary Khatri-Rao
/// product of the factors (held dense); groups break at every new fiber j.
inline PerfReport simulate_mttkrp(const TensorProfile& A, FormatId acf, index_t F, const HardwareConfig& hw) {
  const Dims3& d = A.dims;
  CooMatrix m{d[0], d[1] * d[2], A.coords[0], std::vector<index_t>(static_cast<std::size_t>(A.nnz())),
              std::vector<double>(static_cast<std::size_t>(A.nnz()), 1.0)};
  for (index_t e = 0; e < A.nnz(); ++e) m.col_ids[e] = A.coords[1][e] * d[2] + A.coords[2][e];
  MatrixProfile P = MatrixProfile::from_coo(m, {}, false);
  StreamedView sa{&P, stream_descriptor(acf, 3), std::max<index_t>(d[2], 1)};
  return simulate_ws(sa, StationaryView{d[1] * d[2], F, FormatId::Dense, nullptr}, hw);
}

}  // namespace sparseflex
