#pragma once

#include <vector>

#include "sparseflex/formats.hpp"
#include "sparseflex/mcf_cost.hpp"

namespace sparseflex {

/// Sparsity pattern of a matrix, kept as a CSR skeleton without values.
/// Everything the cost and performance models need is derived from it, so
/// large operands never have to be densified.
struct MatrixProfile {
  index_t rows = 0;
  index_t cols = 0;
  std::vector<index_t> row_ptr{0};
  std::vector<index_t> col_ids;
  std::vector<index_t> col_nnz;
  index_t max_row_nnz = 0;
  index_t max_col_nnz = 0;
  FormatParams params;
  StructureCounts counts;

  index_t nnz() const { return static_cast<index_t>(col_ids.size()); }
  index_t row_nnz(index_t i) const { return row_ptr[i + 1] - row_ptr[i]; }
  double size() const { return static_cast<double>(rows) * static_cast<double>(cols); }

  static MatrixProfile from_coo(const CooMatrix& c, const FormatParams& p = {}, bool with_counts = true) {
    MatrixProfile m;
    m.rows = c.rows;
    m.cols = c.cols;
    m.params = p;
    CsrMatrix csr = csr_from_coo(c);
    m.row_ptr = std::move(csr.row_ptr);
    m.col_ids = std::move(csr.col_ids);
    m.col_nnz.assign(static_cast<std::size_t>(c.cols), 0);
    for (index_t j : m.col_ids) ++m.col_nnz[static_cast<std::size_t>(j)];
    for (index_t i = 0; i < m.rows; ++i) m.max_row_nnz = std::max(m.max_row_nnz, m.row_nnz(i));
    for (index_t n : m.col_nnz) m.max_col_nnz = std::max(m.max_col_nnz, n);
    if (with_counts) m.counts = structure_counts(c, p);
    return m;
  }

  StorageBreakdown storage(FormatId f, int dtype_bits) const {
    return matrix_storage_bits(f, rows, cols, nnz(), dtype_bits, params, counts);
  }
};

/// Sparsity pattern of a 3-D tensor: canonical coordinates plus CSF fiber counts.
struct TensorProfile {
  Dims3 dims{0, 0, 0};
  std::array<std::vector<index_t>, 3> coords;  // sorted lexicographically
  FormatParams params;
  StructureCounts counts;

  index_t nnz() const { return static_cast<index_t>(coords[0].size()); }
  double size() const {
    return static_cast<double>(dims[0]) * static_cast<double>(dims[1]) * static_cast<double>(dims[2]);
  }

  static TensorProfile from_coo(const CooTensor3& c, const FormatParams& p = {}) {
    TensorProfile t;
    CooTensor3 s = canonicalize(c);
    t.dims = s.dims;
    t.coords = std::move(s.coords);
    t.params = p;
    CooTensor3 view{t.dims, t.coords, std::vector<double>(t.coords[0].size(), 1.0)};
    t.counts = structure_counts(view, p.mode_order);
    return t;
  }

  StorageBreakdown storage(FormatId f, int dtype_bits) const {
    return tensor_storage_bits(f, dims, nnz(), dtype_bits, params, counts);
  }
};

}  // namespace sparseflex
