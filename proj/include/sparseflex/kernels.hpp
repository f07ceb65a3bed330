#pragma once

#include <algorithm>
#include <bit>
#include <vector>

#include "sparseflex/formats.hpp"
#include "sparseflex/profile.hpp"

namespace sparseflex {

namespace detail {

inline void require_inner(index_t a, index_t b, const char* what) {
  if (a != b) throw Error(std::string("dimension mismatch: ") + what);
}

inline void require_acf(FormatId f) {
  if (f != FormatId::Dense && f != FormatId::COO && f != FormatId::CSR && f != FormatId::CSC)
    throw Error("format " + std::string(to_string(f)) + " is not a supported compute format");
}

/// Row k of a row-accessible operand (Dense, CSR, or row-sorted COO).
template <class F>
void for_row(const FormattedMatrix& m, index_t k, F&& f) {
  if (const auto* d = std::get_if<DenseMatrix>(&m)) {
    for (index_t j = 0; j < d->cols; ++j)
      if (double v = d->at(k, j); v != 0.0) f(j, v);
  } else if (const auto* r = std::get_if<CsrMatrix>(&m)) {
    for (index_t p = r->row_ptr[k]; p < r->row_ptr[k + 1]; ++p) f(r->col_ids[p], r->values[p]);
  } else if (const auto* c = std::get_if<CooMatrix>(&m)) {
    auto lo = std::lower_bound(c->row_ids.begin(), c->row_ids.end(), k) - c->row_ids.begin();
    for (auto p = lo; p < c->nnz() && c->row_ids[p] == k; ++p) f(c->col_ids[p], c->values[p]);
  }
}

/// Every stored entry of a Dense/COO/CSR/CSC operand in its native order.
template <class F>
void for_entries(const FormattedMatrix& m, F&& f) {
  if (const auto* d = std::get_if<DenseMatrix>(&m)) {
    for (index_t i = 0; i < d->rows; ++i)
      for (index_t k = 0; k < d->cols; ++k)
        if (double v = d->at(i, k); v != 0.0) f(i, k, v);
  } else if (const auto* c = std::get_if<CooMatrix>(&m)) {
    for (index_t p = 0; p < c->nnz(); ++p) f(c->row_ids[p], c->col_ids[p], c->values[p]);
  } else if (const auto* r = std::get_if<CsrMatrix>(&m)) {
    for (index_t i = 0; i < r->rows; ++i)
      for (index_t p = r->row_ptr[i]; p < r->row_ptr[i + 1]; ++p) f(i, r->col_ids[p], r->values[p]);
  } else if (const auto* s = std::get_if<CscMatrix>(&m)) {
    for (index_t k = 0; k < s->cols; ++k)
      for (index_t p = s->col_ptr[k]; p < s->col_ptr[k + 1]; ++p) f(s->row_ids[p], k, s->values[p]);
  }
}

template <class F>
void for_entries(const FormattedTensor3& t, F&& f) {
  if (const auto* d = std::get_if<DenseTensor3>(&t)) {
    for (index_t i = 0; i < d->dims[0]; ++i)
      for (index_t j = 0; j < d->dims[1]; ++j)
        for (index_t k = 0; k < d->dims[2]; ++k)
          if (double v = d->at(i, j, k); v != 0.0) f(i, j, k, v);
  } else if (const auto* c = std::get_if<CooTensor3>(&t)) {
    for (index_t p = 0; p < c->nnz(); ++p) f(c->coords[0][p], c->coords[1][p], c->coords[2][p], c->values[p]);
  } else if (const auto* s = std::get_if<CsfTensor3>(&t)) {
    for (std::size_t n0 = 0; n0 < s->idx0.size(); ++n0)
      for (index_t n1 = s->ptr0[n0]; n1 < s->ptr0[n0 + 1]; ++n1)
        for (index_t n2 = s->ptr1[n1]; n2 < s->ptr1[n1 + 1]; ++n2) {
          std::array<index_t, 3> c{};
          c[s->mode_order[0]] = s->idx0[n0];
          c[s->mode_order[1]] = s->idx1[n1];
          c[s->mode_order[2]] = s->idx2[n2];
          f(c[0], c[1], c[2], s->values[n2]);
        }
  }
}

}  // namespace detail

inline DenseMatrix gemm_dense(const DenseMatrix& A, const DenseMatrix& B) {
  detail::require_inner(A.cols, B.rows, "A.cols != B.rows");
  DenseMatrix O(A.rows, B.cols);
  for (index_t i = 0; i < A.rows; ++i)
    for (index_t j = 0; j < B.cols; ++j) {
      double acc = 0.0;
      for (index_t k = 0; k < A.cols; ++k) acc += A.at(i, k) * B.at(k, j);
      O.at(i, j) = acc;
    }
  return O;
}

/// Outer loop over nonzeros, inner loop over the output columns.
inline DenseMatrix spmm_coo(const CooMatrix& A, const DenseMatrix& B) {
  detail::require_inner(A.cols, B.rows, "A.cols != B.rows");
  DenseMatrix O(A.rows, B.cols);
  for (index_t p = 0; p < A.nnz(); ++p) {
    const index_t rid = A.row_ids[p], cid = A.col_ids[p];
    const double val = A.values[p];
    for (index_t j = 0; j < B.cols; ++j) O.at(rid, j) += val * B.at(cid, j);
  }
  return O;
}

/// O = A * B with each operand walked in its own format.
inline DenseMatrix matmul_acf(const FormattedMatrix& A, const FormattedMatrix& B) {
  detail::require_acf(format_of(A));
  detail::require_acf(format_of(B));
  auto [M, K] = shape_of(A);
  auto [Kb, N] = shape_of(B);
  detail::require_inner(K, Kb, "A.cols != B.rows");
  DenseMatrix O(M, N);
  const auto* Bc = std::get_if<CscMatrix>(&B);
  if (!Bc) {
    // Row-accessible B: scale row k of B by every A entry in column k.
    detail::for_entries(A, [&](index_t i, index_t k, double a) {
      detail::for_row(B, k, [&](index_t j, double b) { O.at(i, j) += a * b; });
    });
    return O;
  }
  if (const auto* Ac = std::get_if<CscMatrix>(&A)) {
    // Column access on both sides: O[:, j] += A[:, k] * B[k, j].
    for (index_t j = 0; j < N; ++j)
      for (index_t q = Bc->col_ptr[j]; q < Bc->col_ptr[j + 1]; ++q) {
        const index_t k = Bc->row_ids[q];
        for (index_t p = Ac->col_ptr[k]; p < Ac->col_ptr[k + 1]; ++p)
          O.at(Ac->row_ids[p], j) += Ac->values[p] * Bc->values[q];
      }
    return O;
  }
  if (const auto* Ad = std::get_if<DenseMatrix>(&A)) {
    for (index_t j = 0; j < N; ++j)
      for (index_t q = Bc->col_ptr[j]; q < Bc->col_ptr[j + 1]; ++q) {
        const index_t k = Bc->row_ids[q];
        for (index_t i = 0; i < M; ++i)
          if (double a = Ad->at(i, k); a != 0.0) O.at(i, j) += a * Bc->values[q];
      }
    return O;
  }
  // Row-major sparse A against CSC B: inner products of sorted index lists.
  std::vector<index_t> ks;
  std::vector<double> vs;
  for (index_t i = 0; i < M; ++i) {
    ks.clear();
    vs.clear();
    detail::for_row(A, i, [&](index_t k, double v) {
      ks.push_back(k);
      vs.push_back(v);
    });
    if (ks.empty()) continue;
    for (index_t j = 0; j < N; ++j) {
      std::size_t a = 0;
      index_t b = Bc->col_ptr[j];
      double acc = 0.0;
      while (a < ks.size() && b < Bc->col_ptr[j + 1]) {
        if (ks[a] < Bc->row_ids[b]) ++a;
        else if (ks[a] > Bc->row_ids[b]) ++b;
        else acc += vs[a++] * Bc->values[b++];
      }
      O.at(i, j) = acc;
    }
  }
  return O;
}

/// O[i][j][f] = sum_k A[i][j][k] * B[k][f].
inline DenseTensor3 spttm(const FormattedTensor3& A, const DenseMatrix& B) {
  Dims3 d = shape_of(A);
  detail::require_inner(d[2], B.rows, "tensor dim 2 != B.rows");
  DenseTensor3 O({d[0], d[1], B.cols});
  detail::for_entries(A, [&](index_t i, index_t j, index_t k, double a) {
    for (index_t f = 0; f < B.cols; ++f) O.at(i, j, f) += a * B.at(k, f);
  });
  return O;
}

/// O[i][f] = sum_{j,k} A[i][j][k] * B[j][f] * C[k][f].
inline DenseMatrix mttkrp(const FormattedTensor3& A, const DenseMatrix& B, const DenseMatrix& C) {
  Dims3 d = shape_of(A);
  detail::require_inner(d[1], B.rows, "tensor dim 1 != B.rows");
  detail::require_inner(d[2], C.rows, "tensor dim 2 != C.rows");
  detail::require_inner(B.cols, C.cols, "B.cols != C.cols");
  DenseMatrix O(d[0], B.cols);
  detail::for_entries(A, [&](index_t i, index_t j, index_t k, double a) {
    for (index_t f = 0; f < B.cols; ++f) O.at(i, f) += a * B.at(j, f) * C.at(k, f);
  });
  return O;
}

// ---------------------------------------------------------------------------
// Symbolic output structure (positions only, values assumed not to cancel)
// ---------------------------------------------------------------------------

/// Output counts needed to size and convert a kernel result.
struct OutputStats {
  int rank = 2;
  Dims3 dims{0, 0, 1};
  index_t nnz = 0;
  index_t rlc_pairs = 0;
  index_t max_row_nnz = 0;
  index_t max_col_nnz = 0;
  index_t fibers0 = 0;
  index_t fibers1 = 0;
};

namespace detail {

/// Accumulates RLC pair counts and line maxima over row-major positions.
struct PatternCounter {
  index_t cols;
  index_t span;
  index_t next = 0;
  OutputStats* out;
  std::vector<index_t> col_counts;

  PatternCounter(index_t c, int run_bits, OutputStats* o)
      : cols(c), span(index_t{1} << run_bits), out(o), col_counts(static_cast<std::size_t>(c), 0) {}

  void add(index_t row, index_t col) {
    index_t pos = row * cols + col;
    out->rlc_pairs += 1 + (pos - next) / span;
    next = pos + 1;
    ++out->nnz;
    out->max_col_nnz = std::max(out->max_col_nnz, ++col_counts[static_cast<std::size_t>(col)]);
  }
};

}  // namespace detail

/// Structure of A * B from the operand patterns via row-wise bitset unions.
inline OutputStats matmul_output_stats(const MatrixProfile& A, const MatrixProfile& B, int run_bits) {
  detail::require_inner(A.cols, B.rows, "A.cols != B.rows");
  OutputStats s;
  s.dims = {A.rows, B.cols, 1};
  detail::PatternCounter pc(B.cols, run_bits, &s);
  const auto words = static_cast<std::size_t>(ceil_div(B.cols, 64));
  std::vector<std::uint64_t> row(words);
  for (index_t i = 0; i < A.rows; ++i) {
    std::fill(row.begin(), row.end(), 0);
    for (index_t p = A.row_ptr[i]; p < A.row_ptr[i + 1]; ++p) {
      const index_t k = A.col_ids[p];
      for (index_t q = B.row_ptr[k]; q < B.row_ptr[k + 1]; ++q) {
        auto j = static_cast<std::uint64_t>(B.col_ids[q]);
        row[j >> 6] |= std::uint64_t{1} << (j & 63);
      }
    }
    index_t count = 0;
    for (std::size_t w = 0; w < words; ++w)
      for (std::uint64_t bits = row[w]; bits; bits &= bits - 1) {
        pc.add(i, static_cast<index_t>(w * 64) + std::countr_zero(bits));
        ++count;
      }
    s.max_row_nnz = std::max(s.max_row_nnz, count);
  }
  return s;
}

/// SpTTM output D0 x D1 x F against a dense factor with no zero columns.
inline OutputStats spttm_output_stats(const TensorProfile& A, index_t F) {
  OutputStats s;
  s.rank = 3;
  s.dims = {A.dims[0], A.dims[1], F};
  for (index_t e = 0; e < A.nnz(); ++e) {
    bool new0 = e == 0 || A.coords[0][e] != A.coords[0][e - 1];
    bool new1 = new0 || A.coords[1][e] != A.coords[1][e - 1];
    s.fibers0 += new0;
    s.fibers1 += new1;
  }
  s.nnz = s.fibers1 * F;
  s.rlc_pairs = s.nnz;
  return s;
}

/// MTTKRP output D0 x F: a row is nonzero iff its tensor slice is nonempty.
inline OutputStats mttkrp_output_stats(const TensorProfile& A, index_t F, int run_bits) {
  OutputStats s;
  s.dims = {A.dims[0], F, 1};
  detail::PatternCounter pc(F, run_bits, &s);
  for (index_t e = 0; e < A.nnz(); ++e)
    if (e == 0 || A.coords[0][e] != A.coords[0][e - 1]) {
      for (index_t f = 0; f < F; ++f) pc.add(A.coords[0][e], f);
      s.max_row_nnz = F;
    }
  return s;
}

}  // namespace sparseflex
