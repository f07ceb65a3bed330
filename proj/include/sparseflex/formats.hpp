#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "sparseflex/common.hpp"

namespace sparseflex {

// ---------------------------------------------------------------------------
// Matrix types
// ---------------------------------------------------------------------------

struct DenseMatrix {
  index_t rows = 0;
  index_t cols = 0;
  std::vector<double> values;  // row-major, rows * cols

  DenseMatrix() = default;
  DenseMatrix(index_t m, index_t k) : rows(m), cols(k), values(static_cast<std::size_t>(m * k), 0.0) {}

  double& at(index_t i, index_t j) { return values[static_cast<std::size_t>(i * cols + j)]; }
  double at(index_t i, index_t j) const { return values[static_cast<std::size_t>(i * cols + j)]; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;
};

struct CooMatrix {
  index_t rows = 0;
  index_t cols = 0;
  std::vector<index_t> row_ids;
  std::vector<index_t> col_ids;
  std::vector<double> values;

  index_t nnz() const { return static_cast<index_t>(values.size()); }
  friend bool operator==(const CooMatrix&, const CooMatrix&) = default;
};

struct CsrMatrix {
  index_t rows = 0;
  index_t cols = 0;
  std::vector<index_t> row_ptr;  // rows + 1
  std::vector<index_t> col_ids;
  std::vector<double> values;

  index_t nnz() const { return static_cast<index_t>(values.size()); }
  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;
};

struct CscMatrix {
  index_t rows = 0;
  index_t cols = 0;
  std::vector<index_t> col_ptr;  // cols + 1
  std::vector<index_t> row_ids;
  std::vector<double> values;

  index_t nnz() const { return static_cast<index_t>(values.size()); }
  friend bool operator==(const CscMatrix&, const CscMatrix&) = default;
};

/// Blocked CSR. Each stored block holds block_rows * block_cols values in
/// row-major order; positions past the logical matrix edge are zero padding.
struct BsrMatrix {
  index_t rows = 0;
  index_t cols = 0;
  index_t block_rows = 1;
  index_t block_cols = 1;
  std::vector<index_t> block_row_ptr;  // ceil(rows / block_rows) + 1
  std::vector<index_t> block_col_ids;
  std::vector<double> block_values;  // nblocks * block_rows * block_cols

  index_t num_blocks() const { return static_cast<index_t>(block_col_ids.size()); }
  index_t block_row_count() const { return ceil_div(rows, block_rows); }
  index_t block_col_count() const { return ceil_div(cols, block_cols); }
  friend bool operator==(const BsrMatrix&, const BsrMatrix&) = default;
};

struct RlcPair {
  index_t run = 0;  // zeros preceding the value in the row-major stream
  double value = 0.0;
  friend bool operator==(const RlcPair&, const RlcPair&) = default;
};

/// Run-length coding over the full row-major linearization. A run that does
/// not fit in run_bits is split by (2^r - 1, 0.0) filler pairs; each filler
/// covers 2^r positions (its zeros plus its own zero level).
struct RlcMatrix {
  index_t rows = 0;
  index_t cols = 0;
  int run_bits = 4;
  std::vector<RlcPair> pairs;

  index_t max_run() const { return (index_t{1} << run_bits) - 1; }
  friend bool operator==(const RlcMatrix&, const RlcMatrix&) = default;
};

struct ZvcMatrix {
  index_t rows = 0;
  index_t cols = 0;
  std::vector<bool> mask;  // rows * cols, row-major
  std::vector<double> values;

  friend bool operator==(const ZvcMatrix&, const ZvcMatrix&) = default;
};

using FormattedMatrix =
    std::variant<DenseMatrix, CooMatrix, CsrMatrix, CscMatrix, BsrMatrix, RlcMatrix, ZvcMatrix>;

// ---------------------------------------------------------------------------
// 3-D tensor types
// ---------------------------------------------------------------------------

using Dims3 = std::array<index_t, 3>;
using ModeOrder = std::array<int, 3>;

struct DenseTensor3 {
  Dims3 dims{0, 0, 0};
  std::vector<double> values;  // dim0-major, dim2-minor

  DenseTensor3() = default;
  explicit DenseTensor3(Dims3 d)
      : dims(d), values(static_cast<std::size_t>(d[0] * d[1] * d[2]), 0.0) {}

  double& at(index_t i, index_t j, index_t k) {
    return values[static_cast<std::size_t>((i * dims[1] + j) * dims[2] + k)];
  }
  double at(index_t i, index_t j, index_t k) const {
    return values[static_cast<std::size_t>((i * dims[1] + j) * dims[2] + k)];
  }
  friend bool operator==(const DenseTensor3&, const DenseTensor3&) = default;
};

struct CooTensor3 {
  Dims3 dims{0, 0, 0};
  std::array<std::vector<index_t>, 3> coords;
  std::vector<double> values;

  index_t nnz() const { return static_cast<index_t>(values.size()); }
  friend bool operator==(const CooTensor3&, const CooTensor3&) = default;
};

/// Compressed sparse fiber tree. Level l indexes mode mode_order[l].
struct CsfTensor3 {
  Dims3 dims{0, 0, 0};
  ModeOrder mode_order{0, 1, 2};
  std::vector<index_t> idx0, idx1, idx2;
  std::vector<index_t> ptr0;  // |idx0| + 1, children in idx1
  std::vector<index_t> ptr1;  // |idx1| + 1, children in idx2
  std::vector<double> values;  // aligned with idx2

  index_t nnz() const { return static_cast<index_t>(values.size()); }
  friend bool operator==(const CsfTensor3&, const CsfTensor3&) = default;
};

using FormattedTensor3 = std::variant<DenseTensor3, CooTensor3, CsfTensor3>;

/// Encoder parameters; each format reads only the fields it needs.
struct FormatParams {
  index_t block_rows = 2;
  index_t block_cols = 2;
  int run_bits = 4;
  ModeOrder mode_order{0, 1, 2};
};

struct Violation {
  std::string invariant;
  index_t index = -1;
};

// ---------------------------------------------------------------------------
// Introspection
// ---------------------------------------------------------------------------

inline FormatId format_of(const FormattedMatrix& m) {
  static constexpr std::array<FormatId, 7> ids = {FormatId::Dense, FormatId::COO, FormatId::CSR,
                                                  FormatId::CSC,   FormatId::BSR, FormatId::RLC,
                                                  FormatId::ZVC};
  return ids[m.index()];
}

inline FormatId format_of(const FormattedTensor3& t) {
  static constexpr std::array<FormatId, 3> ids = {FormatId::Dense, FormatId::COO, FormatId::CSF};
  return ids[t.index()];
}

inline std::pair<index_t, index_t> shape_of(const FormattedMatrix& m) {
  return std::visit([](const auto& x) { return std::pair<index_t, index_t>{x.rows, x.cols}; }, m);
}

inline Dims3 shape_of(const FormattedTensor3& t) {
  return std::visit([](const auto& x) { return x.dims; }, t);
}

inline bool is_matrix_format(FormatId f) { return f != FormatId::CSF; }
inline bool is_tensor_format(FormatId f) {
  return f == FormatId::Dense || f == FormatId::COO || f == FormatId::CSF;
}

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

inline void check_params(FormatId target, const FormatParams& p) {
  if (target == FormatId::BSR) require(p.block_rows >= 1 && p.block_cols >= 1, "BSR block dims must be >= 1");
  if (target == FormatId::RLC) require(p.run_bits >= 1 && p.run_bits <= 62, "RLC run_bits must be in [1, 62]");
  if (target == FormatId::CSF) {
    auto o = p.mode_order;
    std::sort(o.begin(), o.end());
    require(o == ModeOrder{0, 1, 2}, "CSF mode_order must be a permutation of (0,1,2)");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Structural codecs through COO (no densification)
// ---------------------------------------------------------------------------

inline CooMatrix coo_from_dense(const DenseMatrix& d) {
  detail::require(static_cast<index_t>(d.values.size()) == d.rows * d.cols,
                  "dense values length must equal rows * cols");
  CooMatrix c{d.rows, d.cols, {}, {}, {}};
  for (index_t i = 0; i < d.rows; ++i)
    for (index_t j = 0; j < d.cols; ++j)
      if (double v = d.at(i, j); v != 0.0) {
        c.row_ids.push_back(i);
        c.col_ids.push_back(j);
        c.values.push_back(v);
      }
  return c;
}

inline DenseMatrix dense_from_coo(const CooMatrix& c) {
  DenseMatrix d(c.rows, c.cols);
  for (std::size_t e = 0; e < c.values.size(); ++e) d.at(c.row_ids[e], c.col_ids[e]) = c.values[e];
  return d;
}

/// Sorts entries row-major, drops explicit zeros. Duplicates are an error.
inline CooMatrix canonicalize(CooMatrix c) {
  std::vector<std::size_t> perm(c.values.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(c.row_ids[a], c.col_ids[a]) < std::pair(c.row_ids[b], c.col_ids[b]);
  });
  CooMatrix out{c.rows, c.cols, {}, {}, {}};
  for (std::size_t p : perm) {
    if (c.values[p] == 0.0) continue;
    if (!out.values.empty() && out.row_ids.back() == c.row_ids[p] && out.col_ids.back() == c.col_ids[p])
      throw Error("duplicate coordinate (" + std::to_string(c.row_ids[p]) + ", " +
                  std::to_string(c.col_ids[p]) + ")");
    out.row_ids.push_back(c.row_ids[p]);
    out.col_ids.push_back(c.col_ids[p]);
    out.values.push_back(c.values[p]);
  }
  return out;
}

inline CsrMatrix csr_from_coo(const CooMatrix& c) {
  CsrMatrix r{c.rows, c.cols, std::vector<index_t>(static_cast<std::size_t>(c.rows + 1), 0), c.col_ids,
              c.values};
  for (index_t row : c.row_ids) ++r.row_ptr[static_cast<std::size_t>(row + 1)];
  std::partial_sum(r.row_ptr.begin(), r.row_ptr.end(), r.row_ptr.begin());
  return r;
}

inline CooMatrix coo_from_csr(const CsrMatrix& r) {
  CooMatrix c{r.rows, r.cols, {}, r.col_ids, r.values};
  c.row_ids.reserve(r.col_ids.size());
  for (index_t i = 0; i < r.rows; ++i)
    for (index_t p = r.row_ptr[i]; p < r.row_ptr[i + 1]; ++p) c.row_ids.push_back(i);
  return c;
}

inline CscMatrix csc_from_coo(const CooMatrix& c) {
  CscMatrix s{c.rows, c.cols, std::vector<index_t>(static_cast<std::size_t>(c.cols + 1), 0), {}, {}};
  for (index_t col : c.col_ids) ++s.col_ptr[static_cast<std::size_t>(col + 1)];
  std::partial_sum(s.col_ptr.begin(), s.col_ptr.end(), s.col_ptr.begin());
  s.row_ids.resize(c.values.size());
  s.values.resize(c.values.size());
  std::vector<index_t> cursor(s.col_ptr.begin(), s.col_ptr.end() - 1);
  for (std::size_t e = 0; e < c.values.size(); ++e) {
    auto dst = static_cast<std::size_t>(cursor[static_cast<std::size_t>(c.col_ids[e])]++);
    s.row_ids[dst] = c.row_ids[e];
    s.values[dst] = c.values[e];
  }
  return s;
}

inline CooMatrix coo_from_csc(const CscMatrix& s) {
  CooMatrix c{s.rows, s.cols, {}, {}, {}};
  for (index_t j = 0; j < s.cols; ++j)
    for (index_t p = s.col_ptr[j]; p < s.col_ptr[j + 1]; ++p) {
      c.row_ids.push_back(s.row_ids[p]);
      c.col_ids.push_back(j);
      c.values.push_back(s.values[p]);
    }
  return canonicalize(std::move(c));
}

inline BsrMatrix bsr_from_coo(const CooMatrix& c, index_t R, index_t C) {
  detail::require(R >= 1 && C >= 1, "BSR block dims must be >= 1");
  BsrMatrix b{c.rows, c.cols, R, C, {0}, {}, {}};
  const index_t brows = ceil_div(c.rows, R);
  std::size_t e = 0;
  std::vector<index_t> slot(static_cast<std::size_t>(ceil_div(c.cols, C)), -1);
  std::vector<index_t> touched;
  for (index_t br = 0; br < brows; ++br) {
    const std::size_t begin = e;
    while (e < c.values.size() && c.row_ids[e] / R == br) {
      index_t bc = c.col_ids[e] / C;
      if (slot[static_cast<std::size_t>(bc)] < 0) {
        slot[static_cast<std::size_t>(bc)] = 0;
        touched.push_back(bc);
      }
      ++e;
    }
    std::sort(touched.begin(), touched.end());
    const index_t base = b.num_blocks();
    for (std::size_t t = 0; t < touched.size(); ++t) {
      slot[static_cast<std::size_t>(touched[t])] = base + static_cast<index_t>(t);
      b.block_col_ids.push_back(touched[t]);
    }
    b.block_values.resize(static_cast<std::size_t>(b.num_blocks() * R * C), 0.0);
    for (std::size_t q = begin; q < e; ++q) {
      index_t blk = slot[static_cast<std::size_t>(c.col_ids[q] / C)];
      b.block_values[static_cast<std::size_t>(blk * R * C + (c.row_ids[q] % R) * C + c.col_ids[q] % C)] =
          c.values[q];
    }
    for (index_t bc : touched) slot[static_cast<std::size_t>(bc)] = -1;
    touched.clear();
    b.block_row_ptr.push_back(b.num_blocks());
  }
  return b;
}

inline CooMatrix coo_from_bsr(const BsrMatrix& b) {
  CooMatrix c{b.rows, b.cols, {}, {}, {}};
  const index_t R = b.block_rows, C = b.block_cols;
  for (index_t br = 0; br + 1 < static_cast<index_t>(b.block_row_ptr.size()); ++br)
    for (index_t r = 0; r < R; ++r)
      for (index_t p = b.block_row_ptr[br]; p < b.block_row_ptr[br + 1]; ++p)
        for (index_t cc = 0; cc < C; ++cc) {
          double v = b.block_values[static_cast<std::size_t>(p * R * C + r * C + cc)];
          index_t i = br * R + r, j = b.block_col_ids[p] * C + cc;
          if (v != 0.0 && i < b.rows && j < b.cols) {
            c.row_ids.push_back(i);
            c.col_ids.push_back(j);
            c.values.push_back(v);
          }
        }
  return c;
}

inline RlcMatrix rlc_from_coo(const CooMatrix& c, int run_bits) {
  detail::require(run_bits >= 1 && run_bits <= 62, "RLC run_bits must be in [1, 62]");
  RlcMatrix r{c.rows, c.cols, run_bits, {}};
  const index_t span = index_t{1} << run_bits;
  index_t next = 0;  // first linear position not yet covered
  for (std::size_t e = 0; e < c.values.size(); ++e) {
    index_t pos = c.row_ids[e] * c.cols + c.col_ids[e];
    index_t gap = pos - next;
    while (gap >= span) {
      r.pairs.push_back({span - 1, 0.0});
      gap -= span;
    }
    r.pairs.push_back({gap, c.values[e]});
    next = pos + 1;
  }
  return r;
}

inline CooMatrix coo_from_rlc(const RlcMatrix& r) {
  CooMatrix c{r.rows, r.cols, {}, {}, {}};
  index_t pos = -1;
  for (const auto& p : r.pairs) {
    pos += p.run + 1;
    if (p.value == 0.0) continue;
    c.row_ids.push_back(pos / r.cols);
    c.col_ids.push_back(pos % r.cols);
    c.values.push_back(p.value);
  }
  return c;
}

/// Number of (run, value) pairs RLC emits for sorted linear positions, fillers included.
template <class PositionRange>
index_t rlc_pair_count(const PositionRange& positions, int run_bits) {
  const index_t span = index_t{1} << run_bits;
  index_t next = 0, pairs = 0;
  for (index_t pos : positions) {
    pairs += 1 + (pos - next) / span;
    next = pos + 1;
  }
  return pairs;
}

inline ZvcMatrix zvc_from_coo(const CooMatrix& c) {
  ZvcMatrix z{c.rows, c.cols, std::vector<bool>(static_cast<std::size_t>(c.rows * c.cols), false), c.values};
  for (std::size_t e = 0; e < c.values.size(); ++e)
    z.mask[static_cast<std::size_t>(c.row_ids[e] * c.cols + c.col_ids[e])] = true;
  return z;
}

inline CooMatrix coo_from_zvc(const ZvcMatrix& z) {
  CooMatrix c{z.rows, z.cols, {}, {}, {}};
  std::size_t v = 0;
  for (std::size_t p = 0; p < z.mask.size(); ++p)
    if (z.mask[p]) {
      c.row_ids.push_back(static_cast<index_t>(p) / z.cols);
      c.col_ids.push_back(static_cast<index_t>(p) % z.cols);
      c.values.push_back(z.values[v++]);
    }
  return c;
}

/// Sorted, zero-free COO view of any matrix format.
inline CooMatrix to_coo(const FormattedMatrix& m) {
  return std::visit(
      [](const auto& x) -> CooMatrix {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DenseMatrix>) return coo_from_dense(x);
        else if constexpr (std::is_same_v<T, CooMatrix>) return canonicalize(x);
        else if constexpr (std::is_same_v<T, CsrMatrix>) return coo_from_csr(x);
        else if constexpr (std::is_same_v<T, CscMatrix>) return coo_from_csc(x);
        else if constexpr (std::is_same_v<T, BsrMatrix>) return coo_from_bsr(x);
        else if constexpr (std::is_same_v<T, RlcMatrix>) return coo_from_rlc(x);
        else return coo_from_zvc(x);
      },
      m);
}

/// Encodes a canonical COO (sorted, zero-free) into the target format.
inline FormattedMatrix from_coo(const CooMatrix& c, FormatId target, const FormatParams& p = {}) {
  detail::check_params(target, p);
  switch (target) {
    case FormatId::Dense: return dense_from_coo(c);
    case FormatId::COO: return c;
    case FormatId::CSR: return csr_from_coo(c);
    case FormatId::CSC: return csc_from_coo(c);
    case FormatId::BSR: return bsr_from_coo(c, p.block_rows, p.block_cols);
    case FormatId::RLC: return rlc_from_coo(c, p.run_bits);
    case FormatId::ZVC: return zvc_from_coo(c);
    case FormatId::CSF: break;
  }
  throw Error("format " + std::string(to_string(target)) + " is not a matrix format");
}

/// Reference encoder. Explicit zeros in the input are dropped.
inline FormattedMatrix from_dense(const DenseMatrix& d, FormatId target, const FormatParams& p = {}) {
  detail::check_params(target, p);
  if (target == FormatId::Dense) {
    detail::require(static_cast<index_t>(d.values.size()) == d.rows * d.cols,
                    "dense values length must equal rows * cols");
    return d;
  }
  return from_coo(coo_from_dense(d), target, p);
}

inline DenseMatrix to_dense(const FormattedMatrix& m) {
  if (const auto* d = std::get_if<DenseMatrix>(&m)) return *d;
  return dense_from_coo(to_coo(m));
}

// ---------------------------------------------------------------------------
// Tensor codecs
// ---------------------------------------------------------------------------

inline CooTensor3 coo_from_dense(const DenseTensor3& d) {
  detail::require(static_cast<index_t>(d.values.size()) == d.dims[0] * d.dims[1] * d.dims[2],
                  "dense tensor values length must equal the dims product");
  CooTensor3 c{d.dims, {}, {}};
  for (index_t i = 0; i < d.dims[0]; ++i)
    for (index_t j = 0; j < d.dims[1]; ++j)
      for (index_t k = 0; k < d.dims[2]; ++k)
        if (double v = d.at(i, j, k); v != 0.0) {
          c.coords[0].push_back(i);
          c.coords[1].push_back(j);
          c.coords[2].push_back(k);
          c.values.push_back(v);
        }
  return c;
}

inline DenseTensor3 dense_from_coo(const CooTensor3& c) {
  DenseTensor3 d(c.dims);
  for (std::size_t e = 0; e < c.values.size(); ++e)
    d.at(c.coords[0][e], c.coords[1][e], c.coords[2][e]) = c.values[e];
  return d;
}

/// Sorts entries by the given mode order, drops zeros; duplicates are an error.
inline CooTensor3 canonicalize(CooTensor3 c, ModeOrder order = {0, 1, 2}) {
  std::vector<std::size_t> perm(c.values.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto key = [&](std::size_t e) {
    return std::array<index_t, 3>{c.coords[order[0]][e], c.coords[order[1]][e], c.coords[order[2]][e]};
  };
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  CooTensor3 out{c.dims, {}, {}};
  for (std::size_t p : perm) {
    if (c.values[p] == 0.0) continue;
    if (!out.values.empty() && out.coords[0].back() == c.coords[0][p] && out.coords[1].back() == c.coords[1][p] &&
        out.coords[2].back() == c.coords[2][p])
      throw Error("duplicate tensor coordinate");
    for (int m = 0; m < 3; ++m) out.coords[m].push_back(c.coords[m][p]);
    out.values.push_back(c.values[p]);
  }
  return out;
}

inline CsfTensor3 csf_from_coo(const CooTensor3& coo, ModeOrder order) {
  detail::check_params(FormatId::CSF, FormatParams{2, 2, 4, order});
  CooTensor3 c = canonicalize(coo, order);
  CsfTensor3 t{c.dims, order, {}, {}, {}, {0}, {0}, {}};
  const auto& a = c.coords[order[0]];
  const auto& b = c.coords[order[1]];
  const auto& z = c.coords[order[2]];
  for (std::size_t e = 0; e < c.values.size(); ++e) {
    bool new0 = e == 0 || a[e] != a[e - 1];
    bool new1 = new0 || b[e] != b[e - 1];
    if (new0) {
      if (e != 0) t.ptr0.push_back(static_cast<index_t>(t.idx1.size()));
      t.idx0.push_back(a[e]);
    }
    if (new1) {
      if (e != 0) t.ptr1.push_back(static_cast<index_t>(t.idx2.size()));
      t.idx1.push_back(b[e]);
    }
    t.idx2.push_back(z[e]);
    t.values.push_back(c.values[e]);
  }
  if (!c.values.empty()) {
    t.ptr0.push_back(static_cast<index_t>(t.idx1.size()));
    t.ptr1.push_back(static_cast<index_t>(t.idx2.size()));
  }
  return t;
}

inline CooTensor3 coo_from_csf(const CsfTensor3& t) {
  CooTensor3 c{t.dims, {}, {}};
  for (std::size_t n0 = 0; n0 < t.idx0.size(); ++n0)
    for (index_t n1 = t.ptr0[n0]; n1 < t.ptr0[n0 + 1]; ++n1)
      for (index_t n2 = t.ptr1[static_cast<std::size_t>(n1)]; n2 < t.ptr1[static_cast<std::size_t>(n1) + 1]; ++n2) {
        std::array<index_t, 3> coord{};
        coord[t.mode_order[0]] = t.idx0[n0];
        coord[t.mode_order[1]] = t.idx1[static_cast<std::size_t>(n1)];
        coord[t.mode_order[2]] = t.idx2[static_cast<std::size_t>(n2)];
        for (int m = 0; m < 3; ++m) c.coords[m].push_back(coord[m]);
        c.values.push_back(t.values[static_cast<std::size_t>(n2)]);
      }
  return canonicalize(std::move(c));
}

inline CooTensor3 to_coo(const FormattedTensor3& t) {
  return std::visit(
      [](const auto& x) -> CooTensor3 {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DenseTensor3>) return coo_from_dense(x);
        else if constexpr (std::is_same_v<T, CooTensor3>) return canonicalize(x);
        else return coo_from_csf(x);
      },
      t);
}

inline FormattedTensor3 from_coo(const CooTensor3& c, FormatId target, const FormatParams& p = {}) {
  detail::check_params(target, p);
  switch (target) {
    case FormatId::Dense: return dense_from_coo(c);
    case FormatId::COO: return canonicalize(c);
    case FormatId::CSF: return csf_from_coo(c, p.mode_order);
    default: break;
  }
  throw Error("format " + std::string(to_string(target)) + " is not supported for 3-D tensors");
}

inline FormattedTensor3 from_dense(const DenseTensor3& d, FormatId target, const FormatParams& p = {}) {
  detail::check_params(target, p);
  if (target == FormatId::Dense) {
    detail::require(static_cast<index_t>(d.values.size()) == d.dims[0] * d.dims[1] * d.dims[2],
                    "dense tensor values length must equal the dims product");
    return d;
  }
  return from_coo(coo_from_dense(d), target, p);
}

inline DenseTensor3 to_dense(const FormattedTensor3& t) {
  if (const auto* d = std::get_if<DenseTensor3>(&t)) return *d;
  return dense_from_coo(to_coo(t));
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

struct Checker {
  std::vector<Violation> out;
  void fail(std::string what, index_t at = -1) { out.push_back({std::move(what), at}); }
  void check(bool ok, const char* what, index_t at = -1) {
    if (!ok) fail(what, at);
  }
};

inline void check_no_zeros(Checker& ck, const std::vector<double>& values) {
  for (std::size_t e = 0; e < values.size(); ++e)
    if (values[e] == 0.0) {
      ck.fail("no stored zero values", static_cast<index_t>(e));
      return;
    }
}

inline void check_ptr(Checker& ck, const std::vector<index_t>& ptr, index_t expected_len, index_t end,
                      const std::string& name) {
  if (static_cast<index_t>(ptr.size()) != expected_len) {
    ck.fail(name + " length");
    return;
  }
  if (ptr.front() != 0) ck.fail(name + "[0] = 0", 0);
  for (std::size_t i = 1; i < ptr.size(); ++i)
    if (ptr[i] < ptr[i - 1]) {
      ck.fail(name + " nondecreasing", static_cast<index_t>(i));
      return;
    }
  if (ptr.back() != end) ck.fail(name + " ends at nnz", static_cast<index_t>(ptr.size() - 1));
}

// Compressed-line check shared by CSR (lines = rows) and CSC (lines = cols).
inline void check_compressed(Checker& ck, index_t lines, index_t extent, const std::vector<index_t>& ptr,
                             const std::vector<index_t>& idx, const std::vector<double>& values,
                             const std::string& ptr_name, const std::string& idx_name) {
  ck.check(idx.size() == values.size(), "index and value arrays have equal length");
  const std::size_t before = ck.out.size();
  check_ptr(ck, ptr, lines + 1, static_cast<index_t>(values.size()), ptr_name);
  if (ck.out.size() != before || idx.size() != values.size()) return;
  for (index_t l = 0; l < lines; ++l)
    for (index_t p = ptr[l]; p < ptr[l + 1]; ++p) {
      if (idx[p] < 0 || idx[p] >= extent) {
        ck.fail(idx_name + " in range", p);
        return;
      }
      if (p > ptr[l] && idx[p] <= idx[p - 1]) {
        ck.fail(idx_name + " strictly increasing within a line", p);
        return;
      }
    }
  check_no_zeros(ck, values);
}

}  // namespace detail

inline std::vector<Violation> validate(const DenseMatrix& d) {
  detail::Checker ck;
  ck.check(d.rows >= 0 && d.cols >= 0, "dims nonnegative");
  ck.check(static_cast<index_t>(d.values.size()) == d.rows * d.cols, "values length = rows * cols");
  return ck.out;
}

inline std::vector<Violation> validate(const CooMatrix& c) {
  detail::Checker ck;
  if (c.row_ids.size() != c.values.size() || c.col_ids.size() != c.values.size()) {
    ck.fail("row_ids, col_ids, values have equal length");
    return ck.out;
  }
  for (std::size_t e = 0; e < c.values.size(); ++e) {
    auto at = static_cast<index_t>(e);
    if (c.row_ids[e] < 0 || c.row_ids[e] >= c.rows || c.col_ids[e] < 0 || c.col_ids[e] >= c.cols) {
      ck.fail("indices in range", at);
      break;
    }
    if (e > 0 && std::pair(c.row_ids[e], c.col_ids[e]) <= std::pair(c.row_ids[e - 1], c.col_ids[e - 1])) {
      ck.fail("entries sorted by (row, col) without duplicates", at);
      break;
    }
  }
  detail::check_no_zeros(ck, c.values);
  return ck.out;
}

inline std::vector<Violation> validate(const CsrMatrix& r) {
  detail::Checker ck;
  detail::check_compressed(ck, r.rows, r.cols, r.row_ptr, r.col_ids, r.values, "row_ptr", "col_ids");
  return ck.out;
}

inline std::vector<Violation> validate(const CscMatrix& s) {
  detail::Checker ck;
  detail::check_compressed(ck, s.cols, s.rows, s.col_ptr, s.row_ids, s.values, "col_ptr", "row_ids");
  return ck.out;
}

inline std::vector<Violation> validate(const BsrMatrix& b) {
  detail::Checker ck;
  if (b.block_rows < 1 || b.block_cols < 1) {
    ck.fail("block dims >= 1");
    return ck.out;
  }
  const index_t nblk = b.num_blocks();
  detail::check_ptr(ck, b.block_row_ptr, b.block_row_count() + 1, nblk, "block_row_ptr");
  if (!ck.out.empty()) return ck.out;
  const index_t bs = b.block_rows * b.block_cols;
  if (static_cast<index_t>(b.block_values.size()) != nblk * bs) {
    ck.fail("block_values length = nblocks * R * C");
    return ck.out;
  }
  for (index_t br = 0; br < b.block_row_count(); ++br)
    for (index_t p = b.block_row_ptr[br]; p < b.block_row_ptr[br + 1]; ++p) {
      index_t bc = b.block_col_ids[p];
      if (bc < 0 || bc >= b.block_col_count()) {
        ck.fail("block_col_ids in range", p);
        return ck.out;
      }
      if (p > b.block_row_ptr[br] && bc <= b.block_col_ids[p - 1]) {
        ck.fail("block_col_ids strictly increasing within a block row", p);
        return ck.out;
      }
      bool any = false;
      for (index_t q = 0; q < bs; ++q) {
        double v = b.block_values[static_cast<std::size_t>(p * bs + q)];
        index_t i = br * b.block_rows + q / b.block_cols, j = bc * b.block_cols + q % b.block_cols;
        if (v != 0.0) {
          any = true;
          if (i >= b.rows || j >= b.cols) ck.fail("padding positions hold zero", p);
        }
      }
      if (!any) ck.fail("stored block contains a nonzero", p);
    }
  return ck.out;
}

inline std::vector<Violation> validate(const RlcMatrix& r) {
  detail::Checker ck;
  if (r.run_bits < 1 || r.run_bits > 62) {
    ck.fail("run_bits in [1, 62]");
    return ck.out;
  }
  index_t pos = -1;
  for (std::size_t e = 0; e < r.pairs.size(); ++e) {
    const auto& p = r.pairs[e];
    auto at = static_cast<index_t>(e);
    if (p.run < 0 || p.run > r.max_run()) ck.fail("run fits in run_bits", at);
    if (p.value == 0.0 && p.run != r.max_run()) ck.fail("zero value only in escape fillers", at);
    pos += p.run + 1;
  }
  if (!r.pairs.empty() && r.pairs.back().value == 0.0)
    ck.fail("no trailing escape filler", static_cast<index_t>(r.pairs.size() - 1));
  if (pos >= r.rows * r.cols) ck.fail("runs stay within rows * cols positions");
  return ck.out;
}

inline std::vector<Violation> validate(const ZvcMatrix& z) {
  detail::Checker ck;
  ck.check(static_cast<index_t>(z.mask.size()) == z.rows * z.cols, "mask length = rows * cols");
  auto pop = std::count(z.mask.begin(), z.mask.end(), true);
  ck.check(static_cast<std::size_t>(pop) == z.values.size(), "popcount(mask) = values length");
  detail::check_no_zeros(ck, z.values);
  return ck.out;
}

inline std::vector<Violation> validate(const FormattedMatrix& m) {
  return std::visit([](const auto& x) { return validate(x); }, m);
}

inline std::vector<Violation> validate(const DenseTensor3& d) {
  detail::Checker ck;
  ck.check(static_cast<index_t>(d.values.size()) == d.dims[0] * d.dims[1] * d.dims[2],
           "values length = dims product");
  return ck.out;
}

inline std::vector<Violation> validate(const CooTensor3& c) {
  detail::Checker ck;
  for (int m = 0; m < 3; ++m)
    if (c.coords[m].size() != c.values.size()) {
      ck.fail("coordinate and value arrays have equal length");
      return ck.out;
    }
  for (std::size_t e = 0; e < c.values.size(); ++e) {
    for (int m = 0; m < 3; ++m)
      if (c.coords[m][e] < 0 || c.coords[m][e] >= c.dims[m]) {
        ck.fail("indices in range", static_cast<index_t>(e));
        return ck.out;
      }
    if (e > 0) {
      std::array<index_t, 3> a{c.coords[0][e - 1], c.coords[1][e - 1], c.coords[2][e - 1]};
      std::array<index_t, 3> b{c.coords[0][e], c.coords[1][e], c.coords[2][e]};
      if (b <= a) {
        ck.fail("entries sorted lexicographically without duplicates", static_cast<index_t>(e));
        return ck.out;
      }
    }
  }
  detail::check_no_zeros(ck, c.values);
  return ck.out;
}

inline std::vector<Violation> validate(const CsfTensor3& t) {
  detail::Checker ck;
  auto o = t.mode_order;
  std::sort(o.begin(), o.end());
  if (o != ModeOrder{0, 1, 2}) {
    ck.fail("mode_order is a permutation of (0,1,2)");
    return ck.out;
  }
  if (t.values.size() != t.idx2.size()) ck.fail("values length = idx2 length");
  auto check_level = [&](const std::vector<index_t>& ptr, const std::vector<index_t>& parent,
                         const std::vector<index_t>& child, const char* name) {
    if (ptr.size() != parent.size() + 1) {
      ck.fail(std::string(name) + " length = parent level + 1");
      return;
    }
    if (ptr.front() != 0) ck.fail(std::string(name) + "[0] = 0", 0);
    for (std::size_t i = 1; i < ptr.size(); ++i)
      if (ptr[i] <= ptr[i - 1]) {
        ck.fail(std::string(name) + " strictly increasing", static_cast<index_t>(i));
        return;
      }
    if (ptr.back() != static_cast<index_t>(child.size()))
      ck.fail(std::string(name) + " ends at next level length");
    for (std::size_t n = 0; n + 1 < ptr.size(); ++n)
      for (index_t c = ptr[n] + 1; c < ptr[n + 1] && c < static_cast<index_t>(child.size()); ++c)
        if (child[static_cast<std::size_t>(c)] <= child[static_cast<std::size_t>(c - 1)]) {
          ck.fail("sibling indices strictly increasing", c);
          return;
        }
  };
  check_level(t.ptr0, t.idx0, t.idx1, "ptr0");
  check_level(t.ptr1, t.idx1, t.idx2, "ptr1");
  for (std::size_t n = 1; n < t.idx0.size(); ++n)
    if (t.idx0[n] <= t.idx0[n - 1]) ck.fail("idx0 strictly increasing", static_cast<index_t>(n));
  auto in_range = [&](const std::vector<index_t>& idx, index_t d) {
    return std::all_of(idx.begin(), idx.end(), [d](index_t v) { return v >= 0 && v < d; });
  };
  if (!in_range(t.idx0, t.dims[t.mode_order[0]]) || !in_range(t.idx1, t.dims[t.mode_order[1]]) ||
      !in_range(t.idx2, t.dims[t.mode_order[2]]))
    ck.fail("indices in range");
  detail::check_no_zeros(ck, t.values);
  return ck.out;
}

inline std::vector<Violation> validate(const FormattedTensor3& t) {
  return std::visit([](const auto& x) { return validate(x); }, t);
}

template <class T>
void require_valid(const T& value) {
  auto v = validate(value);
  if (!v.empty()) {
    std::string msg = "invalid input: " + v.front().invariant;
    if (v.front().index >= 0) msg += " (at " + std::to_string(v.front().index) + ")";
    throw Error(msg);
  }
}

// ---------------------------------------------------------------------------
// nnz / density
// ---------------------------------------------------------------------------

struct NnzDensity {
  index_t nnz = 0;
  double density = 0.0;
};

inline NnzDensity nnz_density(index_t nnz, double size) {
  return {nnz, size > 0 ? static_cast<double>(nnz) / size : 0.0};
}

inline NnzDensity nnz_density(const FormattedMatrix& m) {
  index_t nnz = std::visit(
      [](const auto& x) -> index_t {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, CooMatrix> || std::is_same_v<T, CsrMatrix> ||
                      std::is_same_v<T, CscMatrix>)
          return x.nnz();
        else if constexpr (std::is_same_v<T, ZvcMatrix>)
          return static_cast<index_t>(x.values.size());
        else if constexpr (std::is_same_v<T, RlcMatrix>)
          return static_cast<index_t>(std::count_if(x.pairs.begin(), x.pairs.end(),
                                                    [](const RlcPair& p) { return p.value != 0.0; }));
        else if constexpr (std::is_same_v<T, BsrMatrix>)
          return static_cast<index_t>(std::count_if(x.block_values.begin(), x.block_values.end(),
                                                    [](double v) { return v != 0.0; }));
        else
          return static_cast<index_t>(
              std::count_if(x.values.begin(), x.values.end(), [](double v) { return v != 0.0; }));
      },
      m);
  auto [r, c] = shape_of(m);
  return nnz_density(nnz, static_cast<double>(r) * static_cast<double>(c));
}

inline NnzDensity nnz_density(const FormattedTensor3& t) {
  index_t nnz = std::visit(
      [](const auto& x) -> index_t {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, DenseTensor3>)
          return static_cast<index_t>(
              std::count_if(x.values.begin(), x.values.end(), [](double v) { return v != 0.0; }));
        else
          return x.nnz();
      },
      t);
  Dims3 d = shape_of(t);
  return nnz_density(nnz, static_cast<double>(d[0]) * static_cast<double>(d[1]) * static_cast<double>(d[2]));
}

}  // namespace sparseflex
