#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace sftest;

namespace {

DenseMatrix mat(index_t m, index_t k, std::initializer_list<double> v) {
  DenseMatrix d(m, k);
  d.values.assign(v);
  return d;
}

DenseMatrix ones(index_t m, index_t k) {
  DenseMatrix d(m, k);
  std::fill(d.values.begin(), d.values.end(), 1.0);
  return d;
}

DenseMatrix eye(index_t n) {
  DenseMatrix d(n, n);
  for (index_t i = 0; i < n; ++i) d.at(i, i) = 1.0;
  return d;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols, a.rows);
  for (index_t i = 0; i < a.rows; ++i)
    for (index_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

void expect_close(const std::vector<double>& got, const std::vector<double>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    ASSERT_LE(std::abs(got[i] - want[i]), 1e-9 * std::max(1.0, std::abs(want[i]))) << "at " << i;
}

const FormatId kAcfs[] = {FormatId::Dense, FormatId::COO, FormatId::CSR, FormatId::CSC};

}  // namespace

TEST(Kernels, GemmExamples) {
  auto b = mat(2, 2, {5, 6, 7, 8});
  EXPECT_EQ(gemm_dense(eye(2), b), b);
  EXPECT_EQ(gemm_dense(mat(2, 2, {1, 2, 3, 4}), b), mat(2, 2, {19, 22, 43, 50}));
  EXPECT_EQ(gemm_dense(b, DenseMatrix(2, 3)), DenseMatrix(2, 3));
  EXPECT_THROW(gemm_dense(b, DenseMatrix(3, 3)), Error);
}

TEST(Kernels, SpmmCooExamples) {
  EXPECT_EQ(spmm_coo(example4(), eye(4)), dense_from_coo(example4()));
  EXPECT_EQ(spmm_coo(CooMatrix{4, 4, {}, {}, {}}, ones(4, 3)), DenseMatrix(4, 3));
  EXPECT_EQ(spmm_coo(example4(), ones(4, 2)), mat(4, 2, {12, 12, 0, 0, 3, 3, 1, 1}));
}

TEST(Kernels, MatmulAcfExamples) {
  auto a = dense_from_coo(example4());
  auto I = from_dense(eye(4), FormatId::CSC);
  EXPECT_EQ(matmul_acf(from_coo(example4(), FormatId::CSR), I), a);
  auto at = from_dense(transpose(a), FormatId::CSC);
  expect_close(matmul_acf(from_coo(example4(), FormatId::CSR), at).values, gemm_dense(a, transpose(a)).values);
  EXPECT_EQ(matmul_acf(from_coo(example4(), FormatId::COO), FormattedMatrix{ones(4, 2)}),
            spmm_coo(example4(), ones(4, 2)));
}

TEST(Kernels, MatmulAcfOracleAllPairs) {
  const double dens[] = {1e-3, 0.05, 0.3, 1.0};
  for (FormatId fa : kAcfs)
    for (FormatId fb : kAcfs)
      for (std::uint64_t s = 0; s < 12; ++s) {
        const index_t M = 3 + static_cast<index_t>(s % 5), K = 4 + static_cast<index_t>(s % 7), N = 2 + static_cast<index_t>(s % 3);
        auto A = random_dense(M, K, dens[s % 4], s + 100);
        auto B = random_dense(K, N, dens[(s + 1) % 4], s + 200);
        expect_close(matmul_acf(from_dense(A, fa), from_dense(B, fb)).values, gemm_dense(A, B).values);
      }
}

TEST(Kernels, MatmulRejectsMismatch) {
  EXPECT_THROW(matmul_acf(from_coo(example4(), FormatId::CSR), FormattedMatrix{ones(3, 2)}), Error);
}

TEST(Kernels, SpttmExamples) {
  CooTensor3 t{{2, 2, 2}, {{{0, 1}, {0, 1}, {0, 1}}}, {2, 3}};
  auto out = spttm(FormattedTensor3{t}, ones(2, 1));
  EXPECT_EQ(out.at(0, 0, 0), 2.0);
  EXPECT_EQ(out.at(1, 1, 0), 3.0);
  EXPECT_EQ(out.at(0, 1, 0), 0.0);
  auto x = random_dense(Dims3{3, 4, 5}, 0.3, 9);
  EXPECT_EQ(spttm(FormattedTensor3{x}, eye(5)), x);
  EXPECT_EQ(spttm(FormattedTensor3{CooTensor3{{2, 2, 2}, {}, {}}}, ones(2, 3)), DenseTensor3(Dims3{2, 2, 3}));
}

TEST(Kernels, MttkrpExamples) {
  CooTensor3 t{{1, 2, 2}, {{{0}, {1}, {1}}}, {2}};
  DenseMatrix B(2, 1), C(2, 1);
  B.at(1, 0) = 3;
  C.at(1, 0) = 5;
  EXPECT_EQ(mttkrp(FormattedTensor3{t}, B, C).at(0, 0), 30.0);

  auto x = random_dense(Dims3{4, 3, 5}, 0.4, 2);
  auto o = mttkrp(FormattedTensor3{x}, ones(3, 2), ones(5, 2));
  for (index_t i = 0; i < 4; ++i) {
    double sum = 0;
    for (index_t j = 0; j < 3; ++j)
      for (index_t k = 0; k < 5; ++k) sum += x.at(i, j, k);
    EXPECT_NEAR(o.at(i, 0), sum, 1e-9 * std::max(1.0, sum));
    EXPECT_NEAR(o.at(i, 1), sum, 1e-9 * std::max(1.0, sum));
  }
  EXPECT_EQ(mttkrp(FormattedTensor3{CooTensor3{{2, 3, 4}, {}, {}}}, ones(3, 2), ones(4, 2)), DenseMatrix(2, 2));
}

TEST(Kernels, TensorKernelsAgreeAcrossFormats) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto x = random_dense(Dims3{3, 4, 5}, 0.05 + 0.1 * static_cast<double>(s), s);
    auto B = random_dense(5, 3, 1.0, s + 1);
    auto Bj = random_dense(4, 3, 1.0, s + 2);
    auto ref = spttm(FormattedTensor3{x}, B);
    auto ref2 = mttkrp(FormattedTensor3{x}, Bj, B);
    for (FormatId f : {FormatId::COO, FormatId::CSF}) {
      auto enc = from_dense(x, f, params_for(f, s));
      expect_close(spttm(enc, B).values, ref.values);
      expect_close(mttkrp(enc, Bj, B).values, ref2.values);
    }
  }
}

TEST(Kernels, MatmulOutputStatsMatchPattern) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto A = random_matrix(20, 30, 0.02 * static_cast<double>(s % 7), s);
    auto B = random_matrix(30, 70, 0.03 * static_cast<double>(s % 5), s + 50);
    auto st = matmul_output_stats(MatrixProfile::from_coo(A), MatrixProfile::from_coo(B), 3);
    // Positive values cannot cancel, so the product pattern is exact.
    auto O = coo_from_dense(gemm_dense(dense_from_coo(A), dense_from_coo(B)));
    EXPECT_EQ(st.nnz, O.nnz());
    EXPECT_EQ(st.rlc_pairs, static_cast<index_t>(rlc_from_coo(O, 3).pairs.size()));
    auto prof = MatrixProfile::from_coo(O);
    EXPECT_EQ(st.max_row_nnz, prof.max_row_nnz);
    EXPECT_EQ(st.max_col_nnz, prof.max_col_nnz);
  }
}
