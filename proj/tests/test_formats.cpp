#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace sftest;

namespace {

bool has_violation(const std::vector<Violation>& v, const std::string& name) {
  for (const auto& x : v)
    if (x.invariant == name) return true;
  return false;
}

}  // namespace

TEST(Formats, CsrExampleEncoding) {
  auto csr = std::get<CsrMatrix>(from_dense(dense_from_coo(example4()), FormatId::CSR));
  EXPECT_EQ(csr.row_ptr, (std::vector<index_t>{0, 2, 2, 3, 4}));
  EXPECT_EQ(csr.col_ids, (std::vector<index_t>{0, 3, 1, 2}));
  EXPECT_EQ(csr.values, (std::vector<double>{5, 7, 3, 1}));
}

TEST(Formats, RlcExampleEncoding) {
  FormatParams p;
  p.run_bits = 4;
  auto rlc = std::get<RlcMatrix>(from_dense(dense_from_coo(example4()), FormatId::RLC, p));
  std::vector<RlcPair> want{{0, 5}, {2, 7}, {5, 3}, {4, 1}};
  EXPECT_EQ(rlc.pairs, want);
}

TEST(Formats, AllZeroGivesEmptyCoo) {
  auto coo = std::get<CooMatrix>(from_dense(DenseMatrix(4, 4), FormatId::COO));
  EXPECT_TRUE(coo.row_ids.empty());
  EXPECT_TRUE(coo.values.empty());
  EXPECT_EQ(to_dense(FormattedMatrix{coo}), DenseMatrix(4, 4));
}

TEST(Formats, CscDecodes) {
  CscMatrix c{4, 4, {0, 1, 2, 3, 4}, {0, 2, 3, 0}, {5, 3, 1, 7}};
  EXPECT_TRUE(validate(c).empty());
  EXPECT_EQ(to_dense(FormattedMatrix{c}), dense_from_coo(example4()));
}

TEST(Formats, ZvcDecodes) {
  const char* bits = "1001000001000010";
  ZvcMatrix z{4, 4, {}, {5, 7, 3, 1}};
  for (const char* b = bits; *b; ++b) z.mask.push_back(*b == '1');
  EXPECT_TRUE(validate(z).empty());
  EXPECT_EQ(to_dense(FormattedMatrix{z}), dense_from_coo(example4()));
}

TEST(Formats, ValidateCsrRowPtr) {
  CsrMatrix r{4, 4, {0, 2, 1, 3, 4}, {0, 3, 1, 2}, {5, 7, 3, 1}};
  EXPECT_TRUE(has_violation(validate(r), "row_ptr nondecreasing"));
  EXPECT_THROW(require_valid(r), Error);
}

TEST(Formats, ValidateZvcPopcount) {
  ZvcMatrix z{2, 2, {true, true, true, false}, {1, 2, 3, 4}};
  EXPECT_TRUE(has_violation(validate(z), "popcount(mask) = values length"));
}

TEST(Formats, ValidateRejectsStoredZeros) {
  CooMatrix c{2, 2, {0}, {1}, {0.0}};
  EXPECT_FALSE(validate(c).empty());
  CsrMatrix r{2, 2, {0, 1, 1}, {1}, {0.0}};
  EXPECT_FALSE(validate(r).empty());
}

TEST(Formats, ValidateCsfExample) {
  auto csf = csf_from_coo(example_tensor(), {0, 1, 2});
  EXPECT_TRUE(validate(csf).empty());
  EXPECT_EQ(csf.idx0, (std::vector<index_t>{0, 1}));
  EXPECT_EQ(csf.ptr0, (std::vector<index_t>{0, 2, 3}));
  EXPECT_EQ(csf.idx1, (std::vector<index_t>{0, 1, 0}));
  EXPECT_EQ(csf.ptr1, (std::vector<index_t>{0, 1, 2, 3}));
  EXPECT_EQ(csf.idx2, (std::vector<index_t>{0, 1, 1}));
}

TEST(Formats, BsrStoresPaddingZeros) {
  auto b = bsr_from_coo(example4(), 2, 2);
  EXPECT_TRUE(validate(b).empty());
  EXPECT_EQ(b.num_blocks(), 4);
  EXPECT_EQ(to_dense(FormattedMatrix{b}), dense_from_coo(example4()));
}

TEST(Formats, BsrNonDivisibleDims) {
  auto d = random_dense(7, 5, 0.4, 3);
  FormatParams p;
  p.block_rows = 3;
  p.block_cols = 2;
  EXPECT_EQ(to_dense(from_dense(d, FormatId::BSR, p)), d);
}

TEST(Formats, RlcEscapeRoundTrip) {
  // Nonzeros 40 positions apart; r = 2 caps runs at 3.
  CooMatrix c{5, 10, {0, 4}, {0, 1}, {1.5, 2.5}};
  auto rlc = rlc_from_coo(c, 2);
  EXPECT_TRUE(validate(rlc).empty());
  EXPECT_GT(rlc.pairs.size(), 2u);
  EXPECT_EQ(coo_from_rlc(rlc), c);
}

TEST(Formats, RlcFillerThenValue) {
  // run of exactly 2^r zeros: one filler then a zero run.
  CooMatrix c{1, 20, {0}, {16}, {9.0}};
  auto rlc = rlc_from_coo(c, 4);
  std::vector<RlcPair> want{{15, 0.0}, {0, 9.0}};
  EXPECT_EQ(rlc.pairs, want);
  EXPECT_EQ(coo_from_rlc(rlc), c);
}

TEST(Formats, RoundTripAllMatrixFormats) {
  for (FormatId f : {FormatId::Dense, FormatId::COO, FormatId::CSR, FormatId::CSC, FormatId::BSR, FormatId::RLC,
                     FormatId::ZVC})
    for (double d : kDensities)
      for (std::uint64_t s = 0; s < 4; ++s) {
        auto x = random_dense(13 + static_cast<index_t>(s), 17, d, s * 31 + 7);
        auto enc = from_dense(x, f, params_for(f, s));
        ASSERT_TRUE(validate(enc).empty()) << to_string(f) << " d=" << d;
        ASSERT_EQ(to_dense(enc), x) << to_string(f) << " d=" << d;
      }
}

TEST(Formats, CsfAllModeOrdersSameContent) {
  auto x = random_dense(Dims3{5, 6, 7}, 0.2, 11);
  CooTensor3 want = coo_from_dense(x);
  for (std::uint64_t s = 0; s < 6; ++s) {
    auto enc = from_dense(x, FormatId::CSF, params_for(FormatId::CSF, s));
    ASSERT_TRUE(validate(enc).empty());
    EXPECT_EQ(to_coo(enc), want);
    EXPECT_EQ(to_dense(enc), x);
  }
}

TEST(Formats, TensorRoundTrip) {
  for (FormatId f : {FormatId::Dense, FormatId::COO, FormatId::CSF})
    for (double d : kDensities) {
      auto x = random_dense(Dims3{4, 9, 5}, d, 5);
      EXPECT_EQ(to_dense(from_dense(x, f, params_for(f, 3))), x);
    }
}

TEST(Formats, CanonicalizeDropsZerosAndSorts) {
  CooMatrix c{3, 3, {2, 0, 1}, {0, 2, 1}, {1.0, 2.0, 0.0}};
  auto s = canonicalize(c);
  EXPECT_EQ(s.row_ids, (std::vector<index_t>{0, 2}));
  EXPECT_EQ(s.values, (std::vector<double>{2.0, 1.0}));
  CooMatrix dup{3, 3, {0, 0}, {1, 1}, {1.0, 2.0}};
  EXPECT_THROW(canonicalize(dup), Error);
}

TEST(Formats, InvalidParamsRejected) {
  FormatParams p;
  p.block_rows = 0;
  EXPECT_THROW(from_coo(example4(), FormatId::BSR, p), Error);
  FormatParams q;
  q.run_bits = 0;
  EXPECT_THROW(from_coo(example4(), FormatId::RLC, q), Error);
}

TEST(Formats, NnzDensity) {
  auto j = random_matrix(124, 124, index_t{12000}, 1);
  auto nd = nnz_density(FormattedMatrix{j});
  EXPECT_EQ(nd.nnz, 12000);
  EXPECT_NEAR(nd.density / 0.785, 1.0, 0.01);
  auto m3 = nnz_density(6600, 11000.0 * 11000.0);
  EXPECT_NEAR(m3.density / 5.4e-5, 1.0, 0.02);
  auto e = nnz_density(FormattedMatrix{CooMatrix{3, 3, {}, {}, {}}});
  EXPECT_EQ(e.nnz, 0);
  EXPECT_EQ(e.density, 0.0);
}
