#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "test_util.hpp"

using namespace sftest;

namespace {

const FormatId kCompressed[] = {FormatId::COO, FormatId::CSR, FormatId::CSC, FormatId::RLC, FormatId::ZVC,
                                FormatId::BSR};

FormatId best(index_t M, index_t K, double density) {
  HardwareConfig hw;
  return rank_mcf(M, K, target_nnz(density, static_cast<double>(M) * static_cast<double>(K)), hw).front().format;
}

}  // namespace

TEST(McfCost, DenseBits) {
  auto s = matrix_storage_bits(FormatId::Dense, 11000, 11000, 5, 32);
  EXPECT_EQ(s.total_bits(), 3'872'000'000);
  EXPECT_EQ(s.metadata_bits, 0);
  EXPECT_EQ(s.metadata_fraction(), 0.0);
}

TEST(McfCost, CooSingleNonzero) {
  auto s = matrix_storage_bits(FormatId::COO, 11000, 11000, 1, 32);
  EXPECT_EQ(s.data_bits, 32);
  EXPECT_EQ(s.metadata_bits, 28);
  EXPECT_EQ(s.total_bits(), 60);
}

TEST(McfCost, ZvcFullExceedsDense) {
  auto z = matrix_storage_bits(FormatId::ZVC, 300, 200, 60000, 32);
  auto d = matrix_storage_bits(FormatId::Dense, 300, 200, 60000, 32);
  EXPECT_EQ(z.total_bits(), d.total_bits() + 60000);
}

TEST(McfCost, ExampleFormulas) {
  // 4x4 example: iw(4) = 2, pw = ceil(log2(6)) = 3.
  auto c = example4();
  auto csr = storage_bits(from_coo(c, FormatId::CSR), 32);
  EXPECT_EQ(csr.metadata_bits, 4 * 2 + 5 * 3);
  auto rlc = storage_bits(from_coo(c, FormatId::RLC), 32);
  EXPECT_EQ(rlc.total_bits(), 4 * (32 + 4));
  auto zvc = storage_bits(from_coo(c, FormatId::ZVC), 32);
  EXPECT_EQ(zvc.total_bits(), 4 * 32 + 16);
  // Four 2x2 blocks: 4*4*32 data, 4*iw(2) ids, 3 pointers of ceil(log2 6) bits.
  auto bsr = storage_bits(from_coo(c, FormatId::BSR), 32);
  EXPECT_EQ(bsr.data_bits, 4 * 4 * 32);
  EXPECT_EQ(bsr.metadata_bits, 4 * 1 + 3 * 3);
}

TEST(McfCost, TensorFormulas) {
  auto t = example_tensor();
  auto coo = storage_bits(from_coo(t, FormatId::COO), 32);
  EXPECT_EQ(coo.metadata_bits, 3 * 3);
  auto csf = storage_bits(from_coo(t, FormatId::CSF), 32);
  // idx: 2 + 3 + 3 entries of 1 bit; ptr0: 3 x ceil(log2 5), ptr1: 4 x ceil(log2 5).
  EXPECT_EQ(csf.metadata_bits, 8 + 3 * 3 + 4 * 3);
}

TEST(McfCost, DramCost) {
  HardwareConfig hw;
  auto z = dram_cost(0, hw);
  EXPECT_EQ(z.energy, 0.0);
  EXPECT_EQ(z.cycles, 0);
  EXPECT_DOUBLE_EQ(dram_cost(2000, hw).energy, 2 * dram_cost(1000, hw).energy);
  EXPECT_DOUBLE_EQ(dram_cost(3'872'000'000, hw).energy, 7.744e11);
  EXPECT_EQ(dram_cost(257, hw).cycles, 2);
}

TEST(McfCost, EnergyRatio) {
  HardwareConfig hw;
  EXPECT_DOUBLE_EQ(hw.e_dram_per_bit * 32 / hw.e_mac, 6400.0);
}

TEST(McfCost, RankingStars) {
  EXPECT_EQ(best(11000, 11000, 1e-8), FormatId::COO);
  EXPECT_EQ(best(11000, 11000, 0.5), FormatId::ZVC);
  EXPECT_EQ(best(11000, 11000, 1.0), FormatId::Dense);
}

TEST(McfCost, RankingIsSortedWithTieOrder) {
  HardwareConfig hw;
  auto r = rank_mcf(10, 10, 0, hw);
  for (std::size_t i = 1; i < r.size(); ++i) {
    EXPECT_LE(r[i - 1].storage.total_bits(), r[i].storage.total_bits());
    if (r[i - 1].storage.total_bits() == r[i].storage.total_bits())
      EXPECT_LT(tie_order(r[i - 1].format), tie_order(r[i].format));
  }
}

TEST(McfCost, QuantizationRaisesMetadataShare) {
  auto c = random_matrix(1000, 1000, 0.05, 1);
  FormatParams p;
  auto counts = structure_counts(c, p);
  for (FormatId f : kCompressed) {
    double prev = -1;
    for (int b : {32, 16, 8}) {
      double frac = matrix_storage_bits(f, 1000, 1000, c.nnz(), b, p, counts).metadata_fraction();
      EXPECT_GT(frac, prev) << to_string(f) << " b=" << b;
      prev = frac;
    }
  }
}

TEST(McfCost, ZvcOverCooMonotoneInK) {
  const index_t nnz = 5000;
  double prev = 0;
  for (index_t K : {100, 500, 1000, 5000, 20000, 100000}) {
    double z = static_cast<double>(matrix_storage_bits(FormatId::ZVC, 1000, K, nnz, 32).total_bits());
    double c = static_cast<double>(matrix_storage_bits(FormatId::COO, 1000, K, nnz, 32).total_bits());
    EXPECT_GT(z / c, prev);
    prev = z / c;
  }
}

TEST(McfCost, NondecreasingInNnz) {
  // Nested instances from one random order: prefixes of a shuffled pattern.
  auto full = random_matrix(60, 70, 0.5, 3);
  std::vector<index_t> order(static_cast<std::size_t>(full.nnz()));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(2));
  std::vector<bits_t> prev(8, -1);
  bits_t dense0 = -1;
  for (std::size_t n = 0; n <= order.size(); n += 97) {
    CooMatrix c{60, 70, {}, {}, {}};
    for (std::size_t i = 0; i < n; ++i) {
      c.row_ids.push_back(full.row_ids[order[i]]);
      c.col_ids.push_back(full.col_ids[order[i]]);
      c.values.push_back(1.0);
    }
    c = canonicalize(c);
    auto prof = MatrixProfile::from_coo(c);
    for (FormatId f : kCompressed) {
      auto bits = prof.storage(f, 32).total_bits();
      EXPECT_GE(bits, prev[static_cast<int>(f)]) << to_string(f);
      prev[static_cast<int>(f)] = bits;
    }
    auto d = prof.storage(FormatId::Dense, 32).total_bits();
    if (dense0 < 0) dense0 = d;
    EXPECT_EQ(d, dense0);
  }
}

TEST(McfCost, RlcUsesActualEncoding) {
  // Same nnz, different spacing: exact RLC bits follow the escape count.
  CooMatrix close{1, 64, {0, 0}, {0, 1}, {1, 1}};
  CooMatrix far{1, 64, {0, 0}, {0, 63}, {1, 1}};
  auto a = storage_bits(from_coo(close, FormatId::RLC), 32);
  auto b = storage_bits(from_coo(far, FormatId::RLC), 32);
  EXPECT_LT(a.total_bits(), b.total_bits());
  EXPECT_EQ(b.total_bits(), static_cast<bits_t>(rlc_from_coo(far, 4).pairs.size()) * 36);
  EXPECT_EQ(MatrixProfile::from_coo(far).storage(FormatId::RLC, 32), b);
}

TEST(McfCost, ExpectedRlcPairsTracksInstances) {
  for (double d : {0.01, 0.1, 0.5}) {
    auto c = random_matrix(300, 300, d, 7);
    double exact = static_cast<double>(rlc_from_coo(c, 4).pairs.size());
    double est = static_cast<double>(expected_rlc_pairs(90000.0, c.nnz(), 4));
    EXPECT_NEAR(est / exact, 1.0, 0.03) << d;
  }
}

TEST(McfCost, ProfileMatchesEncodedStorage) {
  auto c = random_matrix(40, 33, 0.2, 5);
  auto prof = MatrixProfile::from_coo(c);
  for (FormatId f : {FormatId::Dense, FormatId::COO, FormatId::CSR, FormatId::CSC, FormatId::BSR, FormatId::RLC,
                     FormatId::ZVC})
    EXPECT_EQ(prof.storage(f, 32), storage_bits(from_coo(c, f), 32)) << to_string(f);
}
