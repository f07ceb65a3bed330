#include <gtest/gtest.h>

#include <algorithm>

#include "test_util.hpp"

using namespace sftest;
using F = FormatId;

namespace {

WorkloadSpec journal_like(const HardwareConfig& hw) { return synthetic_matmul(124, 124, 124, 12000, 12000, 1, hw, "journal"); }

WorkloadSpec m3plates_like(const HardwareConfig& hw) {
  return synthetic_matmul(11000, 11000, 11000, 6600, 6600, 1, hw, "m3plates");
}

ComboChoice mm(F ma, F mb, F aa, F ab, F out = F::Dense) { return ComboChoice{{ma, mb}, {aa, ab}, out}; }

bool all_dense_acf(const ComboChoice& c) {
  return std::all_of(c.acf.begin(), c.acf.end(), [](F f) { return f == F::Dense; });
}

bool any_dense_acf(const ComboChoice& c) {
  return std::any_of(c.acf.begin(), c.acf.end(), [](F f) { return f == F::Dense; });
}

}  // namespace

TEST(Sage, MatchingFormatsSkipConversion) {
  HardwareConfig hw;
  auto w = journal_like(hw);
  auto r = evaluate_combo(w, mm(F::Dense, F::CSC, F::Dense, F::CSC), hw);
  for (const auto& op : r.operands) {
    EXPECT_EQ(op.conversion_cycles, 0);
    EXPECT_EQ(op.conversion_energy, 0.0);
  }
  EXPECT_EQ(r.output.conversion_energy, 0.0);
  EXPECT_EQ(r.conversion_energy, 0.0);
}

TEST(Sage, TotalsComposeFromParts) {
  HardwareConfig hw;
  auto w = journal_like(hw);
  auto r = evaluate_combo(w, mm(F::ZVC, F::CSR, F::Dense, F::CSC, F::COO), hw);
  EXPECT_GT(r.conversion_cycles, 0);
  EXPECT_EQ(r.total_cycles, std::max(r.transfer_cycles, r.conversion_cycles) + r.compute.total_cycles +
                                std::max(r.output.dram.cycles, r.output.conversion_cycles));
  EXPECT_DOUBLE_EQ(r.total_energy, r.transfer_energy + r.conversion_energy + r.compute.energy + r.output.dram.energy);
  EXPECT_DOUBLE_EQ(r.edp, r.total_energy * static_cast<double>(r.total_cycles));

  hw.overlap_conversion = false;
  auto s = evaluate_combo(w, mm(F::ZVC, F::CSR, F::Dense, F::CSC, F::COO), hw);
  EXPECT_EQ(s.total_cycles, s.transfer_cycles + s.conversion_cycles + s.compute.total_cycles + s.output.dram.cycles +
                                s.output.conversion_cycles);
}

TEST(Sage, InvalidComboThrows) {
  HardwareConfig hw;
  auto w = journal_like(hw);
  EXPECT_THROW(evaluate_combo(w, mm(F::Dense, F::Dense, F::Dense, F::CSR), hw), Error);
  EXPECT_THROW(evaluate_combo(w, ComboChoice{{F::Dense}, {F::Dense}, F::Dense}, hw), Error);
  EXPECT_THROW(evaluate_combo(w, mm(F::CSF, F::Dense, F::Dense, F::Dense), hw), Error);
}

TEST(Sage, JournalZvcDenseBeatsCsrCsc) {
  HardwareConfig hw;
  auto w = journal_like(hw);
  auto zvc = evaluate_combo(w, mm(F::ZVC, F::ZVC, F::Dense, F::Dense), hw);
  auto csr = evaluate_combo(w, mm(F::CSR, F::CSC, F::CSR, F::CSC), hw);
  EXPECT_LT(zvc.edp, csr.edp);
}

TEST(Sage, JournalRecommendsZvcWithDenseAcf) {
  HardwareConfig hw;
  auto rec = recommend(journal_like(hw), hw);
  EXPECT_EQ(rec.best.combo.mcf, (std::vector<F>{F::ZVC, F::ZVC}));
  EXPECT_EQ(rec.best.combo.acf, (std::vector<F>{F::Dense, F::Dense}));
}

TEST(Sage, M3platesRecommendsCooWithCsrCsc) {
  HardwareConfig hw;
  auto rec = recommend(m3plates_like(hw), hw);
  EXPECT_EQ(rec.best.combo.mcf[0], F::COO);
  EXPECT_EQ(rec.best.combo.acf, (std::vector<F>{F::CSR, F::CSC}));
}

TEST(Sage, FullyDenseOperandsStayDense) {
  HardwareConfig hw;
  auto w = synthetic_matmul(64, 64, 64, 64 * 64, 64 * 64, 3, hw);
  auto rec = recommend(w, hw);
  EXPECT_EQ(rec.best.combo, mm(F::Dense, F::Dense, F::Dense, F::Dense, F::Dense));
}

TEST(Sage, FixedMcfConstrainsSearch) {
  HardwareConfig hw;
  auto w = journal_like(hw);
  Evaluator ev(w, hw);
  auto rec = recommend(ev, FixedMcf{F::CSR, std::nullopt});
  for (const auto& r : rec.ranking) EXPECT_EQ(r.combo.mcf[0], F::CSR);
  EXPECT_EQ(rec.ranking.size(), enumerate_combos(ev.sets()).size() / ev.sets().mcf[0].size());
  auto free = recommend(ev);
  EXPECT_LE(free.best.edp, rec.best.edp);
  EXPECT_THROW(recommend(ev, FixedMcf{F::CSF, std::nullopt}), Error);
  EXPECT_THROW(recommend(ev, FixedMcf{F::CSR, F::CSR, F::CSR}), Error);
}

TEST(Sage, RecommendationIsMinimumOverAllCombos) {
  HardwareConfig hw;
  for (double density : {1e-4, 1e-2, 0.2, 0.9}) {
    auto w = synthetic_matmul(96, 80, 72, target_nnz(density, 96.0 * 80), target_nnz(density, 80.0 * 72), 11, hw);
    Evaluator ev(w, hw);
    auto rec = recommend(ev);
    for (const auto& c : enumerate_combos(ev.sets())) EXPECT_LE(rec.best.edp, ev.evaluate(c).edp) << c.label();
    for (const auto& row : baseline_compare(ev)) EXPECT_LE(rec.best.edp, row.report.edp) << row.name;
    EXPECT_TRUE(std::is_sorted(rec.ranking.begin(), rec.ranking.end(), ranks_before));
  }
}

TEST(Sage, JournalCsrPresetCostsMoreThanDensePresets) {
  HardwareConfig hw;
  auto w = journal_like(hw);
  Evaluator ev(w, hw);
  auto rows = baseline_compare(ev);
  auto csr = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.name == "Fix_Fix_None2"; });
  ASSERT_NE(csr, rows.end());
  int dense_presets = 0;
  for (const auto& r : rows) {
    if (r.name == "SAGE" || !all_dense_acf(r.report.combo)) continue;
    ++dense_presets;
    EXPECT_GT(csr->report.edp, r.report.edp) << r.name;
  }
  EXPECT_GE(dense_presets, 2);
}

TEST(Sage, M3platesDenseAcfComputeIsFarSlower) {
  HardwareConfig hw;
  auto w = m3plates_like(hw);
  Evaluator ev(w, hw);
  const index_t sparse = ev.evaluate(mm(F::CSR, F::CSC, F::CSR, F::CSC)).compute.total_cycles;
  int checked = 0;
  for (const auto& p : accelerator_presets())
    for (const auto& c : p.combos) {
      if (!any_dense_acf(c)) continue;
      ++checked;
      EXPECT_GE(ev.evaluate(c).compute.total_cycles, 10 * sparse) << p.name << " " << c.label();
    }
  EXPECT_GT(checked, 0);
}

TEST(Sage, Deterministic) {
  HardwareConfig hw;
  auto a = recommend(synthetic_matmul(64, 48, 40, 300, 250, 9, hw), hw);
  auto b = recommend(synthetic_matmul(64, 48, 40, 300, 250, 9, hw), hw);
  ASSERT_EQ(a.ranking.size(), b.ranking.size());
  for (std::size_t i = 0; i < a.ranking.size(); ++i) {
    EXPECT_EQ(a.ranking[i].combo, b.ranking[i].combo);
    EXPECT_EQ(a.ranking[i].edp, b.ranking[i].edp);
  }
}

TEST(Sage, TiesBreakByFormatOrder) {
  CostReport a, b;
  a.combo = mm(F::ZVC, F::Dense, F::Dense, F::Dense);
  b.combo = mm(F::Dense, F::ZVC, F::Dense, F::Dense);
  a.edp = b.edp = 1.0;
  EXPECT_TRUE(ranks_before(b, a));
  EXPECT_FALSE(ranks_before(a, b));
}

TEST(Sage, BestEdpNondecreasingInDramEnergy) {
  HardwareConfig hw;
  auto w = synthetic_matmul(128, 128, 128, 800, 800, 5, hw);
  double prev = 0.0;
  for (double e : {0.0, 10.0, 50.0, 200.0, 1000.0}) {
    hw.e_dram_per_bit = e;
    double edp = recommend(w, hw).best.edp;
    EXPECT_GE(edp, prev) << e;
    prev = edp;
  }
}

TEST(Sage, HardwareConfigParsing) {
  auto hw = parse_hardware_config("# comment\nn_pe = 64\n bus_elems_per_cycle=8 # trailing\n\nrun_bits = 5\n");
  EXPECT_EQ(hw.n_pe, 64);
  EXPECT_EQ(hw.bus_elems_per_cycle, 8);
  EXPECT_EQ(hw.run_bits, 5);
  EXPECT_THROW(parse_hardware_config("bogus = 1\n"), Error);
  EXPECT_THROW(parse_hardware_config("n_pe 4\n"), Error);
  EXPECT_THROW(parse_hardware_config("n_pe = four\n"), Error);
  EXPECT_THROW(parse_hardware_config("n_pe = 0\n"), Error);
  EXPECT_THROW(parse_hardware_config("e_mac = -1\n"), Error);
}

TEST(Sage, TensorWorkloads) {
  HardwareConfig hw;
  auto T = random_tensor(Dims3{20, 12, 16}, 0.05, 4);
  for (Kernel k : {Kernel::SpTTM, Kernel::MTTKRP}) {
    auto w = tensor_workload(k, T, 6, hw);
    Evaluator ev(w, hw);
    auto rec = recommend(ev);
    EXPECT_EQ(rec.best.combo.mcf.size(), w.operand_count());
    EXPECT_EQ(rec.ranking.size(), enumerate_combos(ev.sets()).size());
    for (const auto& c : enumerate_combos(ev.sets())) EXPECT_LE(rec.best.edp, ev.evaluate(c).edp);
    EXPECT_THROW(baseline_compare(ev), Error);
  }
  EXPECT_THROW(tensor_workload(Kernel::SpGEMM, T, 6, hw), Error);
  EXPECT_THROW(tensor_workload(Kernel::SpTTM, T, 0, hw), Error);
}

TEST(Sage, KernelNames) {
  for (Kernel k : {Kernel::SpGEMM, Kernel::SpTTM, Kernel::MTTKRP}) EXPECT_EQ(parse_kernel(to_string(k)), k);
  EXPECT_THROW(parse_kernel("conv"), Error);
}
