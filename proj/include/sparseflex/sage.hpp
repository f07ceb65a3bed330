#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sparseflex/acf_perf.hpp"
#include "sparseflex/generate.hpp"
#include "sparseflex/kernels.hpp"
#include "sparseflex/mcf_cost.hpp"
#include "sparseflex/mint.hpp"

namespace sparseflex {

enum class Kernel : std::uint8_t { SpGEMM, SpTTM, MTTKRP };

inline constexpr std::string_view to_string(Kernel k) {
  switch (k) {
    case Kernel::SpGEMM: return "spgemm";
    case Kernel::SpTTM: return "spttm";
    case Kernel::MTTKRP: return "mttkrp";
  }
  return "?";
}

inline Kernel parse_kernel(std::string_view s) {
  if (s == "spgemm" || s == "spmm" || s == "gemm") return Kernel::SpGEMM;
  if (s == "spttm") return Kernel::SpTTM;
  if (s == "mttkrp") return Kernel::MTTKRP;
  throw Error("unknown kernel '" + std::string(s) + "'");
}

/// Size and structure of one operand as seen by the cost model.
struct OperandInfo {
  int rank = 2;
  Dims3 dims{0, 0, 1};
  index_t nnz = 0;
  StructureCounts counts;
  FormatParams params;
  index_t max_row_nnz = 0;
  index_t max_col_nnz = 0;

  StorageBreakdown storage(FormatId f, int dtype_bits) const {
    return rank == 2 ? matrix_storage_bits(f, dims[0], dims[1], nnz, dtype_bits, params, counts)
                     : tensor_storage_bits(f, dims, nnz, dtype_bits, params, counts);
  }

  PlanStats plan_stats(const HardwareConfig& hw) const {
    PlanStats s;
    s.rank = rank;
    s.dims = dims;
    s.nnz = nnz;
    s.block_rows = params.block_rows;
    s.block_cols = params.block_cols;
    s.max_row_nnz = max_row_nnz;
    s.max_col_nnz = max_col_nnz;
    s.identity_order = params.mode_order == ModeOrder{0, 1, 2};
    const double size = static_cast<double>(dims[0]) * static_cast<double>(dims[1]) * static_cast<double>(dims[2]);
    s.rlc_pairs = counts.rlc_pairs >= 0 && params.run_bits == hw.run_bits ? counts.rlc_pairs
                                                                          : expected_rlc_pairs(size, nnz, hw.run_bits);
    if (rank == 2)
      s.bsr_blocks = counts.bsr_blocks >= 0 ? counts.bsr_blocks
                                            : expected_bsr_blocks(dims[0], dims[1], nnz, params.block_rows,
                                                                  params.block_cols);
    if (rank == 3) {
      auto [f0, f1] = counts.csf_fibers0 >= 0 ? std::pair{counts.csf_fibers0, counts.csf_fibers1}
                                              : expected_csf_fibers(dims, nnz, params.mode_order);
      s.fibers0 = f0;
      s.fibers1 = f1;
    }
    return s;
  }

  static OperandInfo of(const MatrixProfile& p) {
    return {2, {p.rows, p.cols, 1}, p.nnz(), p.counts, p.params, p.max_row_nnz, p.max_col_nnz};
  }
  static OperandInfo of(const TensorProfile& p) { return {3, p.dims, p.nnz(), p.counts, p.params, 0, 0}; }
  static OperandInfo of(const OutputStats& s, const FormatParams& params) {
    OperandInfo o{s.rank, s.dims, s.nnz, {}, params, s.max_row_nnz, s.max_col_nnz};
    o.counts.rlc_pairs = s.rlc_pairs;
    if (s.rank == 3) {
      o.counts.csf_fibers0 = s.fibers0;
      o.counts.csf_fibers1 = s.fibers1;
    }
    return o;
  }
  /// A fully dense rows x cols matrix.
  static OperandInfo dense(index_t rows, index_t cols, const FormatParams& params) {
    OperandInfo o{2, {rows, cols, 1}, rows * cols, {}, params, cols, rows};
    o.counts.rlc_pairs = rows * cols;
    o.counts.bsr_blocks = ceil_div(rows, params.block_rows) * ceil_div(cols, params.block_cols);
    return o;
  }
};

/// A kernel instance. Matrix products stream A (M x K) against stationary
/// B (K x N). Tensor kernels stream the tensor against dense factors with
/// factor_cols columns.
struct WorkloadSpec {
  Kernel kernel = Kernel::SpGEMM;
  std::string name;
  MatrixProfile a;
  MatrixProfile b;
  TensorProfile tensor;
  index_t factor_cols = 0;

  std::size_t operand_count() const { return kernel == Kernel::MTTKRP ? 3 : 2; }
};

inline WorkloadSpec matmul_workload(const CooMatrix& A, const CooMatrix& B, const HardwareConfig& hw,
                                    std::string name = {}) {
  if (A.cols != B.rows) throw Error("dimension mismatch: A.cols != B.rows");
  FormatParams p;
  p.run_bits = hw.run_bits;
  WorkloadSpec w;
  w.kernel = Kernel::SpGEMM;
  w.name = std::move(name);
  w.a = MatrixProfile::from_coo(canonicalize(A), p);
  w.b = MatrixProfile::from_coo(canonicalize(B), p);
  return w;
}

inline WorkloadSpec tensor_workload(Kernel k, const CooTensor3& T, index_t factor_cols, const HardwareConfig& hw,
                                    std::string name = {}) {
  if (k == Kernel::SpGEMM) throw Error("tensor workload needs a tensor kernel");
  if (factor_cols < 1) throw Error("factor_cols must be >= 1");
  FormatParams p;
  p.run_bits = hw.run_bits;
  WorkloadSpec w;
  w.kernel = k;
  w.name = std::move(name);
  w.tensor = TensorProfile::from_coo(T, p);
  w.factor_cols = factor_cols;
  return w;
}

/// Uniform-random SpGEMM with B shaped K x N.
inline WorkloadSpec synthetic_matmul(index_t M, index_t K, index_t N, index_t nnz_a, index_t nnz_b,
                                     std::uint64_t seed, const HardwareConfig& hw, std::string name = {}) {
  return matmul_workload(random_matrix(M, K, nnz_a, seed), random_matrix(K, N, nnz_b, seed ^ 0x9e3779b97f4a7c15ULL),
                         hw, std::move(name));
}

struct ComboChoice {
  std::vector<FormatId> mcf;
  std::vector<FormatId> acf;
  FormatId out_mcf = FormatId::Dense;

  std::string label() const {
    static constexpr const char* names[] = {"A", "B", "C"};
    std::string s;
    for (std::size_t i = 0; i < mcf.size(); ++i) {
      s += names[i];
      s += "=" + std::string(to_string(mcf[i])) + "/" + std::string(to_string(acf[i])) + " ";
    }
    return s + "O=" + std::string(to_string(out_mcf));
  }
  friend bool operator==(const ComboChoice&, const ComboChoice&) = default;
};

struct OperandCost {
  FormatId mcf = FormatId::Dense;
  FormatId acf = FormatId::Dense;
  StorageBreakdown storage;
  DramCost dram;
  index_t conversion_cycles = 0;
  double conversion_energy = 0.0;
};

struct CostReport {
  ComboChoice combo;
  std::vector<OperandCost> operands;
  OperandCost output;
  PerfReport compute;
  index_t transfer_cycles = 0;
  index_t conversion_cycles = 0;
  index_t total_cycles = 0;
  double transfer_energy = 0.0;
  double conversion_energy = 0.0;
  double total_energy = 0.0;
  double edp = 0.0;
};

struct CandidateSets {
  std::vector<std::vector<FormatId>> mcf;
  std::vector<std::vector<FormatId>> acf;
  std::vector<FormatId> out_mcf;
};

inline CandidateSets candidate_sets(Kernel k) {
  using F = FormatId;
  const std::vector<F> mat_mcf(kMatrixMcfCandidates.begin(), kMatrixMcfCandidates.end());
  const std::vector<F> ten_mcf{F::Dense, F::ZVC, F::COO, F::CSF};
  // COO held stationary costs the same as CSC in this model, so CSC represents both.
  switch (k) {
    case Kernel::SpGEMM: return {{mat_mcf, mat_mcf}, {{F::Dense, F::CSR, F::CSC, F::COO}, {F::Dense, F::CSC}}, mat_mcf};
    case Kernel::SpTTM: return {{ten_mcf, mat_mcf}, {{F::Dense, F::COO, F::CSF}, {F::Dense}}, ten_mcf};
    case Kernel::MTTKRP:
      return {{ten_mcf, mat_mcf, mat_mcf}, {{F::Dense, F::COO, F::CSF}, {F::Dense}, {F::Dense}}, mat_mcf};
  }
  return {};
}

/// Evaluates combinations for one workload, memoizing the parts shared
/// between combinations (storage per MCF, conversions per MCF/ACF pair,
/// simulations per ACF tuple, output costs per output MCF).
class Evaluator {
 public:
  Evaluator(const WorkloadSpec& w, const HardwareConfig& hw) : w_(w), hw_(hw), sets_(candidate_sets(w.kernel)) {
    hw_.check();
    FormatParams p;
    p.run_bits = hw.run_bits;
    switch (w.kernel) {
      case Kernel::SpGEMM:
        ops_ = {OperandInfo::of(w.a), OperandInfo::of(w.b)};
        out_ = OperandInfo::of(matmul_output_stats(w.a, w.b, hw.run_bits), p);
        break;
      case Kernel::SpTTM:
        ops_ = {OperandInfo::of(w.tensor), OperandInfo::dense(w.tensor.dims[2], w.factor_cols, p)};
        out_ = OperandInfo::of(spttm_output_stats(w.tensor, w.factor_cols), p);
        break;
      case Kernel::MTTKRP:
        ops_ = {OperandInfo::of(w.tensor), OperandInfo::dense(w.tensor.dims[1], w.factor_cols, p),
                OperandInfo::dense(w.tensor.dims[2], w.factor_cols, p)};
        out_ = OperandInfo::of(mttkrp_output_stats(w.tensor, w.factor_cols, hw.run_bits), p);
        break;
    }
  }

  const CandidateSets& sets() const { return sets_; }
  const WorkloadSpec& workload() const { return w_; }
  const HardwareConfig& hardware() const { return hw_; }

  bool valid(const ComboChoice& c) const {
    if (c.mcf.size() != ops_.size() || c.acf.size() != ops_.size()) return false;
    for (std::size_t i = 0; i < ops_.size(); ++i)
      if (!contains(sets_.mcf[i], c.mcf[i]) || !contains(sets_.acf[i], c.acf[i])) return false;
    return contains(sets_.out_mcf, c.out_mcf);
  }

  CostReport evaluate(const ComboChoice& c) {
    if (!valid(c)) throw Error("invalid combination for " + std::string(to_string(w_.kernel)) + ": " + c.label());
    CostReport r;
    r.combo = c;
    for (std::size_t i = 0; i < ops_.size(); ++i) {
      OperandCost oc = operand_cost(i, c.mcf[i], c.acf[i]);
      r.transfer_cycles += oc.dram.cycles;
      r.transfer_energy += oc.dram.energy;
      r.conversion_cycles += oc.conversion_cycles;
      r.conversion_energy += oc.conversion_energy;
      r.operands.push_back(oc);
    }
    r.compute = compute(c.acf);
    r.output = output_cost(c.out_mcf);
    r.conversion_energy += r.output.conversion_energy;
    const index_t in_phase = hw_.overlap_conversion ? std::max(r.transfer_cycles, r.conversion_cycles)
                                                    : r.transfer_cycles + r.conversion_cycles;
    const index_t out_phase = hw_.overlap_conversion
                                  ? std::max(r.output.dram.cycles, r.output.conversion_cycles)
                                  : r.output.dram.cycles + r.output.conversion_cycles;
    r.total_cycles = in_phase + r.compute.total_cycles + out_phase;
    r.total_energy = r.transfer_energy + r.conversion_energy + r.compute.energy + r.output.dram.energy;
    r.edp = r.total_energy * static_cast<double>(r.total_cycles);
    return r;
  }

 private:
  static bool contains(const std::vector<FormatId>& v, FormatId f) {
    return std::find(v.begin(), v.end(), f) != v.end();
  }

  OperandCost operand_cost(std::size_t i, FormatId mcf, FormatId acf) {
    auto key = std::tuple(i, mcf, acf);
    if (auto it = op_cache_.find(key); it != op_cache_.end()) return it->second;
    OperandCost oc{mcf, acf, ops_[i].storage(mcf, hw_.dtype_bits), {}, 0, 0.0};
    oc.dram = dram_cost(oc.storage.total_bits(), hw_);
    if (mcf != acf) {
      ConversionCost cc = conversion_cost(plan_conversion(mcf, acf, ops_[i].plan_stats(hw_), hw_), hw_);
      oc.conversion_cycles = cc.cycles;
      oc.conversion_energy = cc.energy;
    }
    return op_cache_[key] = oc;
  }

  OperandCost output_cost(FormatId mcf) {
    if (auto it = out_cache_.find(mcf); it != out_cache_.end()) return it->second;
    OperandCost oc{mcf, FormatId::Dense, out_.storage(mcf, hw_.dtype_bits), {}, 0, 0.0};
    oc.dram = dram_cost(oc.storage.total_bits(), hw_);
    if (mcf != FormatId::Dense) {
      ConversionCost cc = conversion_cost(plan_conversion(FormatId::Dense, mcf, out_.plan_stats(hw_), hw_), hw_);
      oc.conversion_cycles = cc.cycles;
      oc.conversion_energy = cc.energy;
    }
    return out_cache_[mcf] = oc;
  }

  const PerfReport& compute(const std::vector<FormatId>& acf) {
    if (auto it = sim_cache_.find(acf); it != sim_cache_.end()) return it->second;
    PerfReport p;
    switch (w_.kernel) {
      case Kernel::SpGEMM: p = simulate_ws(w_.a, w_.b, acf[0], acf[1], hw_); break;
      case Kernel::SpTTM: p = simulate_spttm(w_.tensor, acf[0], w_.factor_cols, hw_); break;
      case Kernel::MTTKRP: p = simulate_mttkrp(w_.tensor, acf[0], w_.factor_cols, hw_); break;
    }
    return sim_cache_[acf] = p;
  }

  const WorkloadSpec& w_;
  HardwareConfig hw_;
  CandidateSets sets_;
  std::vector<OperandInfo> ops_;
  OperandInfo out_;
  std::map<std::tuple<std::size_t, FormatId, FormatId>, OperandCost> op_cache_;
  std::map<FormatId, OperandCost> out_cache_;
  std::map<std::vector<FormatId>, PerfReport> sim_cache_;
};

inline CostReport evaluate_combo(const WorkloadSpec& w, const ComboChoice& c, const HardwareConfig& hw) {
  Evaluator ev(w, hw);
  return ev.evaluate(c);
}

/// Deterministic order: EDP, then formats in tie order operand by operand.
inline bool ranks_before(const CostReport& a, const CostReport& b) {
  if (a.edp != b.edp) return a.edp < b.edp;
  auto key = [](const ComboChoice& c) {
    std::vector<int> k;
    for (std::size_t i = 0; i < c.mcf.size(); ++i) {
      k.push_back(tie_order(c.mcf[i]));
      k.push_back(tie_order(c.acf[i]));
    }
    k.push_back(tie_order(c.out_mcf));
    return k;
  };
  return key(a.combo) < key(b.combo);
}

struct Recommendation {
  CostReport best;
  std::vector<CostReport> ranking;
};

/// Per-operand MCF constraint; nullopt leaves the operand free.
using FixedMcf = std::vector<std::optional<FormatId>>;

inline std::vector<ComboChoice> enumerate_combos(const CandidateSets& s, const FixedMcf& fixed = {}) {
  const std::size_t n = s.mcf.size();
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    if (i >= n) throw Error("fixed MCF given for a nonexistent operand");
    if (fixed[i] && std::find(s.mcf[i].begin(), s.mcf[i].end(), *fixed[i]) == s.mcf[i].end())
      throw Error("fixed MCF " + std::string(to_string(*fixed[i])) + " is not a candidate for operand " +
                  std::to_string(i));
  }
  std::vector<ComboChoice> out{ComboChoice{}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<ComboChoice> next;
    for (const auto& c : out)
      for (FormatId m : s.mcf[i]) {
        if (i < fixed.size() && fixed[i] && *fixed[i] != m) continue;
        for (FormatId a : s.acf[i]) {
          ComboChoice d = c;
          d.mcf.push_back(m);
          d.acf.push_back(a);
          next.push_back(std::move(d));
        }
      }
    out = std::move(next);
  }
  std::vector<ComboChoice> full;
  for (const auto& c : out)
    for (FormatId o : s.out_mcf) {
      ComboChoice d = c;
      d.out_mcf = o;
      full.push_back(std::move(d));
    }
  return full;
}

inline Recommendation recommend(Evaluator& ev, const FixedMcf& fixed = {}) {
  Recommendation r;
  for (const auto& c : enumerate_combos(ev.sets(), fixed)) r.ranking.push_back(ev.evaluate(c));
  std::sort(r.ranking.begin(), r.ranking.end(), ranks_before);
  r.best = r.ranking.front();
  return r;
}

inline Recommendation recommend(const WorkloadSpec& w, const HardwareConfig& hw, const FixedMcf& fixed = {}) {
  Evaluator ev(w, hw);
  return recommend(ev, fixed);
}

// ---------------------------------------------------------------------------
// Fixed-design accelerator archetypes (matrix products only)
// ---------------------------------------------------------------------------

struct Preset {
  std::string name;
  std::vector<ComboChoice> combos;  // the archetype may pick the best of these
};

inline std::vector<Preset> accelerator_presets() {
  using F = FormatId;
  auto c = [](F ma, F mb, F aa, F ab) { return ComboChoice{{ma, mb}, {aa, ab}, F::Dense}; };
  std::vector<Preset> p;
  p.push_back({"Fix_Fix_None", {c(F::Dense, F::Dense, F::Dense, F::Dense)}});
  p.push_back({"Fix_Fix_None2", {c(F::CSR, F::Dense, F::CSR, F::Dense)}});
  p.push_back({"Fix_Flex_HW", {c(F::Dense, F::CSC, F::Dense, F::CSC), c(F::ZVC, F::ZVC, F::CSR, F::Dense)}});
  Preset ffn{"Flex_Flex_None", {}};
  for (F a : {F::CSR, F::Dense})
    for (F b : {F::Dense, F::CSC}) ffn.combos.push_back(c(a, b, a, b));
  p.push_back(ffn);
  Preset ffh{"Flex_Fix_HW", {}};
  for (F a : {F::ZVC, F::Dense})
    for (F b : {F::ZVC, F::Dense}) ffh.combos.push_back(c(a, b, F::Dense, F::Dense));
  p.push_back(ffh);
  return p;
}

struct BaselineRow {
  std::string name;
  CostReport report;
};

/// Best combination of each archetype, followed by the unconstrained choice.
inline std::vector<BaselineRow> baseline_compare(Evaluator& ev) {
  if (ev.workload().kernel != Kernel::SpGEMM) throw Error("accelerator archetypes are defined for matrix products");
  std::vector<BaselineRow> rows;
  for (const auto& preset : accelerator_presets()) {
    std::optional<CostReport> best;
    for (const auto& c : preset.combos) {
      CostReport r = ev.evaluate(c);
      if (!best || ranks_before(r, *best)) best = r;
    }
    rows.push_back({preset.name, *best});
  }
  rows.push_back({"SAGE", recommend(ev).best});
  return rows;
}

inline std::vector<BaselineRow> baseline_compare(const WorkloadSpec& w, const HardwareConfig& hw) {
  Evaluator ev(w, hw);
  return baseline_compare(ev);
}

}  // namespace sparseflex
