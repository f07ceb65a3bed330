#include <fmt/core.h>

#include <CLI11.hpp>
#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sparseflex/sparseflex.hpp"

namespace sf = sparseflex;

namespace {

using sf::Error;
using sf::FormatId;
using sf::index_t;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(sf::detail::trim(item));
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const char* what) {
  std::vector<T> out;
  for (const auto& item : split(s, ',')) {
    T v{};
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || p != item.data() + item.size() || item.empty())
      throw Error(std::string("bad ") + what + " '" + item + "'");
    out.push_back(v);
  }
  return out;
}

sf::Dims3 parse_dims3(const std::string& s) {
  auto v = parse_list<index_t>(s, "dimension");
  if (v.size() != 3) throw Error("expected three comma-separated dims, got '" + s + "'");
  return {v[0], v[1], v[2]};
}

std::string num(double v) { return sf::format_number(v); }

// ---------------------------------------------------------------------------

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string tns_dims;

  sf::HardwareConfig hardware() const {
    sf::HardwareConfig hw;
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) throw Error("cannot open config '" + config + "'");
      hw = sf::parse_hardware_config(in);
    }
    for (const auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
      sf::set_field(hw, sf::detail::trim(kv.substr(0, eq)), sf::detail::trim(kv.substr(eq + 1)));
    }
    hw.check();
    return hw;
  }

  sf::StoredValue load(const std::string& path) const {
    std::optional<sf::Dims3> d;
    if (!tns_dims.empty()) d = parse_dims3(tns_dims);
    return sf::load_any(path, d);
  }

  void add_hw_options(CLI::App* app) {
    app->add_option("--config", config, "hardware config file (key = value lines)");
    app->add_option("--set", sets, "override one hardware field, key=value");
  }
};

bool is_matrix(const sf::StoredValue& v) { return std::holds_alternative<sf::FormattedMatrix>(v.value); }

sf::CooMatrix matrix_of(const sf::StoredValue& v, const std::string& path) {
  if (!is_matrix(v)) throw Error("'" + path + "' holds a tensor, expected a matrix");
  return sf::to_coo(std::get<sf::FormattedMatrix>(v.value));
}

sf::CooTensor3 tensor_of(const sf::StoredValue& v, const std::string& path) {
  if (is_matrix(v)) throw Error("'" + path + "' holds a matrix, expected a 3-D tensor");
  return sf::to_coo(std::get<sf::FormattedTensor3>(v.value));
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  index_t rows = 0, cols = 0;
  double density = -1.0;
  index_t nnz = -1;
  std::uint64_t seed = 0;
  std::string tensor, format = "COO", out;
  int dtype = 32;
};

void cmd_gen(const GenArgs& a) {
  sf::StoredValue sv{a.dtype, sf::FormattedMatrix{}};
  if (a.density < 0 && a.nnz < 0) throw Error("gen needs --density or --nnz");
  FormatId f = sf::parse_format(a.format);
  if (!a.tensor.empty()) {
    sf::Dims3 d = parse_dims3(a.tensor);
    sf::CooTensor3 t = a.nnz >= 0 ? sf::random_tensor(d, a.nnz, a.seed) : sf::random_tensor(d, a.density, a.seed);
    if (ends_with(a.out, ".tns")) return sf::write_file_atomic(a.out, sf::write_tns(t));
    sv.value = sf::from_coo(t, f, {});
  } else {
    if (a.rows <= 0 || a.cols <= 0) throw Error("gen needs --rows and --cols (or --tensor)");
    sf::CooMatrix c =
        a.nnz >= 0 ? sf::random_matrix(a.rows, a.cols, a.nnz, a.seed) : sf::random_matrix(a.rows, a.cols, a.density, a.seed);
    if (ends_with(a.out, ".mtx")) return sf::write_file_atomic(a.out, sf::write_mtx(c));
    sv.value = sf::from_coo(c, f, {});
  }
  sf::write_container_file(a.out, sv);
}

// ---------------------------------------------------------------------------
// inspect

void print_storage_row(FormatId f, const sf::StorageBreakdown& s) {
  fmt::print("{},{},{},{},{}\n", sf::to_string(f), s.data_bits, s.metadata_bits, s.total_bits(),
             num(s.metadata_fraction()));
}

void cmd_inspect(const Common& c, const std::string& path, int dtype) {
  sf::StoredValue v = c.load(path);
  const int b = dtype > 0 ? dtype : v.dtype_bits;
  if (is_matrix(v)) {
    const auto& m = std::get<sf::FormattedMatrix>(v.value);
    auto [M, K] = sf::shape_of(m);
    auto nd = sf::nnz_density(m);
    fmt::print("rank=2\nformat={}\ndims={}x{}\nnnz={}\ndensity={}\ndtype_bits={}\n", sf::to_string(sf::format_of(m)),
               M, K, nd.nnz, num(nd.density), b);
    sf::FormatParams p;
    sf::MatrixProfile prof = sf::MatrixProfile::from_coo(sf::to_coo(m), p);
    fmt::print("format,data_bits,metadata_bits,total_bits,metadata_fraction\n");
    for (FormatId f : {FormatId::Dense, FormatId::COO, FormatId::CSR, FormatId::CSC, FormatId::BSR, FormatId::RLC,
                       FormatId::ZVC})
      print_storage_row(f, prof.storage(f, b));
  } else {
    const auto& t = std::get<sf::FormattedTensor3>(v.value);
    sf::Dims3 d = sf::shape_of(t);
    auto nd = sf::nnz_density(t);
    fmt::print("rank=3\nformat={}\ndims={}x{}x{}\nnnz={}\ndensity={}\ndtype_bits={}\n",
               sf::to_string(sf::format_of(t)), d[0], d[1], d[2], nd.nnz, num(nd.density), b);
    sf::TensorProfile prof = sf::TensorProfile::from_coo(sf::to_coo(t), {});
    fmt::print("format,data_bits,metadata_bits,total_bits,metadata_fraction\n");
    for (FormatId f : {FormatId::Dense, FormatId::COO, FormatId::ZVC, FormatId::CSF})
      print_storage_row(f, prof.storage(f, b));
  }
}

// ---------------------------------------------------------------------------
// convert

struct ConvertArgs {
  std::string input, to, block, order, out;
  int run_bits = -1;
};

void print_cost(const sf::ConversionPlan& plan, const sf::ConversionCost& cost) {
  fmt::print("route={}\ncycles={}\nenergy={}\nops={}\n", plan.empty() ? "identity" : plan.route(), cost.cycles,
             num(cost.energy), num(cost.ops));
  for (const auto& s : cost.breakdown)
    fmt::print("stage {} [{}] elements={} cycles={} fill={} energy={}\n", s.label, sf::to_string(s.block), s.elements,
               s.cycles, s.fill, num(s.energy));
}

void cmd_convert(const Common& c, const ConvertArgs& a) {
  sf::HardwareConfig hw = c.hardware();
  sf::StoredValue v = c.load(a.input);
  FormatId dst = sf::parse_format(a.to);
  sf::FormatParams p;
  if (a.run_bits >= 0) hw.run_bits = a.run_bits;
  p.run_bits = hw.run_bits;
  if (!a.block.empty()) {
    auto rc = parse_list<index_t>(a.block, "block size");
    if (rc.size() != 2) throw Error("--block expects R,C");
    p.block_rows = rc[0];
    p.block_cols = rc[1];
  }
  if (!a.order.empty()) {
    auto o = parse_list<int>(a.order, "mode");
    if (o.size() != 3) throw Error("--order expects three modes, e.g. 0,1,2");
    p.mode_order = {o[0], o[1], o[2]};
  }
  sf::StoredValue out{v.dtype_bits, sf::FormattedMatrix{}};
  if (is_matrix(v)) {
    auto r = sf::convert(std::get<sf::FormattedMatrix>(v.value), dst, hw, p);
    out.value = std::move(r.value);
    print_cost(r.plan, r.cost);
  } else {
    auto r = sf::convert(std::get<sf::FormattedTensor3>(v.value), dst, hw, p);
    out.value = std::move(r.value);
    print_cost(r.plan, r.cost);
  }
  // Serialize fully before touching the destination.
  std::string bytes = sf::write_container(out);
  if (!a.out.empty()) sf::write_file_atomic(a.out, bytes);
}

// ---------------------------------------------------------------------------
// simulate

struct SimArgs {
  std::string a, b, acf_a = "Dense", acf_b = "Dense", kernel = "spgemm", csv;
  index_t factor_cols = 0;
};

constexpr const char* kPerfHeader =
    "load_cycles,stream_cycles,total_cycles,useful_macs,executed_macs,pe_utilization,buffer_metadata_elems,"
    "buffer_data_elems,k_tiles,col_tiles,streamed_elems,loaded_elems,flushes,write_back_cycles,energy";

std::string perf_csv(const sf::PerfReport& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", r.load_cycles, r.stream_cycles, r.total_cycles,
                     num(r.useful_macs), num(r.executed_macs), num(r.pe_utilization), num(r.buffer_metadata_elems),
                     num(r.buffer_data_elems), r.k_tiles, r.col_tiles, num(r.streamed_elems), num(r.loaded_elems),
                     num(r.flushes), r.write_back_cycles, num(r.energy));
}

void cmd_simulate(const Common& c, const SimArgs& a) {
  sf::HardwareConfig hw = c.hardware();
  sf::Kernel k = sf::parse_kernel(a.kernel);
  sf::PerfReport r;
  sf::StoredValue va = c.load(a.a);
  if (k == sf::Kernel::SpGEMM) {
    if (a.b.empty()) throw Error("simulate spgemm needs operands A and B");
    sf::MatrixProfile A = sf::MatrixProfile::from_coo(matrix_of(va, a.a), {}, false);
    sf::MatrixProfile B = sf::MatrixProfile::from_coo(matrix_of(c.load(a.b), a.b), {}, false);
    r = sf::simulate_ws(A, B, sf::parse_format(a.acf_a), sf::parse_format(a.acf_b), hw);
  } else {
    if (a.factor_cols < 1) throw Error("tensor kernels need --factor-cols");
    sf::TensorProfile T = sf::TensorProfile::from_coo(tensor_of(va, a.a), {});
    FormatId acf = sf::parse_format(a.acf_a);
    r = k == sf::Kernel::SpTTM ? sf::simulate_spttm(T, acf, a.factor_cols, hw)
                               : sf::simulate_mttkrp(T, acf, a.factor_cols, hw);
  }
  auto names = split(kPerfHeader, ',');
  auto values = split(perf_csv(r), ',');
  for (std::size_t i = 0; i < names.size(); ++i) fmt::print("{}={}\n", names[i], values[i]);
  if (!a.csv.empty())
    sf::write_file_atomic(a.csv, std::string("acf_a,acf_b,") + kPerfHeader + "\n" + a.acf_a + "," + a.acf_b + "," +
                                     perf_csv(r) + "\n");
}

// ---------------------------------------------------------------------------
// recommend

struct RecArgs {
  std::vector<std::string> inputs;
  std::string kernel, fixed, out;
  index_t factor_cols = 0;
  bool baselines = false;
};

std::string report_row(const sf::CostReport& r) {
  double bits = 0;
  for (const auto& o : r.operands) bits += static_cast<double>(o.storage.total_bits());
  bits += static_cast<double>(r.output.storage.total_bits());
  return fmt::format("{},{},{},{},{}", r.combo.label(), num(bits), r.total_cycles, num(r.total_energy), num(r.edp));
}

void cmd_recommend(const Common& c, const RecArgs& a) {
  sf::HardwareConfig hw = c.hardware();
  sf::StoredValue v0 = c.load(a.inputs[0]);
  sf::WorkloadSpec w;
  if (is_matrix(v0)) {
    if (a.inputs.size() != 2) throw Error("matrix products need operands A and B");
    w = sf::matmul_workload(matrix_of(v0, a.inputs[0]), matrix_of(c.load(a.inputs[1]), a.inputs[1]), hw, a.inputs[0]);
  } else {
    sf::Kernel k = sf::parse_kernel(a.kernel.empty() ? "spttm" : a.kernel);
    if (k == sf::Kernel::SpGEMM) throw Error("a tensor operand needs --kernel spttm or mttkrp");
    index_t F = a.factor_cols;
    if (a.inputs.size() > 1) {
      sf::CooMatrix f = matrix_of(c.load(a.inputs[1]), a.inputs[1]);
      if (F > 0 && F != f.cols) throw Error("--factor-cols disagrees with the factor file");
      F = f.cols;
    }
    if (F < 1) throw Error("tensor kernels need a factor file or --factor-cols");
    w = sf::tensor_workload(k, tensor_of(v0, a.inputs[0]), F, hw, a.inputs[0]);
  }
  sf::FixedMcf fixed;
  if (!a.fixed.empty())
    for (const auto& item : split(a.fixed, ','))
      fixed.push_back(item == "-" || item.empty() ? std::nullopt : std::optional<FormatId>(sf::parse_format(item)));
  sf::Evaluator ev(w, hw);
  sf::Recommendation rec = sf::recommend(ev, fixed);
  std::string csv = "combo,total_bits,cycles,energy,edp\n";
  for (const auto& r : rec.ranking) csv += report_row(r) + "\n";
  if (a.baselines) {
    csv += "\narchetype,combo,total_bits,cycles,energy,edp\n";
    for (const auto& row : sf::baseline_compare(ev)) csv += row.name + "," + report_row(row.report) + "\n";
  }
  if (a.out.empty()) fmt::print("{}", csv);
  else {
    sf::write_file_atomic(a.out, csv);
    fmt::print("best={}\n", rec.best.combo.label());
  }
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string dims, densities, formats = "Dense,COO,CSR,CSC,RLC,ZVC", out, acf_out, dtypes = "32";
  index_t n = 0;
  std::uint64_t seed = 1;
};

void cmd_sweep(const Common& c, const SweepArgs& a) {
  sf::HardwareConfig hw = c.hardware();
  auto mk = parse_list<index_t>(a.dims, "dimension");
  if (mk.size() != 2) throw Error("--dims expects M,K");
  const index_t M = mk[0], K = mk[1];
  auto dens = parse_list<double>(a.densities, "density");
  auto dts = parse_list<int>(a.dtypes, "dtype");
  std::vector<FormatId> fmts;
  for (const auto& f : split(a.formats, ',')) fmts.push_back(sf::parse_format(f));
  sf::FormatParams p;
  p.run_bits = hw.run_bits;

  std::string csv = "dtype_bits,density,nnz,format,data_bits,metadata_bits,total_bits,metadata_fraction,is_min\n";
  for (int b : dts)
    for (double d : dens) {
      const index_t nnz = sf::target_nnz(d, static_cast<double>(M) * static_cast<double>(K));
      std::vector<sf::RankedFormat> rows;
      for (FormatId f : fmts) rows.push_back({f, sf::matrix_storage_bits(f, M, K, nnz, b, p)});
      auto ranked = rows;
      sf::sort_ranking(ranked);
      for (const auto& r : rows)
        csv += fmt::format("{},{},{},{},{},{},{},{},{}\n", b, num(d), nnz, sf::to_string(r.format), r.storage.data_bits,
                           r.storage.metadata_bits, r.storage.total_bits(), num(r.storage.metadata_fraction()),
                           r.format == ranked.front().format ? 1 : 0);
    }

  std::string acf;
  if (!a.acf_out.empty()) {
    const index_t N = a.n > 0 ? a.n : K;
    acf = "density,acf_a,acf_b,total_cycles,load_cycles,stream_cycles,useful_macs,pe_utilization\n";
    for (double d : dens) {
      sf::MatrixProfile A = sf::MatrixProfile::from_coo(sf::random_matrix(M, K, d, a.seed), {}, false);
      sf::MatrixProfile B =
          sf::MatrixProfile::from_coo(sf::random_matrix(K, N, d, a.seed ^ 0x9e3779b97f4a7c15ULL), {}, false);
      for (FormatId fa : {FormatId::Dense, FormatId::CSR, FormatId::CSC, FormatId::COO})
        for (FormatId fb : {FormatId::Dense, FormatId::CSC}) {
          sf::PerfReport r = sf::simulate_ws(A, B, fa, fb, hw);
          acf += fmt::format("{},{},{},{},{},{},{},{}\n", num(d), sf::to_string(fa), sf::to_string(fb), r.total_cycles,
                             r.load_cycles, r.stream_cycles, num(r.useful_macs), num(r.pe_utilization));
        }
    }
  }
  if (a.out.empty()) fmt::print("{}", csv);
  else sf::write_file_atomic(a.out, csv);
  if (!a.acf_out.empty()) sf::write_file_atomic(a.acf_out, acf);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse format conversion, cost modeling and recommendation"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--tns-dims", common.tns_dims, "override .tns dims, d0,d1,d2");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a uniform-random sparse matrix or tensor");
  g->add_option("--rows", gen.rows);
  g->add_option("--cols", gen.cols);
  g->add_option("--density", gen.density);
  g->add_option("--nnz", gen.nnz, "exact nonzero count (instead of --density)");
  g->add_option("--seed", gen.seed);
  g->add_option("--tensor", gen.tensor, "tensor dims d0,d1,d2");
  g->add_option("--format", gen.format, "stored format (container output)");
  g->add_option("--dtype", gen.dtype, "value width, 32 or 64");
  g->add_option("-o,--out", gen.out, "output: .mtx, .tns or container")->required();

  std::string inspect_path;
  int inspect_dtype = 0;
  auto* in = app.add_subcommand("inspect", "dims, nnz, density and storage per format");
  in->add_option("file", inspect_path)->required();
  in->add_option("--dtype", inspect_dtype, "value width for the storage table");

  ConvertArgs conv;
  auto* cv = app.add_subcommand("convert", "convert through the modeled conversion engine");
  cv->add_option("file", conv.input)->required();
  cv->add_option("--to", conv.to)->required();
  cv->add_option("--block", conv.block, "BSR block R,C");
  cv->add_option("--run-bits", conv.run_bits, "RLC run-length bits");
  cv->add_option("--order", conv.order, "CSF mode order, e.g. 2,0,1");
  cv->add_option("-o,--out", conv.out, "container output");
  common.add_hw_options(cv);

  SimArgs sim;
  auto* sm = app.add_subcommand("simulate", "weight-stationary compute model");
  sm->add_option("a", sim.a)->required();
  sm->add_option("b", sim.b);
  sm->add_option("--acf-a", sim.acf_a);
  sm->add_option("--acf-b", sim.acf_b);
  sm->add_option("--kernel", sim.kernel, "spgemm, spttm or mttkrp");
  sm->add_option("--factor-cols", sim.factor_cols);
  sm->add_option("--csv", sim.csv, "also write a CSV row");
  common.add_hw_options(sm);

  RecArgs rec;
  auto* rc = app.add_subcommand("recommend", "rank format combinations by energy-delay product");
  rc->add_option("inputs", rec.inputs)->required()->expected(1, 3);
  rc->add_option("--kernel", rec.kernel, "spttm or mttkrp for tensor inputs");
  rc->add_option("--factor-cols", rec.factor_cols);
  rc->add_option("--fixed-mcf", rec.fixed, "per operand, '-' leaves it free, e.g. COO,-");
  rc->add_flag("--baselines", rec.baselines, "append the fixed accelerator archetypes");
  rc->add_option("-o,--out", rec.out, "CSV output (stdout if omitted)");
  common.add_hw_options(rc);

  SweepArgs sw;
  auto* sp = app.add_subcommand("sweep", "storage and compute tables across densities");
  sp->add_option("--dims", sw.dims, "M,K")->required();
  sp->add_option("--densities", sw.densities)->required();
  sp->add_option("--formats", sw.formats);
  sp->add_option("--dtypes", sw.dtypes, "value widths, e.g. 32,16,8");
  sp->add_option("-o,--out", sw.out, "storage CSV (stdout if omitted)");
  sp->add_option("--acf-out", sw.acf_out, "compute CSV over ACF pairs");
  sp->add_option("--n", sw.n, "columns of B for the compute table (default K)");
  sp->add_option("--seed", sw.seed);
  common.add_hw_options(sp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*g) cmd_gen(gen);
    else if (*in) cmd_inspect(common, inspect_path, inspect_dtype);
    else if (*cv) cmd_convert(common, conv);
    else if (*sm) cmd_simulate(common, sim);
    else if (*rc) cmd_recommend(common, rec);
    else if (*sp) cmd_sweep(common, sw);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
